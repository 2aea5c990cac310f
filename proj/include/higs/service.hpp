#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <httplib.h>

#include "higs/external.hpp"
#include "higs/pipeline.hpp"
#include "higs/procedural.hpp"
#include "higs/serialize.hpp"
#include "higs/session_io.hpp"

namespace higs::service {

using io::Json;

struct Response {
    int status{200};
    Json body;
    /// Session revision, sent back as ETag.
    std::optional<std::uint64_t> revision;
};

struct ServiceConfig {
    io::BackendInfo backend;
    std::optional<external::EndpointSpec> endpoint;
    int maxPasses{8};
};

inline Response error_response(int status, std::string_view code, const std::string& message) {
    Json body;
    body["error"] = code;
    body["message"] = message;
    return {status, std::move(body), std::nullopt};
}

/// Maps library errors to HTTP statuses.
inline Response from_error(const Error& e) {
    switch (e.code()) {
        case Errc::UnknownNid:
        case Errc::UnknownAnchor: return error_response(404, to_string(e.code()), e.what());
        case Errc::AdapterFailure: return error_response(502, to_string(e.code()), e.what());
        default: return error_response(422, to_string(e.code()), e.what());
    }
}

/// Session store behind the HTTP API. Each session has its own mutex, so
/// mutations of one session are serialized while different sessions proceed
/// in parallel. Readers copy the session under the lock and serialize the
/// copy outside it.
class SessionService {
public:
    explicit SessionService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.endpoint)
            adapters_ = external::external_adapter_config(*cfg_.endpoint);
        else
            adapters_ = procedural::procedural_backend(cfg_.backend.seed);
    }

    const pipeline::BackendAdapters& adapters() const { return adapters_; }
    const ServiceConfig& config() const { return cfg_; }

    Response create_session(const std::string& rawBody) {
        Json body;
        if (auto err = parse_body(rawBody, body)) return *err;
        auto text = string_member(body, "text");
        if (!text || text->empty()) return error_response(422, "InvalidBody", "'text' must be a non-empty string");
        auto seed = seed_member(body);
        if (!seed) return error_response(422, "InvalidBody", "'seed' must be a non-negative integer");

        std::string id;
        {
            std::unique_lock lock(mapMutex_);
            id = "s" + std::to_string(++counter_);
        }
        pipeline::SceneSession fresh;
        fresh.sessionId = id;
        auto slot = std::make_shared<Slot>();
        try {
            slot->session = pipeline::run_step(fresh, adapters_, pipeline::kFloorAnchor, *text, *seed, step_options());
        } catch (const Error& e) {
            return from_error(e);
        }
        slot->lastReport = slot->session.log.back().merge.report;
        const auto snapshot = slot->session;
        {
            std::unique_lock lock(mapMutex_);
            sessions_[id] = slot;
        }
        Json out;
        out["sessionId"] = id;
        out["revision"] = snapshot.revision;
        out["stepIndex"] = snapshot.step_index();
        out["scene"] = io::scene_json(snapshot.global, scene_meta(snapshot));
        out["report"] = io::report_json(snapshot.log.back().merge.report);
        return {201, std::move(out), snapshot.revision};
    }

    Response get_session(const std::string& id) const {
        auto snap = snapshot(id);
        if (!snap) return unknown_session(id);
        Json out;
        out["sessionId"] = snap->sessionId;
        out["revision"] = snap->revision;
        out["stepIndex"] = snap->step_index();
        out["nodeCount"] = snap->global.size();
        out["styleText"] = snap->styleText;
        Json steps = Json::array();
        for (const auto& r : snap->log) {
            Json s;
            s["stepIndex"] = r.stepIndex;
            s["anchorNid"] = r.anchorNid;
            s["userText"] = r.userText;
            s["seed"] = r.seed;
            s["viewpoint"] = r.viewpoint;
            Json nids = Json::array();
            for (const auto& [l, g] : r.merge.nidMap) nids.push_back(g);
            s["newNids"] = std::move(nids);
            s["edits"] = r.edits.size();
            steps.push_back(std::move(s));
        }
        out["steps"] = std::move(steps);
        return {200, std::move(out), snap->revision};
    }

    Response get_scene(const std::string& id) const {
        auto snap = snapshot(id);
        if (!snap) return unknown_session(id);
        return {200, io::scene_json(snap->global, scene_meta(*snap)), snap->revision};
    }

    /// Hierarchy view: each node with its strong parent and depth.
    Response get_graph(const std::string& id) const {
        auto snap = snapshot(id);
        if (!snap) return unknown_session(id);
        const Graph& g = snap->global;
        Json nodes = Json::array();
        for (const auto& [nid, n] : g.nodes()) {
            Json j;
            j["nid"] = nid;
            j["category"] = n.category;
            auto pe = g.strong_parent_edge(nid);
            j["parent"] = pe ? Json(pe->src) : Json(nullptr);
            j["relation"] = pe ? Json(pe->relation.name()) : Json(nullptr);
            int depth = 0;
            for (auto p = g.strong_parent(nid); p; p = g.strong_parent(*p)) ++depth;
            j["depth"] = depth;
            nodes.push_back(std::move(j));
        }
        Json edges = Json::array();
        for (const auto& e : g.edges()) edges.push_back(io::edge_json(e));
        Json roots = Json::array();
        for (Nid r : g.strong_roots()) roots.push_back(r);
        Json out;
        out["revision"] = snap->revision;
        out["nodes"] = std::move(nodes);
        out["edges"] = std::move(edges);
        out["roots"] = std::move(roots);
        return {200, std::move(out), snap->revision};
    }

    Response get_report(const std::string& id) const {
        auto slot = find(id);
        if (!slot) return unknown_session(id);
        std::lock_guard lock(slot->mutex);
        Json out;
        out["revision"] = slot->session.revision;
        out["report"] = io::report_json(slot->lastReport);
        return {200, std::move(out), slot->session.revision};
    }

    Response post_step(const std::string& id, const std::string& rawBody, const std::optional<std::string>& ifMatch) {
        auto slot = find(id);
        if (!slot) return unknown_session(id);
        Json body;
        if (auto err = parse_body(rawBody, body)) return *err;
        auto text = string_member(body, "text");
        if (!text || text->empty()) return error_response(422, "InvalidBody", "'text' must be a non-empty string");
        if (!body.contains("anchor") || !body["anchor"].is_number_integer())
            return error_response(422, "InvalidBody", "'anchor' must be an integer nid");
        const Nid anchor = body["anchor"].get<Nid>();
        auto seed = seed_member(body);
        if (!seed) return error_response(422, "InvalidBody", "'seed' must be a non-negative integer");

        std::lock_guard lock(slot->mutex);
        if (auto conflict = check_revision(*slot, ifMatch)) return *conflict;
        pipeline::SceneSession next;
        try {
            next = pipeline::run_step(slot->session, adapters_, anchor, *text, *seed, step_options());
        } catch (const Error& e) {
            return from_error(e);
        }
        slot->session = std::move(next);
        const auto& rec = slot->session.log.back();
        slot->lastReport = rec.merge.report;
        Json out;
        out["revision"] = slot->session.revision;
        out["stepIndex"] = rec.stepIndex;
        Json nids = Json::array();
        for (const auto& [l, g] : rec.merge.nidMap) nids.push_back(g);
        out["newNids"] = std::move(nids);
        out["report"] = io::report_json(rec.merge.report);
        out["warnings"] = io::strings_json(rec.warnings);
        return {201, std::move(out), slot->session.revision};
    }

    Response patch_node(const std::string& id, Nid nid, const std::string& rawBody,
                        const std::optional<std::string>& ifMatch) {
        auto slot = find(id);
        if (!slot) return unknown_session(id);
        Json body;
        if (auto err = parse_body(rawBody, body)) return *err;
        const bool hasPos = body.contains("pos");
        const bool hasRot = body.contains("rot");
        if (!hasPos && !hasRot) return error_response(422, "InvalidBody", "need 'pos' and/or 'rot'");
        Vec3 pos, rot;
        try {
            if (hasPos) pos = io::read_vec3(body["pos"], "pos");
            if (hasRot) rot = io::read_vec3(body["rot"], "rot");
        } catch (const Error& e) {
            return error_response(422, "InvalidBody", e.what());
        }

        std::lock_guard lock(slot->mutex);
        if (auto conflict = check_revision(*slot, ifMatch)) return *conflict;
        if (!slot->session.global.contains(nid))
            return error_response(404, "UnknownNid", "no node " + std::to_string(nid));
        const ObjectNode& cur = slot->session.global.node(nid);
        pipeline::EditRecord edit;
        edit.kind = pipeline::EditRecord::Kind::Pose;
        edit.nid = nid;
        edit.pos = hasPos ? pos : cur.pos;
        edit.rot = hasRot ? rot : cur.rot;
        return apply(*slot, edit);
    }

    Response delete_node(const std::string& id, Nid nid, bool cascade, const std::optional<std::string>& ifMatch) {
        auto slot = find(id);
        if (!slot) return unknown_session(id);
        std::lock_guard lock(slot->mutex);
        if (auto conflict = check_revision(*slot, ifMatch)) return *conflict;
        if (!slot->session.global.contains(nid))
            return error_response(404, "UnknownNid", "no node " + std::to_string(nid));
        pipeline::EditRecord edit;
        edit.kind = pipeline::EditRecord::Kind::Remove;
        edit.nid = nid;
        edit.cascade = cascade;
        return apply(*slot, edit);
    }

    /// Copy of a session's current state, or empty if unknown.
    std::optional<pipeline::SceneSession> snapshot(const std::string& id) const {
        auto slot = find(id);
        if (!slot) return std::nullopt;
        std::lock_guard lock(slot->mutex);
        return slot->session;
    }

    std::string export_session(const std::string& id) const {
        auto snap = snapshot(id);
        if (!snap) throw Error(Errc::InvalidArgument, "unknown session " + id);
        return io::save_session(*snap, cfg_.backend);
    }

    void install(httplib::Server& server) {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        auto send = [](httplib::Response& res, const Response& r) {
            res.status = r.status;
            if (r.revision) res.set_header("ETag", "\"" + std::to_string(*r.revision) + "\"");
            res.set_content(r.body.dump(), "application/json");
        };
        auto if_match = [](const httplib::Request& req) -> std::optional<std::string> {
            if (!req.has_header("If-Match")) return std::nullopt;
            return req.get_header_value("If-Match");
        };
        server.Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, create_session(req.body));
        });
        server.Get(R"(/sessions/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, get_session(req.matches[1]));
        });
        server.Get(R"(/sessions/([^/]+)/scene)", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, get_scene(req.matches[1]));
        });
        server.Get(R"(/sessions/([^/]+)/graph)", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, get_graph(req.matches[1]));
        });
        server.Get(R"(/sessions/([^/]+)/report)", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, get_report(req.matches[1]));
        });
        server.Post(R"(/sessions/([^/]+)/steps)",
                    [this, send, if_match](const httplib::Request& req, httplib::Response& res) {
                        send(res, post_step(req.matches[1], req.body, if_match(req)));
                    });
        server.Patch(R"(/sessions/([^/]+)/nodes/(-?\d+))",
                     [this, send, if_match](const httplib::Request& req, httplib::Response& res) {
                         send(res, patch_node(req.matches[1], std::stoll(req.matches[2]), req.body, if_match(req)));
                     });
        server.Delete(R"(/sessions/([^/]+)/nodes/(-?\d+))",
                      [this, send, if_match](const httplib::Request& req, httplib::Response& res) {
                          const std::string c = req.has_param("cascade") ? req.get_param_value("cascade") : "false";
                          if (c != "true" && c != "false") {
                              send(res, error_response(422, "InvalidBody", "cascade must be true or false"));
                              return;
                          }
                          send(res, delete_node(req.matches[1], std::stoll(req.matches[2]), c == "true",
                                                if_match(req)));
                      });
    }

private:
    struct Slot {
        mutable std::mutex mutex;
        pipeline::SceneSession session;
        layout::LayoutReport lastReport;
    };

    std::shared_ptr<Slot> find(const std::string& id) const {
        std::shared_lock lock(mapMutex_);
        auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    pipeline::StepOptions step_options() const {
        pipeline::StepOptions o;
        o.maxPasses = cfg_.maxPasses;
        return o;
    }

    io::SceneMeta scene_meta(const pipeline::SceneSession& s) const {
        return {"", cfg_.backend.seed, static_cast<std::int64_t>(s.log.size())};
    }

    Response apply(Slot& slot, const pipeline::EditRecord& edit) {
        pipeline::SceneSession next = slot.session;
        layout::LayoutReport report;
        try {
            report = pipeline::apply_edit(next, edit, cfg_.maxPasses);
        } catch (const Error& e) {
            return from_error(e);
        }
        slot.session = std::move(next);
        slot.lastReport = report;
        Json out;
        out["revision"] = slot.session.revision;
        out["report"] = io::report_json(report);
        return {200, std::move(out), slot.session.revision};
    }

    static std::optional<Response> check_revision(const Slot& slot, const std::optional<std::string>& ifMatch) {
        if (!ifMatch) return std::nullopt;
        std::string v = *ifMatch;
        if (v.starts_with("W/")) v = v.substr(2);
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
        std::uint64_t want = 0;
        try {
            std::size_t used = 0;
            want = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            return error_response(422, "InvalidBody", "If-Match must carry a revision number");
        }
        if (want != slot.session.revision) {
            Response r = error_response(409, "RevisionConflict",
                                        "expected revision " + std::to_string(slot.session.revision));
            r.body["revision"] = slot.session.revision;
            r.revision = slot.session.revision;
            return r;
        }
        return std::nullopt;
    }

    static Response unknown_session(const std::string& id) {
        return error_response(404, "UnknownSession", "no session " + id);
    }

    static std::optional<Response> parse_body(const std::string& raw, Json& out) {
        try {
            out = Json::parse(raw);
        } catch (const nlohmann::json::exception& e) {
            return error_response(422, "InvalidBody", std::string("malformed JSON: ") + e.what());
        }
        if (!out.is_object()) return error_response(422, "InvalidBody", "body must be a JSON object");
        return std::nullopt;
    }

    static std::optional<std::string> string_member(const Json& j, const char* key) {
        if (!j.contains(key) || !j[key].is_string()) return std::nullopt;
        return j[key].get<std::string>();
    }

    static std::optional<std::uint64_t> seed_member(const Json& j) {
        if (!j.contains("seed")) return 0;
        const Json& s = j["seed"];
        if (s.is_number_unsigned()) return s.get<std::uint64_t>();
        if (s.is_number_integer() && s.get<std::int64_t>() >= 0) return s.get<std::uint64_t>();
        return std::nullopt;
    }

    ServiceConfig cfg_;
    pipeline::BackendAdapters adapters_;
    mutable std::shared_mutex mapMutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::uint64_t counter_{0};
};

}  // namespace higs::service
