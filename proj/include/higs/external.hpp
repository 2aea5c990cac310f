#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "higs/pipeline.hpp"

namespace higs::external {

using WireJson = nlohmann::json;

// Wire schemas. Doubles travel at full precision so a remote backend that
// mirrors the procedural one reproduces it bit for bit.

inline WireJson vec_wire(const Vec3& v) { return WireJson::array({v.x, v.y, v.z}); }

inline Vec3 wire_vec(const WireJson& j, const char* stage, const char* what) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number())
        throw AdapterError(stage, AdapterCause::BadSchema, std::string(what) + " must be [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline const WireJson& wire_field(const WireJson& j, const char* key, const char* stage) {
    if (!j.is_object() || !j.contains(key))
        throw AdapterError(stage, AdapterCause::BadSchema, std::string("missing field '") + key + "'");
    return j.at(key);
}

inline WireJson specs_to_wire(const std::vector<pipeline::ObjectSpec>& specs) {
    WireJson arr = WireJson::array();
    for (const auto& s : specs)
        arr.push_back({{"category", s.category}, {"extents", vec_wire(s.approxExtents)}, {"count", s.count}});
    return {{"objects", arr}};
}

inline std::vector<pipeline::ObjectSpec> specs_from_wire(const WireJson& j) {
    constexpr const char* stage = "objectLister";
    const WireJson& arr = wire_field(j, "objects", stage);
    if (!arr.is_array()) throw AdapterError(stage, AdapterCause::BadSchema, "'objects' must be an array");
    std::vector<pipeline::ObjectSpec> out;
    for (const auto& o : arr) {
        const WireJson& cat = wire_field(o, "category", stage);
        const WireJson& count = wire_field(o, "count", stage);
        if (!cat.is_string() || !count.is_number_integer())
            throw AdapterError(stage, AdapterCause::BadSchema, "bad category/count type");
        out.push_back({cat.get<std::string>(), wire_vec(wire_field(o, "extents", stage), stage, "extents"),
                       count.get<int>()});
    }
    pipeline::check_specs(out);
    return out;
}

inline WireJson perceived_to_wire(const std::vector<pipeline::PerceivedObject>& objs) {
    WireJson arr = WireJson::array();
    for (const auto& o : objs)
        arr.push_back({{"category", o.category},
                       {"pos", vec_wire(o.pos)},
                       {"yaw", o.yaw},
                       {"halfExtents", vec_wire(o.halfExtents)},
                       {"scale", o.scale}});
    return {{"objects", arr}};
}

inline std::vector<pipeline::PerceivedObject> perceived_from_wire(const WireJson& j) {
    constexpr const char* stage = "reconstructor";
    const WireJson& arr = wire_field(j, "objects", stage);
    if (!arr.is_array()) throw AdapterError(stage, AdapterCause::BadSchema, "'objects' must be an array");
    std::vector<pipeline::PerceivedObject> out;
    for (const auto& o : arr) {
        const WireJson& cat = wire_field(o, "category", stage);
        const WireJson& yaw = wire_field(o, "yaw", stage);
        const WireJson& scale = wire_field(o, "scale", stage);
        if (!cat.is_string() || !yaw.is_number() || !scale.is_number())
            throw AdapterError(stage, AdapterCause::BadSchema, "bad category/yaw/scale type");
        pipeline::PerceivedObject p;
        p.category = cat.get<std::string>();
        p.pos = wire_vec(wire_field(o, "pos", stage), stage, "pos");
        p.yaw = yaw.get<double>();
        p.halfExtents = wire_vec(wire_field(o, "halfExtents", stage), stage, "halfExtents");
        p.scale = scale.get<double>();
        out.push_back(std::move(p));
    }
    pipeline::check_perceived(out);
    return out;
}

inline WireJson edges_to_wire(const std::vector<RelationEdge>& edges) {
    WireJson arr = WireJson::array();
    for (const auto& e : edges) arr.push_back({{"src", e.src}, {"dst", e.dst}, {"relation", e.relation.name()}});
    return {{"edges", arr}};
}

inline std::vector<RelationEdge> edges_from_wire(const WireJson& j) {
    constexpr const char* stage = "relationEstimator";
    const WireJson& arr = wire_field(j, "edges", stage);
    if (!arr.is_array()) throw AdapterError(stage, AdapterCause::BadSchema, "'edges' must be an array");
    std::vector<RelationEdge> out;
    for (const auto& e : arr) {
        const WireJson& src = wire_field(e, "src", stage);
        const WireJson& dst = wire_field(e, "dst", stage);
        const WireJson& rel = wire_field(e, "relation", stage);
        if (!src.is_number_integer() || !dst.is_number_integer() || !rel.is_string())
            throw AdapterError(stage, AdapterCause::BadSchema, "bad edge field type");
        out.push_back({src.get<Nid>(), dst.get<Nid>(), Relation::parse(rel.get<std::string>())});
    }
    return out;
}

struct EndpointSpec {
    std::string baseUrl;  ///< scheme://host:port
    std::string objectsPath{"/objects"};
    std::string promptPath{"/prompt"};
    std::string imagePath{"/image"};
    std::string reconstructPath{"/reconstruct"};
    std::string relationsPath{"/relations"};
    int timeoutMs{30000};
    /// Name of the environment variable holding a bearer token, if any.
    std::string authTokenEnv{"HIGS_ADAPTER_TOKEN"};

    /// Reads HIGS_ADAPTER_URL, HIGS_ADAPTER_TIMEOUT_MS and HIGS_ADAPTER_TOKEN_ENV.
    static EndpointSpec from_env() {
        EndpointSpec s;
        if (const char* u = std::getenv("HIGS_ADAPTER_URL")) s.baseUrl = u;
        if (const char* t = std::getenv("HIGS_ADAPTER_TIMEOUT_MS")) s.timeoutMs = std::atoi(t);
        if (const char* e = std::getenv("HIGS_ADAPTER_TOKEN_ENV")) s.authTokenEnv = e;
        return s;
    }
};

/// POSTs `body` and returns the parsed JSON reply; transport problems,
/// non-2xx replies and unparsable bodies become AdapterError.
inline WireJson post_json(const EndpointSpec& spec, const std::string& path, const WireJson& body,
                          const char* stage) {
    httplib::Client cli(spec.baseUrl);
    const auto timeout = std::chrono::milliseconds(spec.timeoutMs);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!spec.authTokenEnv.empty()) {
        if (const char* tok = std::getenv(spec.authTokenEnv.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + tok);
    }
    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        const auto elapsed = std::chrono::steady_clock::now() - start;
        const bool timedOut = res.error() == httplib::Error::ConnectionTimeout || elapsed >= timeout * 9 / 10;
        throw AdapterError(stage, timedOut ? AdapterCause::Timeout : AdapterCause::Remote,
                           httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300)
        throw AdapterError(stage, AdapterCause::Remote, "HTTP " + std::to_string(res->status));
    try {
        return WireJson::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw AdapterError(stage, AdapterCause::BadSchema, e.what());
    }
}

inline WireJson context_wire(const pipeline::StepContext& ctx) {
    return {{"seed", ctx.seed}, {"stepIndex", ctx.stepIndex}, {"anchorCategory", ctx.anchorCategory}};
}

inline std::string string_field(const WireJson& j, const char* key, const char* stage) {
    const WireJson& v = wire_field(j, key, stage);
    if (!v.is_string()) throw AdapterError(stage, AdapterCause::BadSchema, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

/// Adapters backed by remote services speaking the JSON contract above.
inline pipeline::BackendAdapters external_adapter_config(const EndpointSpec& spec) {
    if (spec.baseUrl.empty()) throw Error(Errc::InvalidArgument, "external backend needs a base URL");
    pipeline::BackendAdapters a;
    a.description = "external:" + spec.baseUrl;
    a.objectLister = [spec](const std::string& text, const std::string& global, const pipeline::StepContext& ctx) {
        const WireJson req = {{"sceneText", text}, {"globalText", global}, {"context", context_wire(ctx)}};
        return specs_from_wire(post_json(spec, spec.objectsPath, req, "objectLister"));
    };
    a.scenePrompter = [spec](const std::vector<pipeline::ObjectSpec>& objs, const std::string& constraints,
                             const pipeline::StepContext& ctx) {
        WireJson req = specs_to_wire(objs);
        req["constraints"] = constraints;
        req["context"] = context_wire(ctx);
        return string_field(post_json(spec, spec.promptPath, req, "scenePrompter"), "prompt", "scenePrompter");
    };
    a.imageGenerator = [spec](const std::string& prompt, const pipeline::StepContext& ctx) {
        const WireJson req = {{"prompt", prompt}, {"context", context_wire(ctx)}};
        return string_field(post_json(spec, spec.imagePath, req, "imageGenerator"), "handle", "imageGenerator");
    };
    a.reconstructor = [spec](const std::string& handle, const std::vector<pipeline::ObjectSpec>& objs,
                             const pipeline::StepContext& ctx) {
        WireJson req = specs_to_wire(objs);
        req["handle"] = handle;
        req["context"] = context_wire(ctx);
        return perceived_from_wire(post_json(spec, spec.reconstructPath, req, "reconstructor"));
    };
    a.relationEstimator = [spec](const std::string& handle, const std::vector<pipeline::PerceivedObject>& objs,
                                 const pipeline::StepContext& ctx) {
        WireJson req = perceived_to_wire(objs);
        req["handle"] = handle;
        req["context"] = context_wire(ctx);
        return edges_from_wire(post_json(spec, spec.relationsPath, req, "relationEstimator"));
    };
    return a;
}

/// Decodes a StepContext sent by external_adapter_config; for adapter servers.
inline pipeline::StepContext context_from_wire(const WireJson& j) {
    pipeline::StepContext ctx;
    const WireJson& c = wire_field(j, "context", "context");
    ctx.seed = wire_field(c, "seed", "context").get<std::uint64_t>();
    ctx.stepIndex = wire_field(c, "stepIndex", "context").get<int>();
    ctx.anchorCategory = wire_field(c, "anchorCategory", "context").get<std::string>();
    return ctx;
}

/// Serves a set of adapters over the wire contract. Used to run the
/// procedural backend out of process and as the in-process mock in tests.
inline void install_adapter_routes(httplib::Server& server, const pipeline::BackendAdapters& adapters,
                                   const EndpointSpec& paths = {}) {
    auto wrap = [](auto fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                const WireJson body = WireJson::parse(req.body);
                res.set_content(fn(body).dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(WireJson{{"error", e.what()}}.dump(), "application/json");
            }
        };
    };
    server.Post(paths.objectsPath, wrap([adapters](const WireJson& b) {
                    return specs_to_wire(adapters.objectLister(b.at("sceneText").get<std::string>(),
                                                               b.at("globalText").get<std::string>(),
                                                               context_from_wire(b)));
                }));
    server.Post(paths.promptPath, wrap([adapters](const WireJson& b) {
                    return WireJson{{"prompt", adapters.scenePrompter(specs_from_wire(b),
                                                                      b.at("constraints").get<std::string>(),
                                                                      context_from_wire(b))}};
                }));
    server.Post(paths.imagePath, wrap([adapters](const WireJson& b) {
                    return WireJson{
                        {"handle", adapters.imageGenerator(b.at("prompt").get<std::string>(), context_from_wire(b))}};
                }));
    server.Post(paths.reconstructPath, wrap([adapters](const WireJson& b) {
                    return perceived_to_wire(adapters.reconstructor(b.at("handle").get<std::string>(),
                                                                    specs_from_wire(b), context_from_wire(b)));
                }));
    server.Post(paths.relationsPath, wrap([adapters](const WireJson& b) {
                    return edges_to_wire(adapters.relationEstimator(b.at("handle").get<std::string>(),
                                                                    perceived_from_wire(b), context_from_wire(b)));
                }));
}

}  // namespace higs::external
