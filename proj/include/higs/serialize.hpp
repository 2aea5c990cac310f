#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

#include <json.hpp>

#include "higs/graph.hpp"
#include "higs/layout.hpp"

namespace higs::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kSceneVersion = "higs-scene/1";

/// Rounds to 9 significant digits. Idempotent, so a loaded file re-saves to
/// the same bytes.
inline double canonical_number(double v) {
    if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    const double r = std::strtod(buf, nullptr);
    return r == 0.0 ? 0.0 : r;
}

inline Json vec_json(const Vec3& v) {
    return Json::array({canonical_number(v.x), canonical_number(v.y), canonical_number(v.z)});
}

inline Json num(double v) { return canonical_number(v); }

// Reading helpers: every failure names the JSON path that broke.

inline const Json& field(const Json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw Error(Errc::CorruptFile, path + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw Error(Errc::CorruptFile, path + "." + key + ": missing field");
    return *it;
}

inline double read_number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw Error(Errc::CorruptFile, path + ": expected a number");
    return j.get<double>();
}

inline std::int64_t read_int(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw Error(Errc::CorruptFile, path + ": expected an integer");
    return j.get<std::int64_t>();
}

inline std::uint64_t read_uint(const Json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        throw Error(Errc::CorruptFile, path + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline std::string read_string(const Json& j, const std::string& path) {
    if (!j.is_string()) throw Error(Errc::CorruptFile, path + ": expected a string");
    return j.get<std::string>();
}

inline bool read_bool(const Json& j, const std::string& path) {
    if (!j.is_boolean()) throw Error(Errc::CorruptFile, path + ": expected a boolean");
    return j.get<bool>();
}

inline const Json& read_array(const Json& j, const std::string& path) {
    if (!j.is_array()) throw Error(Errc::CorruptFile, path + ": expected an array");
    return j;
}

inline Vec3 read_vec3(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw Error(Errc::CorruptFile, path + ": expected [x, y, z]");
    return {read_number(j[0], path + "[0]"), read_number(j[1], path + "[1]"), read_number(j[2], path + "[2]")};
}

inline Json parse_json(std::string_view bytes) {
    try {
        return Json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::CorruptFile, std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
    }
}

inline Json node_json(const ObjectNode& n) {
    Json j;
    j["nid"] = n.nid;
    j["category"] = n.category;
    j["pos"] = vec_json(n.pos);
    j["rot"] = vec_json(n.rot);
    j["scale"] = num(n.scale);
    j["halfExtents"] = vec_json(n.halfExtents);
    return j;
}

inline ObjectNode read_node(const Json& j, const std::string& path) {
    ObjectNode n;
    n.nid = read_int(field(j, "nid", path), path + ".nid");
    n.category = read_string(field(j, "category", path), path + ".category");
    n.pos = read_vec3(field(j, "pos", path), path + ".pos");
    n.rot = read_vec3(field(j, "rot", path), path + ".rot");
    n.scale = read_number(field(j, "scale", path), path + ".scale");
    n.halfExtents = read_vec3(field(j, "halfExtents", path), path + ".halfExtents");
    return n;
}

inline Json edge_json(const RelationEdge& e) {
    Json j;
    j["src"] = e.src;
    j["dst"] = e.dst;
    j["relation"] = e.relation.name();
    return j;
}

inline RelationEdge read_edge(const Json& j, const std::string& path) {
    RelationEdge e;
    e.src = read_int(field(j, "src", path), path + ".src");
    e.dst = read_int(field(j, "dst", path), path + ".dst");
    const std::string rel = read_string(field(j, "relation", path), path + ".relation");
    if (rel.empty()) throw Error(Errc::CorruptFile, path + ".relation: empty relation name");
    e.relation = Relation::parse(rel);
    return e;
}

/// nodes / edges / relTransforms of a graph, in canonical order.
inline Json graph_json(const Graph& g) {
    Json j;
    Json nodes = Json::array();
    for (const auto& [nid, n] : g.nodes()) nodes.push_back(node_json(n));
    Json edges = Json::array();
    for (const auto& e : g.edges()) edges.push_back(edge_json(e));
    Json rts = Json::array();
    for (const auto& [key, t] : g.rel_transforms()) {
        Json r;
        r["src"] = key.first;
        r["dst"] = key.second;
        r["translation"] = vec_json(t.translation);
        r["yawDelta"] = num(t.yawDelta);
        r["scaleRatio"] = num(t.scaleRatio);
        rts.push_back(std::move(r));
    }
    j["nodes"] = std::move(nodes);
    j["edges"] = std::move(edges);
    j["relTransforms"] = std::move(rts);
    return j;
}

/// Inverse of graph_json. Throws CorruptFile on malformed input or when the
/// resulting graph violates any invariant.
inline Graph read_graph(const Json& j, const std::string& path, bool check = true) {
    Graph g;
    const Json& nodes = read_array(field(j, "nodes", path), path + ".nodes");
    const Json& edges = read_array(field(j, "edges", path), path + ".edges");
    const Json& rts = read_array(field(j, "relTransforms", path), path + ".relTransforms");
    g.mutate_raw([&](Graph::NodeMap& nm, Graph::EdgeList& el, Graph::TransformMap& tm) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const std::string p = path + ".nodes[" + std::to_string(i) + "]";
            ObjectNode n = read_node(nodes[i], p);
            if (!nm.emplace(n.nid, n).second) throw Error(Errc::CorruptFile, p + ".nid: duplicate nid");
        }
        for (std::size_t i = 0; i < edges.size(); ++i)
            el.push_back(read_edge(edges[i], path + ".edges[" + std::to_string(i) + "]"));
        for (std::size_t i = 0; i < rts.size(); ++i) {
            const std::string p = path + ".relTransforms[" + std::to_string(i) + "]";
            RelativeTransform t;
            t.edgeKey.first = read_int(field(rts[i], "src", p), p + ".src");
            t.edgeKey.second = read_int(field(rts[i], "dst", p), p + ".dst");
            t.translation = read_vec3(field(rts[i], "translation", p), p + ".translation");
            t.yawDelta = read_number(field(rts[i], "yawDelta", p), p + ".yawDelta");
            t.scaleRatio = read_number(field(rts[i], "scaleRatio", p), p + ".scaleRatio");
            tm[t.edgeKey] = t;
        }
    });
    const auto violations = check ? validate(g) : std::vector<Violation>{};
    if (!violations.empty()) {
        std::string msg = path + ": graph violates invariants:";
        for (const auto& v : violations) msg += " " + std::string(to_string(v.kind)) + "(" + v.message + ")";
        throw Error(Errc::CorruptFile, msg);
    }
    return g;
}

struct SceneMeta {
    std::string created;
    std::uint64_t seed{0};
    std::int64_t stepCount{0};

    bool operator==(const SceneMeta&) const = default;
};

struct LoadedScene {
    Graph graph;
    SceneMeta meta;
};

inline Json scene_json(const Graph& g, const SceneMeta& meta = {}) {
    Json j;
    j["version"] = kSceneVersion;
    Json body = graph_json(g);
    j["nodes"] = std::move(body["nodes"]);
    j["edges"] = std::move(body["edges"]);
    j["relTransforms"] = std::move(body["relTransforms"]);
    Json m;
    m["created"] = meta.created;
    m["seed"] = meta.seed;
    m["stepCount"] = meta.stepCount;
    j["meta"] = std::move(m);
    return j;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline std::string save_scene(const Graph& g, const SceneMeta& meta = {}) { return dump(scene_json(g, meta)); }

inline LoadedScene read_scene(const Json& j, const std::string& path = "$", bool check = true) {
    const std::string version = read_string(field(j, "version", path), path + ".version");
    if (version != kSceneVersion)
        throw Error(Errc::SchemaVersionMismatch, "expected " + std::string(kSceneVersion) + ", got " + version);
    LoadedScene out;
    out.graph = read_graph(j, path, check);
    const Json& m = field(j, "meta", path);
    out.meta.created = read_string(field(m, "created", path + ".meta"), path + ".meta.created");
    out.meta.seed = read_uint(field(m, "seed", path + ".meta"), path + ".meta.seed");
    out.meta.stepCount = read_int(field(m, "stepCount", path + ".meta"), path + ".meta.stepCount");
    return out;
}

/// Parses a scene file. With `check` (the default) a graph that violates any
/// invariant is rejected as CorruptFile; without it the graph is returned
/// as-is for inspection.
inline LoadedScene load_scene(std::string_view bytes, bool check = true) {
    return read_scene(parse_json(bytes), "$", check);
}

/// Canonical text of a graph's content; equal strings mean equal graphs at
/// file precision.
inline std::string canonical_text(const Graph& g) { return graph_json(g).dump(); }

inline Json report_json(const layout::LayoutReport& r) {
    Json j;
    j["passes"] = r.passes;
    j["converged"] = r.converged;
    Json cs = Json::array();
    for (const auto& c : r.corrections) {
        Json cj;
        cj["nid"] = c.nid;
        cj["delta"] = vec_json(c.deltaTranslation);
        cj["reason"] = std::string(layout::to_string(c.reason));
        cj["pass"] = c.pass;
        cs.push_back(std::move(cj));
    }
    j["corrections"] = std::move(cs);
    Json ws = Json::array();
    for (const auto& w : r.warnings) {
        Json wj;
        wj["nid"] = w.nid;
        wj["message"] = w.message;
        ws.push_back(std::move(wj));
    }
    j["warnings"] = std::move(ws);
    return j;
}

inline layout::LayoutReport read_report(const Json& j, const std::string& path) {
    layout::LayoutReport r;
    r.passes = static_cast<int>(read_int(field(j, "passes", path), path + ".passes"));
    r.converged = read_bool(field(j, "converged", path), path + ".converged");
    const Json& cs = read_array(field(j, "corrections", path), path + ".corrections");
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const std::string p = path + ".corrections[" + std::to_string(i) + "]";
        layout::Correction c;
        c.nid = read_int(field(cs[i], "nid", p), p + ".nid");
        c.deltaTranslation = read_vec3(field(cs[i], "delta", p), p + ".delta");
        const std::string reason = read_string(field(cs[i], "reason", p), p + ".reason");
        if (reason == "Stability")
            c.reason = layout::CorrectionReason::Stability;
        else if (reason == "Propagation")
            c.reason = layout::CorrectionReason::Propagation;
        else
            throw Error(Errc::CorruptFile, p + ".reason: unknown reason " + reason);
        c.pass = static_cast<int>(read_int(field(cs[i], "pass", p), p + ".pass"));
        r.corrections.push_back(c);
    }
    const Json& ws = read_array(field(j, "warnings", path), path + ".warnings");
    for (std::size_t i = 0; i < ws.size(); ++i) {
        const std::string p = path + ".warnings[" + std::to_string(i) + "]";
        r.warnings.push_back({read_int(field(ws[i], "nid", p), p + ".nid"),
                              read_string(field(ws[i], "message", p), p + ".message")});
    }
    return r;
}

}  // namespace higs::io
