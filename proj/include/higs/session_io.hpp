#pragma once

#include <string>
#include <string_view>

#include "higs/pipeline.hpp"
#include "higs/serialize.hpp"

namespace higs::io {

inline constexpr std::string_view kSessionVersion = "higs-session/1";

/// How the session's adapters were configured; needed to replay it.
struct BackendInfo {
    std::string kind{"procedural"};
    std::uint64_t seed{0};
    std::string endpoint;

    bool operator==(const BackendInfo&) const = default;
};

inline Json spec_json(const pipeline::ObjectSpec& s) {
    Json j;
    j["category"] = s.category;
    j["extents"] = vec_json(s.approxExtents);
    j["count"] = s.count;
    return j;
}

inline pipeline::ObjectSpec read_spec(const Json& j, const std::string& p) {
    pipeline::ObjectSpec s;
    s.category = read_string(field(j, "category", p), p + ".category");
    s.approxExtents = read_vec3(field(j, "extents", p), p + ".extents");
    s.count = static_cast<int>(read_int(field(j, "count", p), p + ".count"));
    return s;
}

inline Json edit_json(const pipeline::EditRecord& e) {
    Json j;
    j["op"] = e.kind == pipeline::EditRecord::Kind::Pose ? "pose" : "remove";
    j["nid"] = e.nid;
    if (e.kind == pipeline::EditRecord::Kind::Pose) {
        j["pos"] = vec_json(e.pos);
        j["rot"] = vec_json(e.rot);
    } else {
        j["cascade"] = e.cascade;
    }
    return j;
}

inline pipeline::EditRecord read_edit(const Json& j, const std::string& p) {
    pipeline::EditRecord e;
    const std::string op = read_string(field(j, "op", p), p + ".op");
    e.nid = read_int(field(j, "nid", p), p + ".nid");
    if (op == "pose") {
        e.kind = pipeline::EditRecord::Kind::Pose;
        e.pos = read_vec3(field(j, "pos", p), p + ".pos");
        e.rot = read_vec3(field(j, "rot", p), p + ".rot");
    } else if (op == "remove") {
        e.kind = pipeline::EditRecord::Kind::Remove;
        e.cascade = read_bool(field(j, "cascade", p), p + ".cascade");
    } else {
        throw Error(Errc::CorruptFile, p + ".op: unknown edit " + op);
    }
    return e;
}

inline Json strings_json(const std::vector<std::string>& v) {
    Json a = Json::array();
    for (const auto& s : v) a.push_back(s);
    return a;
}

inline std::vector<std::string> read_strings(const Json& j, const std::string& p) {
    std::vector<std::string> out;
    const Json& a = read_array(j, p);
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(read_string(a[i], p + "[" + std::to_string(i) + "]"));
    return out;
}

inline Json transform_json(const composition::SimilarityTransform& t) {
    Json j;
    j["translation"] = vec_json(t.translation);
    j["yaw"] = num(t.yaw);
    j["scale"] = num(t.scale);
    return j;
}

inline Json step_json(const pipeline::StepRecord& r) {
    Json j;
    j["stepIndex"] = r.stepIndex;
    j["anchorNid"] = r.anchorNid;
    j["userText"] = r.userText;
    j["seed"] = r.seed;
    j["viewpoint"] = r.viewpoint;
    Json pr;
    pr["iso"] = r.prompt.iso ? Json(*r.prompt.iso) : Json(nullptr);
    pr["global"] = r.prompt.global;
    pr["sd"] = r.prompt.sd;
    pr["composed"] = r.composedPrompt;
    j["prompt"] = std::move(pr);
    j["imageHandle"] = r.imageHandle;
    Json objs = Json::array();
    for (const auto& o : r.objects) objs.push_back(spec_json(o));
    j["objects"] = std::move(objs);
    j["localGraph"] = graph_json(r.localGraph);
    Json m;
    Json map = Json::array();
    for (const auto& [l, g] : r.merge.nidMap) map.push_back(Json::array({l, g}));
    m["nidMap"] = std::move(map);
    m["transform"] = transform_json(r.merge.appliedTransform);
    m["report"] = report_json(r.merge.report);
    j["merge"] = std::move(m);
    j["repairs"] = strings_json(r.repairs);
    j["warnings"] = strings_json(r.warnings);
    Json edits = Json::array();
    for (const auto& e : r.edits) edits.push_back(edit_json(e));
    j["edits"] = std::move(edits);
    return j;
}

inline pipeline::StepRecord read_step(const Json& j, const std::string& p) {
    pipeline::StepRecord r;
    r.stepIndex = static_cast<int>(read_int(field(j, "stepIndex", p), p + ".stepIndex"));
    r.anchorNid = read_int(field(j, "anchorNid", p), p + ".anchorNid");
    r.userText = read_string(field(j, "userText", p), p + ".userText");
    r.seed = read_uint(field(j, "seed", p), p + ".seed");
    r.viewpoint = read_string(field(j, "viewpoint", p), p + ".viewpoint");
    const Json& pr = field(j, "prompt", p);
    const Json& iso = field(pr, "iso", p + ".prompt");
    if (!iso.is_null()) r.prompt.iso = read_string(iso, p + ".prompt.iso");
    r.prompt.global = read_string(field(pr, "global", p + ".prompt"), p + ".prompt.global");
    r.prompt.sd = read_string(field(pr, "sd", p + ".prompt"), p + ".prompt.sd");
    r.prompt.stepIndex = r.stepIndex;
    r.composedPrompt = read_string(field(pr, "composed", p + ".prompt"), p + ".prompt.composed");
    r.imageHandle = read_string(field(j, "imageHandle", p), p + ".imageHandle");
    const Json& objs = read_array(field(j, "objects", p), p + ".objects");
    for (std::size_t i = 0; i < objs.size(); ++i)
        r.objects.push_back(read_spec(objs[i], p + ".objects[" + std::to_string(i) + "]"));
    r.localGraph = read_graph(field(j, "localGraph", p), p + ".localGraph");
    const Json& m = field(j, "merge", p);
    const Json& map = read_array(field(m, "nidMap", p + ".merge"), p + ".merge.nidMap");
    for (std::size_t i = 0; i < map.size(); ++i) {
        const std::string q = p + ".merge.nidMap[" + std::to_string(i) + "]";
        if (!map[i].is_array() || map[i].size() != 2) throw Error(Errc::CorruptFile, q + ": expected [local, global]");
        r.merge.nidMap[read_int(map[i][0], q)] = read_int(map[i][1], q);
    }
    const Json& t = field(m, "transform", p + ".merge");
    r.merge.appliedTransform.translation = read_vec3(field(t, "translation", p), p + ".merge.transform.translation");
    r.merge.appliedTransform.yaw = read_number(field(t, "yaw", p), p + ".merge.transform.yaw");
    r.merge.appliedTransform.scale = read_number(field(t, "scale", p), p + ".merge.transform.scale");
    r.merge.report = read_report(field(m, "report", p + ".merge"), p + ".merge.report");
    r.repairs = read_strings(field(j, "repairs", p), p + ".repairs");
    r.warnings = read_strings(field(j, "warnings", p), p + ".warnings");
    const Json& edits = read_array(field(j, "edits", p), p + ".edits");
    for (std::size_t i = 0; i < edits.size(); ++i)
        r.edits.push_back(read_edit(edits[i], p + ".edits[" + std::to_string(i) + "]"));
    return r;
}

struct LoadedSession {
    pipeline::SceneSession session;
    BackendInfo backend;
    SceneMeta meta;
};

inline Json session_json(const pipeline::SceneSession& s, const BackendInfo& backend) {
    Json j;
    j["version"] = kSessionVersion;
    j["sessionId"] = s.sessionId;
    Json b;
    b["kind"] = backend.kind;
    b["seed"] = backend.seed;
    b["endpoint"] = backend.endpoint;
    j["backend"] = std::move(b);
    j["revision"] = s.revision;
    j["styleText"] = s.styleText;
    j["scene"] = scene_json(s.global, {"", backend.seed, static_cast<std::int64_t>(s.log.size())});
    Json log = Json::array();
    for (const auto& r : s.log) log.push_back(step_json(r));
    j["log"] = std::move(log);
    return j;
}

inline std::string save_session(const pipeline::SceneSession& s, const BackendInfo& backend) {
    return dump(session_json(s, backend));
}

inline LoadedSession load_session(std::string_view bytes) {
    const Json j = parse_json(bytes);
    const std::string path = "$";
    const std::string version = read_string(field(j, "version", path), "$.version");
    if (version != kSessionVersion)
        throw Error(Errc::SchemaVersionMismatch, "expected " + std::string(kSessionVersion) + ", got " + version);
    LoadedSession out;
    out.session.sessionId = read_string(field(j, "sessionId", path), "$.sessionId");
    const Json& b = field(j, "backend", path);
    out.backend.kind = read_string(field(b, "kind", "$.backend"), "$.backend.kind");
    out.backend.seed = read_uint(field(b, "seed", "$.backend"), "$.backend.seed");
    out.backend.endpoint = read_string(field(b, "endpoint", "$.backend"), "$.backend.endpoint");
    out.session.revision = read_uint(field(j, "revision", path), "$.revision");
    out.session.styleText = read_string(field(j, "styleText", path), "$.styleText");
    LoadedScene scene = read_scene(field(j, "scene", path), "$.scene");
    out.session.global = std::move(scene.graph);
    out.meta = scene.meta;
    const Json& log = read_array(field(j, "log", path), "$.log");
    for (std::size_t i = 0; i < log.size(); ++i)
        out.session.log.push_back(read_step(log[i], "$.log[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace higs::io
