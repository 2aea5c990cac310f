#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "higs/composition.hpp"
#include "higs/graph.hpp"
#include "higs/layout.hpp"
#include "higs/serialize.hpp"

namespace higs::pipeline {

/// Prompt fragments of one step. `iso` is present exactly on step 0.
struct PromptBundle {
    std::optional<std::string> iso;
    std::string global;
    std::string sd;
    int stepIndex{0};

    bool operator==(const PromptBundle&) const = default;
};

inline constexpr std::string_view kDefaultSeparator = "; ";
inline constexpr std::string_view kIsoFragment = "isometric view showing the whole scene";

/// Joins iso, global and sd in that order, skipping absent or empty parts.
inline std::string compose_prompt(const PromptBundle& b, std::string_view separator = kDefaultSeparator) {
    if (b.iso.has_value() != (b.stepIndex == 0))
        throw Error(Errc::InvalidArgument, "iso fragment must be present exactly on step 0");
    std::string out;
    auto append = [&](const std::string& part) {
        if (part.empty()) return;
        if (!out.empty()) out += separator;
        out += part;
    };
    if (b.iso) append(*b.iso);
    append(b.global);
    append(b.sd);
    if (out.empty()) throw Error(Errc::AllEmpty, "every prompt fragment is empty");
    return out;
}

struct ObjectSpec {
    std::string category;
    Vec3 approxExtents;  ///< full size, meters
    int count{1};

    bool operator==(const ObjectSpec&) const = default;
};

struct PerceivedObject {
    std::string category;
    Vec3 pos;
    double yaw{0.0};
    Vec3 halfExtents{0.5, 0.5, 0.5};
    double scale{1.0};

    bool operator==(const PerceivedObject&) const = default;
};

/// Inputs every adapter may depend on; adapters must be pure functions of
/// their arguments and this context.
struct StepContext {
    std::uint64_t seed{0};
    int stepIndex{0};
    std::string anchorCategory;
};

/// Perception and generation stages. The reconstructor also receives the
/// object list (it is the grounding vocabulary for segmentation) and relation
/// edges refer to indices into the perceived-object list.
struct BackendAdapters {
    std::function<std::vector<ObjectSpec>(const std::string& sceneText, const std::string& globalText,
                                          const StepContext&)>
        objectLister;
    std::function<std::string(const std::vector<ObjectSpec>&, const std::string& constraints, const StepContext&)>
        scenePrompter;
    std::function<std::string(const std::string& prompt, const StepContext&)> imageGenerator;
    std::function<std::vector<PerceivedObject>(const std::string& handle, const std::vector<ObjectSpec>&,
                                               const StepContext&)>
        reconstructor;
    std::function<std::vector<RelationEdge>(const std::string& handle, const std::vector<PerceivedObject>&,
                                            const StepContext&)>
        relationEstimator;
    std::string description;
};

// Output checks shared by every backend.

inline void check_specs(const std::vector<ObjectSpec>& specs) {
    for (const auto& s : specs) {
        if (s.category.empty()) throw AdapterError("objectLister", AdapterCause::BadSchema, "empty category");
        if (!(s.approxExtents.x > 0 && s.approxExtents.y > 0 && s.approxExtents.z > 0) || !is_finite(s.approxExtents))
            throw AdapterError("objectLister", AdapterCause::BadSchema, "extents must be positive for " + s.category);
        if (s.count < 1) throw AdapterError("objectLister", AdapterCause::BadSchema, "count must be >= 1");
    }
}

inline void check_perceived(const std::vector<PerceivedObject>& objs) {
    for (const auto& o : objs) {
        ObjectNode probe{0, o.category, o.pos, {0, 0, o.yaw}, o.scale, o.halfExtents};
        if (o.category.empty() || !probe.has_valid_geometry() || !std::isfinite(o.yaw))
            throw AdapterError("reconstructor", AdapterCause::BadSchema, "invalid geometry for '" + o.category + "'");
    }
}

inline void check_relations(const std::vector<RelationEdge>& edges, std::size_t objectCount) {
    const auto n = static_cast<Nid>(objectCount);
    for (const auto& e : edges) {
        if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n)
            throw AdapterError("relationEstimator", AdapterCause::BadSchema, "edge index out of range");
        if (e.relation.kind == RelationKind::Other && e.relation.label.empty())
            throw AdapterError("relationEstimator", AdapterCause::BadSchema, "empty relation name");
    }
}

/// A user edit applied between generation steps.
struct EditRecord {
    enum class Kind { Pose, Remove };
    Kind kind{Kind::Pose};
    Nid nid{0};
    Vec3 pos;
    Vec3 rot;
    bool cascade{false};

    bool operator==(const EditRecord&) const = default;
};

struct StepRecord {
    int stepIndex{0};
    Nid anchorNid{0};
    std::string userText;
    std::uint64_t seed{0};
    std::string viewpoint;
    PromptBundle prompt;
    std::string composedPrompt;
    std::string imageHandle;
    std::vector<ObjectSpec> objects;
    Graph localGraph;
    composition::MergeResult merge;
    std::vector<std::string> repairs;
    std::vector<std::string> warnings;
    /// Edits applied after this step and before the next one.
    std::vector<EditRecord> edits;
};

struct SceneSession {
    std::string sessionId;
    Graph global;
    std::vector<StepRecord> log;
    /// Step-0 description, the style anchor for later global constraints.
    std::string styleText;
    /// Bumped once per successful step or edit.
    std::uint64_t revision{0};

    /// Index of the last completed step, -1 before step 0.
    int step_index() const { return static_cast<int>(log.size()) - 1; }
};

/// Anchor id used for step 0, where the floor is the implicit anchor.
inline constexpr Nid kFloorAnchor = 0;

using GlobalSummarizer = std::function<std::string(const std::string& styleText, const Graph&)>;

/// Default global constraint: the step-0 description plus the categories of
/// the top-level objects (floor children and non-floor roots), in nid order.
inline std::string default_global_summary(const std::string& styleText, const Graph& g) {
    std::string out = "consistent with: " + styleText;
    std::vector<std::string> cats;
    std::set<std::string> seen;
    for (const auto& [nid, n] : g.nodes()) {
        if (composition::is_floor_category(n.category)) continue;
        auto p = g.strong_parent(nid);
        const bool top = !p || composition::is_floor_category(g.node(*p).category);
        if (top && seen.insert(n.category).second) cats.push_back(n.category);
    }
    if (!cats.empty()) {
        out += "; existing objects: ";
        for (std::size_t i = 0; i < cats.size(); ++i) out += (i ? ", " : "") + cats[i];
    }
    return out;
}

/// Turns estimator output into a forest: duplicate edges and self loops are
/// dropped, a child keeps only its first strong parent, and every strong
/// cycle loses the edge whose child has the largest nid.
inline std::vector<RelationEdge> repair_relations(std::vector<RelationEdge> edges, std::vector<std::string>& repairs) {
    std::vector<RelationEdge> out;
    std::set<RelationEdge> seen;
    std::map<Nid, Nid> parent;
    for (const auto& e : edges) {
        if (e.src == e.dst) {
            repairs.push_back("dropped self loop on " + std::to_string(e.src));
            continue;
        }
        if (!seen.insert(e).second) continue;
        if (e.relation.strong()) {
            if (parent.count(e.dst)) {
                repairs.push_back("dropped extra strong parent " + std::to_string(e.src) + "->" + std::to_string(e.dst));
                continue;
            }
            parent[e.dst] = e.src;
        }
        out.push_back(e);
    }
    for (;;) {
        std::optional<Nid> victim;
        for (const auto& [start, p0] : parent) {
            std::set<Nid> onPath{start};
            Nid cur = start;
            bool cycle = false;
            while (parent.count(cur)) {
                cur = parent.at(cur);
                if (cur == start) {
                    cycle = true;
                    break;
                }
                if (!onPath.insert(cur).second) break;
            }
            if (!cycle) continue;
            Nid worst = start;
            Nid walk = parent.at(start);
            while (walk != start) {
                worst = std::max(worst, walk);
                walk = parent.at(walk);
            }
            victim = worst;
            break;
        }
        if (!victim) break;
        const Nid src = parent.at(*victim);
        repairs.push_back("broke strong cycle by dropping " + std::to_string(src) + "->" + std::to_string(*victim));
        parent.erase(*victim);
        std::erase_if(out, [&](const RelationEdge& e) { return e.relation.strong() && e.dst == *victim && e.src == src; });
    }
    return out;
}

inline constexpr double kFloorHalfThickness = 0.05;

/// Floor slab under the perceived objects: top face at z = 0, at least 5 m
/// across and 0.5 m of margin around every object.
inline ObjectNode make_floor(Nid nid, const std::vector<PerceivedObject>& objs) {
    double hx = 2.5, hy = 2.5;
    for (const auto& o : objs) {
        const double r = std::hypot(o.halfExtents.x, o.halfExtents.y) * o.scale;
        hx = std::max(hx, std::abs(o.pos.x) + r + 0.5);
        hy = std::max(hy, std::abs(o.pos.y) + r + 0.5);
    }
    return {nid, "floor", {0.0, 0.0, -kFloorHalfThickness}, {0, 0, 0}, 1.0, {hx, hy, kFloorHalfThickness}};
}

struct StepOptions {
    GlobalSummarizer summarizer = default_global_summary;
    int maxPasses{8};
};

/// One associative expansion step. Runs the adapter chain, builds the local
/// graph and grafts it onto `anchorNid` (or builds the initial global graph
/// when the session is empty). Returns the new session; the input is never
/// modified, so a failed step leaves it untouched.
inline SceneSession run_step(const SceneSession& session, const BackendAdapters& adapters, Nid anchorNid,
                             const std::string& userText, std::uint64_t seed, const StepOptions& opt = {}) {
    const int n = static_cast<int>(session.log.size());
    std::string anchorCategory = "floor";
    if (n == 0) {
        if (anchorNid != kFloorAnchor)
            throw Error(Errc::UnknownAnchor, "step 0 must use the floor anchor (" + std::to_string(kFloorAnchor) + ")");
    } else {
        if (!session.global.contains(anchorNid))
            throw Error(Errc::UnknownAnchor, "anchor " + std::to_string(anchorNid) + " not in scene");
        anchorCategory = session.global.node(anchorNid).category;
    }

    SceneSession next = session;
    if (n == 0) next.styleText = userText;

    StepRecord rec;
    rec.stepIndex = n;
    rec.anchorNid = anchorNid;
    rec.userText = userText;
    rec.seed = seed;
    rec.viewpoint = n == 0 ? "isometric overview"
                           : "focused on " + anchorCategory + " #" + std::to_string(anchorNid);
    const StepContext ctx{seed, n, anchorCategory};

    rec.prompt.stepIndex = n;
    if (n == 0) rec.prompt.iso = std::string(kIsoFragment);
    rec.prompt.global = opt.summarizer(next.styleText, session.global);

    auto call = [](const char* stage, auto&& fn) {
        try {
            return fn();
        } catch (const AdapterError&) {
            throw;
        } catch (const std::exception& e) {
            throw AdapterError(stage, AdapterCause::Remote, e.what());
        }
    };

    rec.objects = call("objectLister", [&] { return adapters.objectLister(userText, rec.prompt.global, ctx); });
    check_specs(rec.objects);
    rec.prompt.sd = call("scenePrompter", [&] { return adapters.scenePrompter(rec.objects, rec.prompt.global, ctx); });
    rec.composedPrompt = compose_prompt(rec.prompt);
    rec.imageHandle = call("imageGenerator", [&] { return adapters.imageGenerator(rec.composedPrompt, ctx); });
    std::vector<PerceivedObject> perceived =
        call("reconstructor", [&] { return adapters.reconstructor(rec.imageHandle, rec.objects, ctx); });
    check_perceived(perceived);
    std::vector<RelationEdge> relations =
        call("relationEstimator", [&] { return adapters.relationEstimator(rec.imageHandle, perceived, ctx); });
    check_relations(relations, perceived.size());

    if (rec.objects.empty()) rec.warnings.push_back("no known objects in \"" + userText + "\"; nothing generated");

    // Local nids: step 0 reserves 1 for the floor.
    const Nid offset = n == 0 ? 2 : 1;
    Graph local;
    if (n == 0) local.add_node(make_floor(1, perceived));
    for (std::size_t i = 0; i < perceived.size(); ++i) {
        const auto& o = perceived[i];
        local.add_node({static_cast<Nid>(i) + offset, o.category, o.pos, {0.0, 0.0, o.yaw}, o.scale, o.halfExtents});
    }
    for (auto& e : relations) {
        e.src += offset;
        e.dst += offset;
    }
    for (const auto& e : repair_relations(std::move(relations), rec.repairs)) local.add_edge(e);
    rec.localGraph = local;

    composition::LocalScene scene{local, anchorCategory, n};
    if (n == 0) {
        auto built = composition::build_initial_global(scene, opt.maxPasses);
        next.global = std::move(built.graph);
        for (const auto& [nid, node] : local.nodes()) rec.merge.nidMap[nid] = nid;
        rec.merge.report = std::move(built.report);
        for (const auto& w : built.alignment.warnings) rec.warnings.push_back(w);
    } else {
        rec.merge = composition::merge(next.global, scene, anchorNid, opt.maxPasses);
    }
    next.log.push_back(std::move(rec));
    ++next.revision;
    return next;
}

/// Applies a user edit followed by layout optimization and logs it against
/// the last step. Pose and rotation inputs are rounded to file precision
/// first so a saved session replays to the same state.
inline layout::LayoutReport apply_edit(SceneSession& session, EditRecord edit, int maxPasses = 8) {
    if (session.log.empty()) throw Error(Errc::InvalidArgument, "no scene to edit before step 0");
    edit.pos = {io::canonical_number(edit.pos.x), io::canonical_number(edit.pos.y), io::canonical_number(edit.pos.z)};
    edit.rot = {io::canonical_number(edit.rot.x), io::canonical_number(edit.rot.y), io::canonical_number(edit.rot.z)};
    Graph g = session.global;
    if (edit.kind == EditRecord::Kind::Pose)
        g.modify_node_pose(edit.nid, edit.pos, edit.rot);
    else
        g.remove_node(edit.nid, edit.cascade);
    layout::LayoutReport report = layout::optimize_layout(g, maxPasses);
    session.global = std::move(g);
    session.log.back().edits.push_back(edit);
    ++session.revision;
    return report;
}

/// Re-executes a step log and checks each regenerated local graph and nid
/// map against the record. Any mismatch is a ReplayDivergence.
inline Graph replay(const std::vector<StepRecord>& log, const BackendAdapters& adapters,
                    const StepOptions& opt = {}) {
    SceneSession s;
    for (std::size_t i = 0; i < log.size(); ++i) {
        const StepRecord& rec = log[i];
        if (rec.stepIndex != static_cast<int>(i))
            throw Error(Errc::InvalidArgument, "step indices must be contiguous from 0");
        s = run_step(s, adapters, rec.anchorNid, rec.userText, rec.seed, opt);
        const StepRecord& got = s.log.back();
        if (io::canonical_text(got.localGraph) != io::canonical_text(rec.localGraph))
            throw Error(Errc::ReplayDivergence, "local graph of step " + std::to_string(i) + " differs");
        if (got.merge.nidMap != rec.merge.nidMap)
            throw Error(Errc::ReplayDivergence, "nid map of step " + std::to_string(i) + " differs");
        for (const auto& e : rec.edits) apply_edit(s, e, opt.maxPasses);
    }
    return s.global;
}

/// Replays and compares against the stored final graph at file precision.
inline void verify_replay(const std::vector<StepRecord>& log, const Graph& expected, const BackendAdapters& adapters,
                          const StepOptions& opt = {}) {
    const Graph got = replay(log, adapters, opt);
    if (io::canonical_text(got) != io::canonical_text(expected))
        throw Error(Errc::ReplayDivergence, "replayed scene differs from the stored scene");
}

}  // namespace higs::pipeline
