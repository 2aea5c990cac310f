#pragma once

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "higs/alignment.hpp"
#include "higs/geometry.hpp"
#include "higs/graph.hpp"
#include "higs/layout.hpp"

namespace higs::composition {

/// Sub-scene generated around one anchor, in its own local frame.
struct LocalScene {
    Graph graph;
    std::string anchorCategory;
    int stepIndex{0};
};

/// p' = translation + scale * Rz(yaw) * p; yaw and scale compose likewise.
struct SimilarityTransform {
    Vec3 translation;
    double yaw{0.0};
    double scale{1.0};

    Vec3 apply_point(const Vec3& p) const { return translation + rotate_about_z(p, yaw) * scale; }

    ObjectNode apply(ObjectNode n) const {
        n.pos = apply_point(n.pos);
        n.rot.z += yaw;
        n.scale *= scale;
        return n;
    }

    bool operator==(const SimilarityTransform&) const = default;
};

struct MergeResult {
    std::map<Nid, Nid> nidMap;
    SimilarityTransform appliedTransform;
    layout::LayoutReport report;
};

inline std::vector<ObjectNode> node_list(const Graph& g) {
    std::vector<ObjectNode> out;
    out.reserve(g.size());
    for (const auto& [nid, n] : g.nodes()) out.push_back(n);
    return out;
}

inline geometry::OrientedBoundingBox region_obb(const LocalScene& local, double basisYaw) {
    if (local.graph.empty()) throw Error(Errc::EmptyScene, "local scene has no nodes");
    const auto nodes = node_list(local.graph);
    return geometry::obb_of_nodes(nodes, basisYaw);
}

/// Similarity transform that turns the local region's OBB onto the anchor's
/// placement area: yaw matches the area frame, the region is shrunk (never
/// grown) to fit the area footprint, its centre sits over the area centre and
/// its bottom rests on the area height.
inline SimilarityTransform align_to_anchor(const LocalScene& local, const ObjectNode& anchor,
                                           const geometry::PlacementArea& area, double basisYaw = 0.0) {
    if (!anchor.upright()) throw Error(Errc::NotUpright, "anchor must be upright");
    const Vec2 ah = area.rect.halfExtents;
    if (!(ah.x > 0.0 && ah.y > 0.0) || !std::isfinite(ah.x) || !std::isfinite(ah.y))
        throw Error(Errc::DegenerateAnchor, "anchor placement area has zero size");
    const auto box = region_obb(local, basisYaw);

    SimilarityTransform t;
    t.yaw = anchor.yaw() + area.rect.yaw - box.yaw;
    t.scale = std::min({1.0, ah.x / box.halfExtents.x, ah.y / box.halfExtents.y});
    const Vec2 areaCentre = geometry::local_to_world(area.rect.center, anchor.pos.xy(), anchor.yaw());
    const Vec3 target{areaCentre.x, areaCentre.y, anchor.pos.z + area.height + t.scale * box.halfExtents.z};
    t.translation = target - rotate_about_z(box.center, t.yaw) * t.scale;
    return t;
}

/// Grafts a local scene onto `anchorNid` of the global graph. The local
/// layout is settled first, then nodes are re-identified, moved by the
/// anchor transform, every local strong root gets an 'On' edge from the
/// anchor and the whole graph is re-optimized. `global` is only touched on
/// success.
inline MergeResult merge(Graph& global, const LocalScene& local, Nid anchorNid, int maxPasses = 8) {
    if (!global.contains(anchorNid)) throw Error(Errc::UnknownAnchor, "anchor " + std::to_string(anchorNid));
    MergeResult result;
    Graph work = global;
    if (local.graph.empty()) {
        work.bump_revision();
        global = std::move(work);
        return result;
    }

    LocalScene settled = local;
    layout::optimize_layout(settled.graph, maxPasses);

    const ObjectNode anchor = work.node(anchorNid);
    const auto area = geometry::top_surface(anchor);
    result.appliedTransform = align_to_anchor(settled, anchor, area, 0.0);

    const Nid base = work.max_nid();
    const auto count = static_cast<Nid>(settled.graph.size());
    if (base > std::numeric_limits<Nid>::max() - count) throw Error(Errc::NidOverflow, "nid space exhausted");
    Nid next = base + 1;
    for (const auto& [nid, n] : settled.graph.nodes()) result.nidMap[nid] = next++;

    for (const auto& [nid, n] : settled.graph.nodes()) {
        ObjectNode moved = result.appliedTransform.apply(n);
        moved.nid = result.nidMap.at(nid);
        work.add_node(std::move(moved));
    }
    for (const auto& e : settled.graph.edges())
        work.add_edge({result.nidMap.at(e.src), result.nidMap.at(e.dst), e.relation});
    for (Nid r : settled.graph.strong_roots()) work.add_edge({anchorNid, result.nidMap.at(r), Relation::on()});
    work.record_relative_transforms();
    result.report = layout::optimize_layout(work, maxPasses);
    global = std::move(work);
    return result;
}

inline bool is_floor_category(const std::string& c) {
    std::string lower(c);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return lower == "floor";
}

struct InitialBuild {
    Graph graph;
    alignment::AlignReport alignment;
    layout::LayoutReport report;
};

/// Step-0 construction: the floor is the anchor. Other strong roots are put
/// 'On' the floor, yaws snapped to the dominant orthogonal family, transforms
/// recorded and the layout optimized.
inline InitialBuild build_initial_global(const LocalScene& local, int maxPasses = 8) {
    const Graph& g = local.graph;
    std::optional<Nid> floor;
    for (Nid r : g.strong_roots()) {
        if (is_floor_category(g.node(r).category)) {
            floor = r;
            break;
        }
    }
    if (!floor) throw Error(Errc::MissingFloor, "initial scene needs a floor node as a strong root");

    InitialBuild out;
    out.graph = g;
    for (Nid r : g.strong_roots()) {
        if (r == *floor) continue;
        if (!out.graph.node(r).upright()) continue;
        out.graph.add_edge({*floor, r, Relation::on()});
    }
    out.alignment = alignment::align_scene(out.graph);
    out.graph.record_relative_transforms();
    out.report = layout::optimize_layout(out.graph, maxPasses);
    return out;
}

}  // namespace higs::composition
