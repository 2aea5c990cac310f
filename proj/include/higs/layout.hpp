#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "higs/geometry.hpp"
#include "higs/graph.hpp"

namespace higs::layout {

/// Moves smaller than this are treated as already satisfied, so repeated
/// passes reach an exact fixpoint despite frame-change round-off.
inline constexpr double kSettleTolerance = 1e-9;

enum class CorrectionReason { Stability, Propagation };

constexpr std::string_view to_string(CorrectionReason r) {
    return r == CorrectionReason::Stability ? "Stability" : "Propagation";
}

struct Correction {
    Nid nid{0};
    Vec3 deltaTranslation;
    CorrectionReason reason{CorrectionReason::Stability};
    int pass{0};
};

struct LayoutWarning {
    Nid nid{0};
    std::string message;
};

struct LayoutReport {
    std::vector<Correction> corrections;
    std::vector<LayoutWarning> warnings;
    int passes{0};
    bool converged{true};

    std::size_t stability_count() const {
        std::size_t n = 0;
        for (const auto& c : corrections) n += c.reason == CorrectionReason::Stability;
        return n;
    }
};

struct EdgeCorrection {
    Vec2 delta;         ///< applied horizontal translation, world frame
    Vec3 applied;       ///< full applied translation including vertical seating
    bool moved{false};
    bool overhang{false};
};

inline void record_relative_transforms(Graph& g) { g.record_relative_transforms(); }

inline void propagate_pose(Graph& g, Nid nid) { g.propagate_pose(nid); }

/// Seats the child of an 'On' edge on its parent's top surface and pulls its
/// center back inside the placement rectangle by the minimal horizontal move.
inline EdgeCorrection stability_correct_edge(Graph& g, const RelationEdge& edge, double insetRatio = 0.0,
                                             LayoutReport* report = nullptr, int pass = 0) {
    if (edge.relation.kind != RelationKind::On)
        throw Error(Errc::RelationMismatch, "stability correction applies to On edges only");
    const ObjectNode& parent = g.node(edge.src);
    const ObjectNode& child = g.node(edge.dst);
    if (!parent.upright() || !child.upright())
        throw Error(Errc::NotUpright, "stability correction needs upright endpoints");

    const geometry::PlacementArea area = geometry::top_surface(parent, insetRatio);
    const Vec2 local = geometry::world_to_local(child.pos.xy(), parent.pos.xy(), parent.yaw());
    const auto clamp = geometry::clamp_to_rect(local - area.rect.center, area.rect.halfExtents);

    EdgeCorrection out;
    {
        const Vec3 ch = child.scaled_half_extents();
        const double rel = child.yaw() - parent.yaw();
        const double fx = std::abs(std::cos(rel)) * ch.x + std::abs(std::sin(rel)) * ch.y;
        const double fy = std::abs(std::sin(rel)) * ch.x + std::abs(std::cos(rel)) * ch.y;
        out.overhang = fx > area.rect.halfExtents.x || fy > area.rect.halfExtents.y;
    }

    Vec3 target = child.pos;
    if (norm(clamp.delta) > kSettleTolerance) {
        const Vec2 w = geometry::local_to_world(clamp.clamped + area.rect.center, parent.pos.xy(), parent.yaw());
        target.x = w.x;
        target.y = w.y;
    }
    const double seatZ = parent.pos.z + area.height + child.halfExtents.z * child.scale;
    if (std::abs(seatZ - target.z) > kSettleTolerance) target.z = seatZ;

    if (target == child.pos) return out;

    const Vec3 before = child.pos;
    const Nid cid = child.nid;
    const Vec3 rot = child.rot;
    const std::vector<Nid> desc = g.strong_descendants(cid);
    std::vector<Vec3> descBefore;
    descBefore.reserve(desc.size());
    for (Nid d : desc) descBefore.push_back(g.node(d).pos);

    g.set_pose_raw(cid, target, rot);
    g.carry_descendants(cid);
    g.record_transform({edge.src, edge.dst});

    out.moved = true;
    out.applied = target - before;
    out.delta = out.applied.xy();
    if (report) {
        report->corrections.push_back({cid, out.applied, CorrectionReason::Stability, pass});
        for (std::size_t i = 0; i < desc.size(); ++i)
            report->corrections.push_back(
                {desc[i], g.node(desc[i]).pos - descBefore[i], CorrectionReason::Propagation, pass});
    }
    return out;
}

/// Runs stability correction over every 'On' edge, strong roots in nid order
/// and parent before child within each tree, until a pass changes nothing or
/// `maxPasses` is exhausted.
inline LayoutReport optimize_layout(Graph& g, int maxPasses = 8, double insetRatio = 0.0) {
    if (maxPasses < 1) throw Error(Errc::InvalidArgument, "maxPasses must be >= 1");
    LayoutReport report;
    report.converged = false;
    std::set<Nid> warned;
    bool changed = false;
    for (int pass = 1; pass <= maxPasses; ++pass) {
        report.passes = pass;
        std::size_t moves = 0;
        for (Nid root : g.strong_roots()) {
            for (Nid n : g.strong_descendants(root)) {
                const RelationEdge pe = *g.strong_parent_edge(n);
                if (pe.relation.kind != RelationKind::On) continue;
                EdgeCorrection c = stability_correct_edge(g, pe, insetRatio, &report, pass);
                if (c.moved) ++moves;
                if (c.overhang && warned.insert(n).second)
                    report.warnings.push_back({n, "footprint larger than supporting surface; center clamped"});
            }
        }
        if (moves == 0) {
            report.converged = true;
            break;
        }
        changed = true;
    }
    if (changed) g.bump_revision();
    return report;
}

/// Number of 'On' edges whose child center lies outside the parent's
/// placement rectangle by more than `tol`.
inline std::size_t count_on_violations(const Graph& g, double tol = 1e-6, double insetRatio = 0.0) {
    std::size_t bad = 0;
    for (const auto& e : g.edges()) {
        if (e.relation.kind != RelationKind::On) continue;
        const ObjectNode& p = g.node(e.src);
        const ObjectNode& c = g.node(e.dst);
        const auto area = geometry::top_surface(p, insetRatio);
        const Vec2 local = geometry::world_to_local(c.pos.xy(), p.pos.xy(), p.yaw()) - area.rect.center;
        if (std::abs(local.x) > area.rect.halfExtents.x + tol || std::abs(local.y) > area.rect.halfExtents.y + tol)
            ++bad;
    }
    return bad;
}

}  // namespace higs::layout
