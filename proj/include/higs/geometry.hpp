#pragma once

#include <algorithm>
#include <limits>
#include <span>

#include "higs/error.hpp"
#include "higs/node.hpp"

namespace higs::geometry {

struct Rect2 {
    Vec2 center;
    Vec2 halfExtents{1.0, 1.0};
    double yaw{0.0};
};

/// Region on a supporter's top face where dependents may rest. Both `rect`
/// and `height` are expressed in the supporter's local frame.
struct PlacementArea {
    Rect2 rect;
    double height{0.0};
};

struct OrientedBoundingBox {
    Vec3 center;
    Vec3 halfExtents;
    double yaw{0.0};
};

struct ClampResult {
    Vec2 clamped;
    Vec2 delta;
};

inline Vec2 yaw_rotate(const Vec2& v, double yaw) { return rotate2(v, yaw); }

inline Vec2 world_to_local(const Vec2& point, const Vec2& framePos, double frameYaw) {
    return rotate2(point - framePos, -frameYaw);
}

inline Vec2 local_to_world(const Vec2& point, const Vec2& framePos, double frameYaw) {
    return framePos + rotate2(point, frameYaw);
}

/// Componentwise clamp into [-h, +h]. For an axis-aligned rectangle this is
/// the Euclidean projection, so `delta` is the minimal-norm translation.
inline ClampResult clamp_to_rect(const Vec2& point, const Vec2& halfExtents) {
    const Vec2 c{std::clamp(point.x, -halfExtents.x, halfExtents.x),
                 std::clamp(point.y, -halfExtents.y, halfExtents.y)};
    return {c, c - point};
}

/// Closed-set membership: boundary points are inside.
inline bool point_in_rect(const Vec2& point, const Rect2& rect) {
    const Vec2 local = world_to_local(point, rect.center, rect.yaw);
    return std::abs(local.x) <= rect.halfExtents.x && std::abs(local.y) <= rect.halfExtents.y;
}

/// Tightest box at the given yaw containing every posed, scaled corner.
inline OrientedBoundingBox obb_of_nodes(std::span<const ObjectNode> nodes, double yaw) {
    if (nodes.empty()) throw Error(Errc::EmptySet, "obb_of_nodes needs at least one node");
    constexpr double inf = std::numeric_limits<double>::infinity();
    Vec3 lo{inf, inf, inf};
    Vec3 hi{-inf, -inf, -inf};
    for (const auto& n : nodes) {
        for (const Vec3& c : corners(n)) {
            const Vec3 p = rotate_about_z(c, -yaw);
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
    }
    OrientedBoundingBox box;
    box.yaw = yaw;
    box.halfExtents = (hi - lo) * 0.5;
    box.center = rotate_about_z((lo + hi) * 0.5, yaw);
    return box;
}

/// Whether `p` lies inside `box` (closed), with slack `eps`.
inline bool obb_contains(const OrientedBoundingBox& box, const Vec3& p, double eps = 0.0) {
    const Vec3 local = rotate_about_z(p - box.center, -box.yaw);
    return std::abs(local.x) <= box.halfExtents.x + eps && std::abs(local.y) <= box.halfExtents.y + eps &&
           std::abs(local.z) <= box.halfExtents.z + eps;
}

inline PlacementArea top_surface(const ObjectNode& node, double insetRatio = 0.0) {
    if (!(insetRatio >= 0.0 && insetRatio < 1.0))
        throw Error(Errc::InvalidArgument, "insetRatio must lie in [0, 1)");
    const Vec3 h = node.scaled_half_extents();
    PlacementArea area;
    area.rect.center = {0.0, 0.0};
    area.rect.halfExtents = Vec2{h.x, h.y} * (1.0 - insetRatio);
    area.rect.yaw = 0.0;
    area.height = h.z;
    return area;
}

}  // namespace higs::geometry
