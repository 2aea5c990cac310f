#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "higs/vec.hpp"

namespace higs {

using Nid = std::int64_t;

/// One scene entity. `pos` is the geometric center in the world frame
/// (right-handed, +Z up); `rot` is (roll, pitch, yaw) in radians with yaw
/// about +Z; the box spans `halfExtents * scale` about `pos`.
struct ObjectNode {
    Nid nid{0};
    std::string category;
    Vec3 pos;
    Vec3 rot;
    double scale{1.0};
    Vec3 halfExtents{0.5, 0.5, 0.5};

    double roll() const { return rot.x; }
    double pitch() const { return rot.y; }
    double yaw() const { return rot.z; }
    bool upright() const { return rot.x == 0.0 && rot.y == 0.0; }

    Vec3 scaled_half_extents() const { return halfExtents * scale; }

    bool has_valid_geometry() const {
        return std::isfinite(scale) && scale > 0.0 && is_finite(pos) && is_finite(rot) &&
               is_finite(halfExtents) && halfExtents.x > 0.0 && halfExtents.y > 0.0 &&
               halfExtents.z > 0.0;
    }

    bool operator==(const ObjectNode&) const = default;
};

enum class RelationKind { On, Inside, Adjacent, Facing, Under, Other };

/// Relation vocabulary. `label` carries the free text of `Other` relations and
/// is empty for the named kinds.
struct Relation {
    RelationKind kind{RelationKind::On};
    std::string label;

    static Relation on() { return {RelationKind::On, {}}; }
    static Relation inside() { return {RelationKind::Inside, {}}; }
    static Relation adjacent() { return {RelationKind::Adjacent, {}}; }
    static Relation facing() { return {RelationKind::Facing, {}}; }
    static Relation under() { return {RelationKind::Under, {}}; }

    /// Parses a relation name; unknown names become `Other(name)`.
    static Relation parse(const std::string& name) {
        if (name == "On") return on();
        if (name == "Inside") return inside();
        if (name == "Adjacent") return adjacent();
        if (name == "Facing") return facing();
        if (name == "Under") return under();
        return {RelationKind::Other, name};
    }

    bool strong() const { return kind == RelationKind::On || kind == RelationKind::Inside; }

    std::string name() const {
        switch (kind) {
            case RelationKind::On: return "On";
            case RelationKind::Inside: return "Inside";
            case RelationKind::Adjacent: return "Adjacent";
            case RelationKind::Facing: return "Facing";
            case RelationKind::Under: return "Under";
            case RelationKind::Other: return label;
        }
        return label;
    }

    bool operator==(const Relation&) const = default;
    auto operator<=>(const Relation&) const = default;
};

/// src is the depended-upon (parent) node, dst the dependent (child).
struct RelationEdge {
    Nid src{0};
    Nid dst{0};
    Relation relation;

    bool operator==(const RelationEdge&) const = default;
    auto operator<=>(const RelationEdge&) const = default;
};

using EdgeKey = std::pair<Nid, Nid>;

/// Child pose expressed in its strong parent's frame.
struct RelativeTransform {
    EdgeKey edgeKey{0, 0};
    Vec3 translation;
    double yawDelta{0.0};
    double scaleRatio{1.0};

    bool operator==(const RelativeTransform&) const = default;
};

inline Vec2 rotate2(const Vec2& v, double yaw) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Rotates the horizontal part of `v` about +Z; z is untouched.
inline Vec3 rotate_about_z(const Vec3& v, double yaw) {
    return with_z(rotate2(v.xy(), yaw), v.z);
}

/// Full Euler rotation R = Rz(yaw) * Ry(pitch) * Rx(roll) applied to v.
inline Vec3 rotate_euler(const Vec3& v, const Vec3& rpy) {
    const double cr = std::cos(rpy.x), sr = std::sin(rpy.x);
    const double cp = std::cos(rpy.y), sp = std::sin(rpy.y);
    // Rx
    const Vec3 a{v.x, cr * v.y - sr * v.z, sr * v.y + cr * v.z};
    // Ry
    const Vec3 b{cp * a.x + sp * a.z, a.y, -sp * a.x + cp * a.z};
    return rotate_about_z(b, rpy.z);
}

/// The eight posed corners of a node's scaled box.
inline std::array<Vec3, 8> corners(const ObjectNode& n) {
    const Vec3 h = n.scaled_half_extents();
    std::array<Vec3, 8> out{};
    int i = 0;
    for (double sx : {-1.0, 1.0}) {
        for (double sy : {-1.0, 1.0}) {
            for (double sz : {-1.0, 1.0}) {
                const Vec3 local{sx * h.x, sy * h.y, sz * h.z};
                const Vec3 r = n.upright() ? rotate_about_z(local, n.yaw()) : rotate_euler(local, n.rot);
                out[i++] = n.pos + r;
            }
        }
    }
    return out;
}

/// Relative transform of `child` in the frame of `parent` from current world poses.
inline RelativeTransform relative_transform(const ObjectNode& parent, const ObjectNode& child) {
    RelativeTransform t;
    t.edgeKey = {parent.nid, child.nid};
    t.translation = rotate_about_z(child.pos - parent.pos, -parent.yaw());
    t.yawDelta = child.yaw() - parent.yaw();
    t.scaleRatio = child.scale / parent.scale;
    return t;
}

/// Child world position and yaw implied by `parent` composed with `rel`.
/// Scale is not touched: scale changes only through explicit re-recording.
inline void apply_relative(const ObjectNode& parent, const RelativeTransform& rel, ObjectNode& child) {
    child.pos = parent.pos + rotate_about_z(rel.translation, parent.yaw());
    child.rot.z = parent.yaw() + rel.yawDelta;
}

}  // namespace higs
