#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "higs/graph.hpp"

namespace higs::alignment {

/// Orthonormal pair of horizontal directions; the snap candidates are
/// {+d1, -d1, +d2, -d2} in that order.
struct DirectionBasis {
    Vec2 d1{1.0, 0.0};
    Vec2 d2{0.0, 1.0};

    std::array<Vec2, 4> candidates() const { return {d1, -d1, d2, -d2}; }
};

struct ForwardEntry {
    Nid nid{0};
    Vec2 f;
};
using ForwardSet = std::vector<ForwardEntry>;

inline constexpr double kDegenerateForward = 1e-6;

/// Horizontal forward direction of a node: local +X rotated by the full
/// Euler rotation, projected onto the ground plane and normalized. Empty when
/// the projection is (nearly) zero.
inline std::optional<Vec2> project_forward(const ObjectNode& node) {
    const Vec3 f = rotate_euler({1.0, 0.0, 0.0}, node.rot);
    const Vec2 h = f.xy();
    const double n = norm(h);
    if (n < kDegenerateForward) return std::nullopt;
    return Vec2{h.x / n, h.y / n};
}

struct KMeansResult {
    Vec2 c1;
    Vec2 c2;
    /// Every input lies on one line; c2 is meaningless and callers should
    /// synthesize the perpendicular.
    bool allParallel{false};
    int iterations{0};
};

/// Two-centre K-Means on lines through the origin: v and -v are the same
/// point. Assignment maximizes |v.c|; centres are sign-aligned means.
/// Initialization is deterministic: c1 is the first vector, c2 the vector
/// least aligned with it (first one on ties).
inline KMeansResult kmeans_abs_cosine(std::span<const Vec2> vectors, int maxIters = 50) {
    if (vectors.size() < 2) throw Error(Errc::TooFewVectors, "need at least two vectors");
    if (maxIters < 1) throw Error(Errc::InvalidArgument, "maxIters must be >= 1");

    auto aligned_mean = [&](const Vec2& ref, auto&& member) {
        Vec2 sum{0.0, 0.0};
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (!member(i)) continue;
            const Vec2& v = vectors[i];
            sum = sum + (dot(v, ref) < 0.0 ? -v : v);
        }
        return sum;
    };

    KMeansResult out;
    Vec2 c1 = vectors[0];
    bool parallel = true;
    for (const Vec2& v : vectors) {
        if (std::abs(dot(v, c1)) <= 1.0 - 1e-9) {
            parallel = false;
            break;
        }
    }
    if (parallel) {
        const Vec2 m = aligned_mean(c1, [](std::size_t) { return true; });
        out.c1 = normalized(m);
        out.c2 = perp(out.c1);
        out.allParallel = true;
        return out;
    }

    Vec2 c2 = vectors[1];
    double best = std::abs(dot(vectors[1], c1));
    for (std::size_t i = 2; i < vectors.size(); ++i) {
        const double a = std::abs(dot(vectors[i], c1));
        if (a < best) {
            best = a;
            c2 = vectors[i];
        }
    }

    std::vector<int> assign(vectors.size(), -1);
    int iter = 0;
    for (; iter < maxIters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            const int a = std::abs(dot(vectors[i], c2)) > std::abs(dot(vectors[i], c1)) ? 1 : 0;
            if (a != assign[i]) {
                assign[i] = a;
                changed = true;
            }
        }
        if (!changed) break;
        const Vec2 s1 = aligned_mean(c1, [&](std::size_t i) { return assign[i] == 0; });
        const Vec2 s2 = aligned_mean(c2, [&](std::size_t i) { return assign[i] == 1; });
        if (norm(s1) > 0.0) c1 = normalized(s1);
        if (norm(s2) > 0.0) c2 = normalized(s2);
    }
    out.c1 = c1;
    out.c2 = c2;
    out.iterations = iter;
    return out;
}

inline DirectionBasis gram_schmidt(const Vec2& c1, const Vec2& c2) {
    if (!(norm(c1) > 0.0) || !is_finite(c1)) throw Error(Errc::InvalidArgument, "c1 must be a finite non-zero vector");
    DirectionBasis b;
    b.d1 = normalized(c1);
    const Vec2 r = c2 - b.d1 * dot(c2, b.d1);
    // In the plane the residual is a multiple of perp(d1). Taking perp(d1)
    // with the residual's sign keeps d1.d2 exactly zero, where normalizing a
    // small residual would lose orthogonality to cancellation.
    const Vec2 p = perp(b.d1);
    b.d2 = norm(r) < 1e-6 || dot(r, p) >= 0.0 ? p : -p;
    return b;
}

/// argmax over {+d1, -d1, +d2, -d2} of f.d; exact ties go to the earlier
/// candidate.
inline Vec2 snap_direction(const Vec2& f, const DirectionBasis& basis) {
    const auto cands = basis.candidates();
    std::size_t best = 0;
    double bestDot = dot(f, cands[0]);
    for (std::size_t i = 1; i < cands.size(); ++i) {
        const double d = dot(f, cands[i]);
        if (d > bestDot) {
            best = i;
            bestDot = d;
        }
    }
    return cands[best];
}

/// Recovers the dominant orthogonal basis of a set of forward vectors.
inline DirectionBasis dominant_basis(std::span<const Vec2> forwards, int maxIters = 50) {
    const KMeansResult km = kmeans_abs_cosine(forwards, maxIters);
    if (km.allParallel) return {km.c1, perp(km.c1)};
    return gram_schmidt(km.c1, km.c2);
}

struct AlignReport {
    std::optional<DirectionBasis> basis;
    std::vector<Nid> snapped;
    std::vector<Nid> skippedDegenerate;
    std::vector<std::string> warnings;
};

/// Changes below this are left untouched so re-alignment is a bitwise no-op.
inline constexpr double kYawKeepTolerance = 1e-9;

/// Snaps every node's yaw onto the dominant orthogonal family of the scene.
/// Only yaw changes; strong-edge transforms are re-recorded afterwards.
inline AlignReport align_scene(Graph& g, int maxIters = 50) {
    AlignReport report;
    ForwardSet set;
    for (const auto& [nid, n] : g.nodes()) {
        if (auto f = project_forward(n))
            set.push_back({nid, *f});
        else
            report.skippedDegenerate.push_back(nid);
    }
    if (set.size() < 2) {
        report.warnings.push_back("fewer than two usable forward vectors; alignment skipped");
        return report;
    }
    std::vector<Vec2> fs;
    fs.reserve(set.size());
    for (const auto& e : set) fs.push_back(e.f);
    const DirectionBasis basis = dominant_basis(fs, maxIters);
    report.basis = basis;

    bool changed = false;
    for (const auto& e : set) {
        const ObjectNode& n = g.node(e.nid);
        Vec2 s = snap_direction(e.f, basis);
        // With |pitch| beyond 90 degrees the horizontal forward points against yaw.
        if (std::cos(n.pitch()) < 0.0) s = -s;
        const double target = std::atan2(s.y, s.x);
        const double delta = wrap_angle(target - n.yaw());
        if (std::abs(delta) <= kYawKeepTolerance) continue;
        Vec3 rot = n.rot;
        rot.z = n.yaw() + delta;
        g.set_pose_raw(e.nid, n.pos, rot);
        report.snapped.push_back(e.nid);
        changed = true;
    }
    if (changed) g.record_relative_transforms();
    return report;
}

}  // namespace higs::alignment
