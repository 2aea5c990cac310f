#pragma once

// Generators and small oracles shared by the unit and acceptance suites.

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "higs/higs.hpp"

namespace higs::testing {

inline ObjectNode box(Nid nid, const std::string& category, Vec3 pos, double yaw = 0.0, Vec3 half = {0.5, 0.5, 0.5},
                      double scale = 1.0) {
    return {nid, category, pos, {0.0, 0.0, yaw}, scale, half};
}

inline Vec2 random_unit(Rng& rng) {
    const double a = rng.uniform(-kPi, kPi);
    return {std::cos(a), std::sin(a)};
}

inline Vec3 random_half(Rng& rng, double lo = 0.05, double hi = 1.0) {
    return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

struct ForestOptions {
    int maxDepth{5};
    int maxFanout{4};
    int roots{1};
    /// Child centres are sampled within this multiple of the parent footprint.
    double spread{2.0};
    double insideProbability{0.0};
    double weakEdgeProbability{0.0};
    std::size_t maxNodes{400};
};

/// Random strong forest: upright boxes, children scattered around their
/// parent at random heights, linked by 'On' (occasionally 'Inside') edges.
inline Graph random_forest(Rng& rng, const ForestOptions& opt = {}) {
    Graph g;
    Nid next = 1;
    std::function<void(Nid, int)> grow = [&](Nid parent, int depth) {
        if (depth >= opt.maxDepth) return;
        const int kids = static_cast<int>(rng.index(static_cast<std::uint64_t>(opt.maxFanout) + 1));
        for (int k = 0; k < kids && g.size() < opt.maxNodes; ++k) {
            const ObjectNode& p = g.node(parent);
            const Vec3 ph = p.scaled_half_extents();
            const Vec2 local{rng.uniform(-opt.spread, opt.spread) * ph.x, rng.uniform(-opt.spread, opt.spread) * ph.y};
            const Vec2 w = p.pos.xy() + rotate2(local, p.yaw());
            const double s = rng.uniform(0.5, 1.5);
            const Vec3 half = random_half(rng, 0.05, 0.6);
            ObjectNode c = box(next++, "obj", {w.x, w.y, p.pos.z + ph.z + rng.uniform(-0.2, 0.6)},
                               rng.uniform(-kPi, kPi), half, s);
            const Nid cid = c.nid;
            g.add_node(c);
            const Relation rel = rng.chance(opt.insideProbability) ? Relation::inside() : Relation::on();
            g.add_edge({parent, cid, rel});
            grow(cid, depth + 1);
        }
    };
    for (int r = 0; r < opt.roots; ++r) {
        ObjectNode root = box(next++, "root", {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 1)},
                              rng.uniform(-kPi, kPi), random_half(rng, 0.3, 1.5), rng.uniform(0.5, 2.0));
        const Nid rid = root.nid;
        g.add_node(root);
        grow(rid, 1);
    }
    if (opt.weakEdgeProbability > 0.0) {
        std::vector<Nid> ids;
        for (const auto& [nid, n] : g.nodes()) ids.push_back(nid);
        for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
            if (!rng.chance(opt.weakEdgeProbability)) continue;
            const Nid other = ids[rng.index(ids.size())];
            if (other == ids[i]) continue;
            const RelationEdge e{ids[i], other, rng.chance(0.5) ? Relation::adjacent() : Relation::facing()};
            if (std::find(g.edges().begin(), g.edges().end(), e) == g.edges().end()) g.add_edge(e);
        }
    }
    return g;
}

/// Seats `child` on `parent`'s top face with its centre at local offset `at`.
inline ObjectNode seated_on(const ObjectNode& parent, Nid nid, const Vec2& at, double yaw, Vec3 half, double scale) {
    const Vec2 w = parent.pos.xy() + rotate2(at, parent.yaw());
    const double z = parent.pos.z + parent.halfExtents.z * parent.scale + half.z * scale;
    return box(nid, "item", {w.x, w.y, z}, yaw, half, scale);
}

/// Local scene that is already stable: every root rests on z = 0 and every
/// 'On' child sits inside its parent's placement rectangle.
inline Graph stable_local_scene(Rng& rng, Nid firstNid = 1) {
    Graph g;
    Nid next = firstNid;
    const int roots = 1 + static_cast<int>(rng.index(4));
    std::vector<Nid> hosts;
    for (int r = 0; r < roots; ++r) {
        const Vec3 half = random_half(rng, 0.1, 0.8);
        const double s = rng.uniform(0.5, 1.5);
        g.add_node(box(next, "root", {rng.uniform(-3, 3), rng.uniform(-3, 3), half.z * s}, rng.uniform(-kPi, kPi),
                       half, s));
        hosts.push_back(next++);
    }
    const int items = static_cast<int>(rng.index(8));
    for (int i = 0; i < items; ++i) {
        const ObjectNode p = g.node(hosts[rng.index(hosts.size())]);
        const Vec3 ph = p.scaled_half_extents();
        const Vec2 at{rng.uniform(-ph.x, ph.x), rng.uniform(-ph.y, ph.y)};
        const ObjectNode c =
            seated_on(p, next, at, rng.uniform(-kPi, kPi), random_half(rng, 0.03, 0.3), rng.uniform(0.5, 1.5));
        g.add_node(c);
        g.add_edge({p.nid, next, Relation::on()});
        hosts.push_back(next++);
    }
    std::vector<Nid> ids;
    for (const auto& [nid, n] : g.nodes()) ids.push_back(nid);
    for (int k = 0; k < 3 && ids.size() > 1; ++k) {
        const Nid a = ids[rng.index(ids.size())], b = ids[rng.index(ids.size())];
        const RelationEdge e{a, b, Relation::adjacent()};
        if (a != b && std::find(g.edges().begin(), g.edges().end(), e) == g.edges().end()) g.add_edge(e);
    }
    return g;
}

/// Largest deviation, over all ordered pairs of local nodes, between the
/// pair's relative pose before and after a merge (translations scaled by s).
inline double max_rigidity_error(const Graph& local, const Graph& merged, const std::map<Nid, Nid>& nidMap,
                                 double s) {
    double worst = 0.0;
    for (const auto& [a, na] : local.nodes()) {
        const ObjectNode& ma = merged.node(nidMap.at(a));
        for (const auto& [b, nb] : local.nodes()) {
            if (a == b) continue;
            const ObjectNode& mb = merged.node(nidMap.at(b));
            const Vec2 before = rotate2((nb.pos - na.pos).xy(), -na.yaw()) * s;
            const Vec2 after = rotate2((mb.pos - ma.pos).xy(), -ma.yaw());
            worst = std::max({worst, norm(after - before), std::abs((mb.pos.z - ma.pos.z) - s * (nb.pos.z - na.pos.z)),
                              std::abs(wrap_angle((mb.yaw() - ma.yaw()) - (nb.yaw() - na.yaw())))});
        }
    }
    return worst;
}

/// Procedural session of `steps` steps with texts, anchors and the
/// occasional user edit drawn from `seed`.
inline pipeline::SceneSession random_session(std::uint64_t seed, int steps,
                                             const pipeline::BackendAdapters& adapters, double editProbability = 0.3) {
    static const std::vector<std::string> openers{"a cozy bedroom", "a small office", "a quiet study",
                                                  "a living room", "a campsite at dusk", "a desk and a sofa"};
    static const std::vector<std::string> fills{"a lamp and a book", "two mugs", "a plant and a vase",
                                                "three candles", "a laptop", "a pillow and a cushion",
                                                "a monitor and a keyboard", "a lantern", "a table with a mug"};
    Rng rng(mix_seed(seed, 0x5e55));
    pipeline::SceneSession s;
    s.sessionId = "t" + std::to_string(seed);
    s = pipeline::run_step(s, adapters, pipeline::kFloorAnchor, openers[rng.index(openers.size())], seed);
    for (int i = 1; i < steps; ++i) {
        std::vector<Nid> ids;
        for (const auto& [nid, n] : s.global.nodes()) ids.push_back(nid);
        const Nid anchor = ids[rng.index(ids.size())];
        s = pipeline::run_step(s, adapters, anchor, fills[rng.index(fills.size())], seed * 31 + i);
        if (rng.chance(editProbability)) {
            std::vector<Nid> now;
            for (const auto& [nid, n] : s.global.nodes()) now.push_back(nid);
            const Nid target = now[rng.index(now.size())];
            pipeline::EditRecord e;
            if (rng.chance(0.7) || target == 1) {
                const ObjectNode& n = s.global.node(target);
                e.kind = pipeline::EditRecord::Kind::Pose;
                e.nid = target;
                e.pos = n.pos + Vec3{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 0.0};
                e.rot = {0.0, 0.0, n.yaw() + rng.uniform(-0.5, 0.5)};
            } else {
                e.kind = pipeline::EditRecord::Kind::Remove;
                e.nid = target;
                e.cascade = rng.chance(0.5);
            }
            pipeline::apply_edit(s, e);
        }
    }
    return s;
}

/// Independent composition oracle: child pose = parent pose * relative.
struct Pose2 {
    Vec3 pos;
    double yaw{0.0};
};

inline Pose2 compose(const Pose2& parent, const Vec3& translation, double yawDelta) {
    const double c = std::cos(parent.yaw), s = std::sin(parent.yaw);
    return {{parent.pos.x + c * translation.x - s * translation.y, parent.pos.y + s * translation.x + c * translation.y,
             parent.pos.z + translation.z},
            parent.yaw + yawDelta};
}

/// Strong-cycle oracle: plain DFS over the strong adjacency of an edge list.
inline bool has_strong_cycle(const std::vector<RelationEdge>& edges) {
    std::map<Nid, std::vector<Nid>> adj;
    std::set<Nid> nodes;
    for (const auto& e : edges) {
        if (!e.relation.strong()) continue;
        adj[e.src].push_back(e.dst);
        nodes.insert(e.src);
        nodes.insert(e.dst);
    }
    std::map<Nid, int> state;
    std::function<bool(Nid)> visit = [&](Nid u) {
        state[u] = 1;
        for (Nid v : adj[u]) {
            if (state[v] == 1) return true;
            if (state[v] == 0 && visit(v)) return true;
        }
        state[u] = 2;
        return false;
    };
    for (Nid n : nodes)
        if (state[n] == 0 && visit(n)) return true;
    return false;
}

/// Minimal feasible translation found by sampling about 10^4 points of the
/// rectangle [-h, h]: its boundary densely plus a uniform interior grid.
inline double sampled_min_translation(const Vec2& p, const Vec2& h, int samples = 10000) {
    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](double x, double y) {
        const double dx = x - p.x, dy = y - p.y;
        best = std::min(best, dx * dx + dy * dy);
    };
    const int perSide = samples / 8;
    for (int i = 0; i <= perSide; ++i) {
        const double t = -1.0 + 2.0 * i / perSide;
        consider(t * h.x, -h.y);
        consider(t * h.x, h.y);
        consider(-h.x, t * h.y);
        consider(h.x, t * h.y);
    }
    const int grid = static_cast<int>(std::sqrt(samples / 2.0));
    for (int i = 0; i <= grid; ++i)
        for (int j = 0; j <= grid; ++j) consider((-1.0 + 2.0 * i / grid) * h.x, (-1.0 + 2.0 * j / grid) * h.y);
    return std::sqrt(best);
}

}  // namespace higs::testing
