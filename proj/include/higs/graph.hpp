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

#include "higs/error.hpp"
#include "higs/node.hpp"

namespace higs {

enum class ViolationKind {
    NidMismatch,
    DuplicateNid,
    InvalidGeometry,
    NotUpright,
    DanglingEdge,
    SelfLoop,
    DuplicateEdge,
    StrongParentConflict,
    StrongCycle,
    MissingRelTransform,
    OrphanRelTransform,
};

constexpr std::string_view to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::NidMismatch: return "NidMismatch";
        case ViolationKind::DuplicateNid: return "DuplicateNid";
        case ViolationKind::InvalidGeometry: return "InvalidGeometry";
        case ViolationKind::NotUpright: return "NotUpright";
        case ViolationKind::DanglingEdge: return "DanglingEdge";
        case ViolationKind::SelfLoop: return "SelfLoop";
        case ViolationKind::DuplicateEdge: return "DuplicateEdge";
        case ViolationKind::StrongParentConflict: return "StrongParentConflict";
        case ViolationKind::StrongCycle: return "StrongCycle";
        case ViolationKind::MissingRelTransform: return "MissingRelTransform";
        case ViolationKind::OrphanRelTransform: return "OrphanRelTransform";
    }
    return "Unknown";
}

struct Violation {
    ViolationKind kind;
    std::vector<Nid> nids;
    std::string message;
};

/// Progressive hierarchical spatial-semantic graph.
///
/// Nodes are keyed by nid; edges are kept sorted by (src, dst, relation) so
/// iteration order is canonical. Strong edges ('On', 'Inside') form a forest
/// and each carries a RelativeTransform recorded from world poses. Every
/// successful mutation bumps `revision()` by one.
///
/// The graph is a value type: copying it yields an independent snapshot that
/// can be read from another thread while the original keeps being mutated.
class Graph {
public:
    using NodeMap = std::map<Nid, ObjectNode>;
    using EdgeList = std::vector<RelationEdge>;
    using TransformMap = std::map<EdgeKey, RelativeTransform>;

    const NodeMap& nodes() const { return nodes_; }
    const EdgeList& edges() const { return edges_; }
    const TransformMap& rel_transforms() const { return transforms_; }
    std::uint64_t revision() const { return revision_; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }

    bool contains(Nid nid) const { return nodes_.count(nid) != 0; }

    const ObjectNode& node(Nid nid) const {
        auto it = nodes_.find(nid);
        if (it == nodes_.end()) throw Error(Errc::UnknownNid, "no node " + std::to_string(nid));
        return it->second;
    }

    /// Largest nid in use, or 0 for an empty graph.
    Nid max_nid() const { return nodes_.empty() ? 0 : nodes_.rbegin()->first; }

    void add_node(ObjectNode n) {
        if (contains(n.nid)) throw Error(Errc::DuplicateNid, "nid " + std::to_string(n.nid) + " already present");
        if (!n.has_valid_geometry())
            throw Error(Errc::InvalidGeometry, "node " + std::to_string(n.nid) + " has non-positive scale/extents");
        const Nid nid = n.nid;
        nodes_.emplace(nid, std::move(n));
        ++revision_;
    }

    void add_edge(const RelationEdge& e) {
        insert_edge(e);
        ++revision_;
    }

    void remove_edge(const RelationEdge& e) {
        auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
        if (it == edges_.end() || *it != e) throw Error(Errc::InvalidArgument, "edge not present");
        edges_.erase(it);
        if (e.relation.strong()) {
            transforms_.erase({e.src, e.dst});
            strongParent_.erase(e.dst);
            strongChildren_[e.src].erase(e.dst);
        }
        ++revision_;
    }

    /// Removes `nid` and its incident edges. With `cascade`, the whole strong
    /// subtree goes too; otherwise strong children are re-attached to the
    /// removed node's strong parent (or become roots) with transforms
    /// recomputed from their current world poses.
    void remove_node(Nid nid, bool cascade) {
        node(nid);
        std::set<Nid> victims{nid};
        std::vector<RelationEdge> orphanEdges;
        std::optional<RelationEdge> parentEdge = strong_parent_edge(nid);
        if (cascade) {
            for (Nid d : strong_descendants(nid)) victims.insert(d);
        } else {
            for (Nid c : strong_children(nid)) orphanEdges.push_back(*strong_parent_edge(c));
        }

        std::erase_if(edges_, [&](const RelationEdge& e) { return victims.count(e.src) || victims.count(e.dst); });
        std::erase_if(transforms_, [&](const auto& kv) {
            return victims.count(kv.first.first) || victims.count(kv.first.second);
        });
        for (Nid v : victims) nodes_.erase(v);
        rebuild_index();

        if (parentEdge) {
            const ObjectNode& grand = nodes_.at(parentEdge->src);
            for (const auto& oe : orphanEdges) {
                const ObjectNode& child = nodes_.at(oe.dst);
                if (oe.relation.kind == RelationKind::On && !(grand.upright() && child.upright())) continue;
                insert_edge({parentEdge->src, oe.dst, oe.relation});
            }
        }
        ++revision_;
    }

    /// Sets a node's world pose, then carries its strong descendants along.
    void modify_node_pose(Nid nid, const Vec3& pos, const Vec3& rot) {
        ObjectNode& n = mutable_node(nid);
        if (!is_finite(pos) || !is_finite(rot)) throw Error(Errc::InvalidGeometry, "non-finite pose");
        if ((rot.x != 0.0 || rot.y != 0.0) && participates_in_on(nid))
            throw Error(Errc::NotUpright, "node " + std::to_string(nid) + " takes part in an On relation");
        n.pos = pos;
        n.rot = rot;
        propagate_descendants(nid);
        ++revision_;
    }

    /// Re-applies stored relative transforms below `nid`, parent before child.
    void propagate_pose(Nid nid) {
        node(nid);
        propagate_descendants(nid);
        ++revision_;
    }

    /// Recomputes the transform of every strong edge from current world poses.
    void record_relative_transforms() {
        for (const auto& e : edges_) {
            if (!e.relation.strong()) continue;
            transforms_[{e.src, e.dst}] = relative_transform(nodes_.at(e.src), nodes_.at(e.dst));
        }
        ++revision_;
    }

    std::optional<RelationEdge> strong_parent_edge(Nid nid) const {
        auto it = strongParent_.find(nid);
        if (it == strongParent_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<Nid> strong_parent(Nid nid) const {
        auto e = strong_parent_edge(nid);
        if (!e) return std::nullopt;
        return e->src;
    }

    /// Strong children sorted by nid.
    std::vector<Nid> strong_children(Nid nid) const {
        auto it = strongChildren_.find(nid);
        if (it == strongChildren_.end()) return {};
        return {it->second.begin(), it->second.end()};
    }

    /// Nodes without a strong parent, in nid order.
    std::vector<Nid> strong_roots() const {
        std::vector<Nid> out;
        for (const auto& [nid, n] : nodes_)
            if (!strongParent_.count(nid)) out.push_back(nid);
        return out;
    }

    /// Strong subtree below `nid` (excluding it) in parent-before-child
    /// pre-order, siblings by ascending nid.
    std::vector<Nid> strong_descendants(Nid nid) const {
        node(nid);
        std::vector<Nid> out;
        std::vector<Nid> stack;
        auto push_children = [&](Nid p) {
            auto kids = strong_children(p);
            for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
        };
        push_children(nid);
        while (!stack.empty()) {
            Nid cur = stack.back();
            stack.pop_back();
            out.push_back(cur);
            push_children(cur);
        }
        return out;
    }

    /// Depth of the deepest strong chain (a lone root has depth 1).
    std::size_t strong_depth() const {
        std::size_t best = 0;
        std::vector<std::pair<Nid, std::size_t>> stack;
        for (Nid r : strong_roots()) stack.emplace_back(r, 1);
        while (!stack.empty()) {
            auto [n, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            for (Nid c : strong_children(n)) stack.emplace_back(c, d + 1);
        }
        return best;
    }

    bool participates_in_on(Nid nid) const {
        return std::any_of(edges_.begin(), edges_.end(), [&](const RelationEdge& e) {
            return e.relation.kind == RelationKind::On && (e.src == nid || e.dst == nid);
        });
    }

    /// Re-applies stored transforms below `nid` without bumping the revision.
    void carry_descendants(Nid nid) { propagate_descendants(nid); }

    /// Re-records the transform of one strong edge from current poses.
    void record_transform(const EdgeKey& key) {
        if (!transforms_.count(key)) throw Error(Errc::InvalidArgument, "not a strong edge");
        transforms_[key] = relative_transform(nodes_.at(key.first), nodes_.at(key.second));
    }

    /// Direct pose write without propagation or transform bookkeeping. Used by
    /// the layout and alignment passes, which maintain those themselves.
    void set_pose_raw(Nid nid, const Vec3& pos, const Vec3& rot) {
        ObjectNode& n = mutable_node(nid);
        n.pos = pos;
        n.rot = rot;
    }

    /// Applies `f` to the underlying containers without any invariant checks,
    /// then rebuilds the strong-edge index. Meant for loaders and for tests
    /// that construct invalid graphs on purpose; run validate() afterwards.
    void mutate_raw(const std::function<void(NodeMap&, EdgeList&, TransformMap&)>& f) {
        f(nodes_, edges_, transforms_);
        std::sort(edges_.begin(), edges_.end());
        rebuild_index();
    }

    void bump_revision() { ++revision_; }
    void set_revision(std::uint64_t r) { revision_ = r; }

private:
    ObjectNode& mutable_node(Nid nid) {
        auto it = nodes_.find(nid);
        if (it == nodes_.end()) throw Error(Errc::UnknownNid, "no node " + std::to_string(nid));
        return it->second;
    }

    bool is_strong_ancestor(Nid candidate, Nid of) const {
        std::optional<Nid> cur = strong_parent(of);
        std::size_t guard = 0;
        while (cur && guard++ <= nodes_.size()) {
            if (*cur == candidate) return true;
            cur = strong_parent(*cur);
        }
        return false;
    }

    void insert_edge(const RelationEdge& e) {
        if (!contains(e.src)) throw Error(Errc::UnknownNid, "edge source " + std::to_string(e.src));
        if (!contains(e.dst)) throw Error(Errc::UnknownNid, "edge destination " + std::to_string(e.dst));
        if (e.src == e.dst) throw Error(Errc::InvalidArgument, "self loop on " + std::to_string(e.src));
        auto pos = std::lower_bound(edges_.begin(), edges_.end(), e);
        if (pos != edges_.end() && *pos == e) throw Error(Errc::DuplicateEdge, "edge already present");
        if (e.relation.strong()) {
            if (strongParent_.count(e.dst))
                throw Error(Errc::StrongParentConflict,
                            "node " + std::to_string(e.dst) + " already has a strong parent");
            if (is_strong_ancestor(e.dst, e.src))
                throw Error(Errc::StrongCycle, "edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                                                   " closes a strong cycle");
        }
        if (e.relation.kind == RelationKind::On && !(nodes_.at(e.src).upright() && nodes_.at(e.dst).upright()))
            throw Error(Errc::NotUpright, "On endpoints must have zero roll and pitch");
        edges_.insert(pos, e);
        if (e.relation.strong()) {
            strongParent_.emplace(e.dst, e);
            strongChildren_[e.src].insert(e.dst);
            transforms_[{e.src, e.dst}] = relative_transform(nodes_.at(e.src), nodes_.at(e.dst));
        }
    }

    void propagate_descendants(Nid nid) {
        for (Nid d : strong_descendants(nid)) {
            const RelationEdge pe = *strong_parent_edge(d);
            auto t = transforms_.find({pe.src, pe.dst});
            if (t == transforms_.end()) continue;
            apply_relative(nodes_.at(pe.src), t->second, nodes_.at(d));
        }
    }

    void rebuild_index() {
        strongParent_.clear();
        strongChildren_.clear();
        for (const auto& e : edges_) {
            if (!e.relation.strong()) continue;
            strongParent_.emplace(e.dst, e);
            strongChildren_[e.src].insert(e.dst);
        }
    }

    NodeMap nodes_;
    EdgeList edges_;
    TransformMap transforms_;
    std::uint64_t revision_{0};

    // Derived from edges_; first strong edge wins on (invalid) conflicts.
    std::map<Nid, RelationEdge> strongParent_;
    std::map<Nid, std::set<Nid>> strongChildren_;
};

/// Graph equality on content: nodes, edges and transforms. Revision is ignored.
inline bool same_content(const Graph& a, const Graph& b) {
    return a.nodes() == b.nodes() && a.edges() == b.edges() && a.rel_transforms() == b.rel_transforms();
}

/// Checks every structural invariant; an empty result means the graph is valid.
inline std::vector<Violation> validate(const Graph& g) {
    std::vector<Violation> out;
    const auto& nodes = g.nodes();

    std::map<Nid, int> nidCount;
    for (const auto& [key, n] : nodes) {
        if (key != n.nid)
            out.push_back({ViolationKind::NidMismatch, {key, n.nid},
                           "node stored under " + std::to_string(key) + " carries nid " + std::to_string(n.nid)});
        ++nidCount[n.nid];
        if (!n.has_valid_geometry())
            out.push_back({ViolationKind::InvalidGeometry, {key}, "non-positive or non-finite geometry"});
    }
    for (const auto& [nid, c] : nidCount)
        if (c > 1) out.push_back({ViolationKind::DuplicateNid, {nid}, "nid used by several nodes"});

    std::set<RelationEdge> seen;
    std::map<Nid, std::vector<Nid>> strongParents;
    std::map<Nid, std::vector<Nid>> strongKids;
    std::set<EdgeKey> strongKeys;
    std::set<Nid> notUprightReported;
    for (const auto& e : g.edges()) {
        if (!seen.insert(e).second) {
            out.push_back({ViolationKind::DuplicateEdge, {e.src, e.dst}, "duplicate " + e.relation.name() + " edge"});
            continue;
        }
        if (e.src == e.dst) {
            out.push_back({ViolationKind::SelfLoop, {e.src}, "edge from a node to itself"});
            continue;
        }
        const bool srcOk = nodes.count(e.src) != 0;
        const bool dstOk = nodes.count(e.dst) != 0;
        if (!srcOk || !dstOk) {
            std::vector<Nid> missing;
            if (!srcOk) missing.push_back(e.src);
            if (!dstOk) missing.push_back(e.dst);
            out.push_back({ViolationKind::DanglingEdge, missing, "edge endpoint does not exist"});
            continue;
        }
        if (e.relation.kind == RelationKind::On) {
            for (Nid n : {e.src, e.dst}) {
                if (!nodes.at(n).upright() && notUprightReported.insert(n).second)
                    out.push_back({ViolationKind::NotUpright, {n}, "On participant with roll/pitch"});
            }
        }
        if (e.relation.strong()) {
            strongParents[e.dst].push_back(e.src);
            strongKids[e.src].push_back(e.dst);
            strongKeys.insert({e.src, e.dst});
        }
    }
    for (const auto& [child, parents] : strongParents) {
        if (parents.size() > 1) {
            std::vector<Nid> ids{child};
            ids.insert(ids.end(), parents.begin(), parents.end());
            out.push_back({ViolationKind::StrongParentConflict, ids, "node has several strong parents"});
        }
    }

    // Colour DFS over strong edges; every back edge closes a cycle.
    std::map<Nid, int> colour;
    std::set<std::vector<Nid>> cycles;
    std::vector<Nid> path;
    std::function<void(Nid)> dfs = [&](Nid u) {
        colour[u] = 1;
        path.push_back(u);
        auto it = strongKids.find(u);
        if (it != strongKids.end()) {
            for (Nid v : it->second) {
                if (colour[v] == 1) {
                    auto from = std::find(path.begin(), path.end(), v);
                    std::vector<Nid> cyc(from, path.end());
                    std::sort(cyc.begin(), cyc.end());
                    cycles.insert(cyc);
                } else if (colour[v] == 0) {
                    dfs(v);
                }
            }
        }
        path.pop_back();
        colour[u] = 2;
    };
    for (const auto& [nid, n] : nodes)
        if (colour[nid] == 0) dfs(nid);
    for (const auto& cyc : cycles) out.push_back({ViolationKind::StrongCycle, cyc, "strong edges form a cycle"});

    for (const auto& key : strongKeys)
        if (!g.rel_transforms().count(key))
            out.push_back({ViolationKind::MissingRelTransform, {key.first, key.second}, "strong edge without transform"});
    for (const auto& [key, t] : g.rel_transforms())
        if (!strongKeys.count(key) || t.edgeKey != key)
            out.push_back({ViolationKind::OrphanRelTransform, {key.first, key.second},
                           "transform without a matching strong edge"});
    return out;
}

}  // namespace higs
