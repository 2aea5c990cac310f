#include <gtest/gtest.h>

#include "support.hpp"

using namespace higs;
using namespace higs::layout;
using higs::testing::box;

namespace {

Graph desk_with_lamp(double offEdge) {
    Graph g;
    g.add_node(box(1, "desk", {0, 0, 0.375}, 0.0, {0.6, 0.35, 0.375}));
    // Lamp centre `offEdge` beyond the desk's +X edge, already at seat height.
    g.add_node(box(2, "lamp", {0.6 + offEdge, 0.1, 0.75 + 0.2}, 0.0, {0.1, 0.1, 0.2}));
    g.add_edge({1, 2, Relation::on()});
    return g;
}

}  // namespace

TEST(RecordRelativeTransforms, Examples) {
    Graph g;
    g.add_node(box(1, "p", {0, 0, 0}));
    g.add_node(box(2, "c", {1, 0, 0.5}));
    g.add_edge({1, 2, Relation::on()});
    record_relative_transforms(g);
    const auto& t = g.rel_transforms().at({1, 2});
    EXPECT_NEAR(t.translation.x, 1, 1e-15);
    EXPECT_NEAR(t.translation.z, 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(t.yawDelta, 0.0);

    Graph h;
    h.add_node(box(1, "p", {0, 0, 0}, kPi / 2));
    h.add_node(box(2, "c", {0, 1, 0}, kPi / 2));
    h.add_edge({1, 2, Relation::inside()});
    const auto& u = h.rel_transforms().at({1, 2});
    EXPECT_NEAR(u.translation.x, 1, 1e-15);
    EXPECT_NEAR(u.translation.y, 0, 1e-15);
}

TEST(RecordRelativeTransforms, ScaleRatioIsInformational) {
    Graph g;
    g.add_node(box(1, "p", {0, 0, 0}, 0, {0.5, 0.5, 0.5}, 2.0));
    g.add_node(box(2, "c", {0, 0, 1.5}, 0, {0.5, 0.5, 0.5}, 0.5));
    g.add_edge({1, 2, Relation::on()});
    EXPECT_DOUBLE_EQ(g.rel_transforms().at({1, 2}).scaleRatio, 0.25);
    g.modify_node_pose(1, {1, 0, 0}, {0, 0, 0});
    EXPECT_DOUBLE_EQ(g.node(2).scale, 0.5);
}

TEST(PropagatePose, Examples) {
    Graph g;
    g.add_node(box(1, "p", {0, 0, 0}));
    g.add_node(box(2, "c", {1, 0, 0}));
    g.add_edge({1, 2, Relation::on()});
    g.set_pose_raw(1, {2, 0, 0}, {0, 0, 0});
    propagate_pose(g, 1);
    EXPECT_NEAR(g.node(2).pos.x, 3, 1e-15);

    g.set_pose_raw(1, {2, 0, 0}, {0, 0, kPi / 2});
    propagate_pose(g, 1);
    EXPECT_NEAR(g.node(2).pos.x, 2, 1e-15);
    EXPECT_NEAR(g.node(2).pos.y, 1, 1e-15);
}

TEST(PropagatePose, WeakEdgesNeverMove) {
    Graph g;
    g.add_node(box(1, "p", {0, 0, 0}));
    g.add_node(box(2, "c", {1, 0, 0}));
    g.add_edge({1, 2, Relation::adjacent()});
    g.add_edge({2, 1, Relation::facing()});
    g.modify_node_pose(1, {5, 5, 0}, {0, 0, 1});
    EXPECT_EQ(g.node(2).pos, (Vec3{1, 0, 0}));
}

TEST(PropagatePose, DeepChainMatchesComposition) {
    Rng rng(31);
    for (int t = 0; t < 500; ++t) {
        Graph g;
        std::vector<higs::testing::Pose2> poses;
        for (int i = 1; i <= 10; ++i) {
            g.add_node(box(i, "n", {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 5)}, rng.uniform(-kPi, kPi)));
            if (i > 1) g.add_edge({i - 1, i, rng.chance(0.5) ? Relation::on() : Relation::inside()});
        }
        const higs::testing::Pose2 root{{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 2)}, rng.uniform(-kPi, kPi)};
        g.modify_node_pose(1, root.pos, {0, 0, root.yaw});
        higs::testing::Pose2 expect = root;
        for (int i = 2; i <= 10; ++i) {
            const auto& rt = g.rel_transforms().at({i - 1, i});
            expect = higs::testing::compose(expect, rt.translation, rt.yawDelta);
            ASSERT_NEAR(g.node(i).pos.x, expect.pos.x, 1e-9);
            ASSERT_NEAR(g.node(i).pos.y, expect.pos.y, 1e-9);
            ASSERT_NEAR(g.node(i).pos.z, expect.pos.z, 1e-9);
            ASSERT_NEAR(wrap_angle(g.node(i).yaw() - expect.yaw), 0.0, 1e-9);
        }
    }
}

TEST(StabilityCorrectEdge, InsideOnlySeats) {
    Graph g;
    g.add_node(box(1, "desk", {0, 0, 0.5}));
    g.add_node(box(2, "cup", {0.2, 0.1, 1.4}, 0, {0.05, 0.05, 0.1}));
    g.add_edge({1, 2, Relation::on()});
    const auto c = stability_correct_edge(g, {1, 2, Relation::on()});
    EXPECT_EQ(c.delta, (Vec2{0, 0}));
    EXPECT_DOUBLE_EQ(g.node(2).pos.x, 0.2);
    EXPECT_NEAR(g.node(2).pos.z, 1.1, 1e-15);
}

TEST(StabilityCorrectEdge, ClampArithmetic) {
    Graph g;
    g.add_node(box(1, "desk", {0, 0, 0}, 0, {1, 1, 0.5}));
    g.add_node(box(2, "cup", {1.5, 0, 0.6}, 0, {0.1, 0.1, 0.1}));
    g.add_edge({1, 2, Relation::on()});
    const auto c = stability_correct_edge(g, {1, 2, Relation::on()});
    EXPECT_NEAR(c.delta.x, -0.5, 1e-15);
    EXPECT_NEAR(c.delta.y, 0.0, 1e-15);
    EXPECT_NEAR(g.node(2).pos.x, 1.0, 1e-15);
}

TEST(StabilityCorrectEdge, RotatedParentMatchesSampling) {
    Rng rng(32);
    for (int t = 0; t < 200; ++t) {
        Graph g;
        g.add_node(box(1, "p", {0.3, -0.2, 0}, kPi / 2, {2, 1, 0.5}));
        // Off the short side: the parent's local +/-X faces lie along world Y.
        const double along = rng.uniform(-1.5, 1.5), out = rng.uniform(2.01, 4) * (rng.chance(0.5) ? 1 : -1);
        const Vec2 w = geometry::local_to_world({out, along}, {0.3, -0.2}, kPi / 2);
        g.add_node(box(2, "c", {w.x, w.y, 0.6}, 0, {0.1, 0.1, 0.1}));
        g.add_edge({1, 2, Relation::on()});
        const auto c = stability_correct_edge(g, {1, 2, Relation::on()});
        // Sampling only sees feasible points, so it can never beat the clamp;
        // with this density it comes within a few millimetres of it.
        const double best = higs::testing::sampled_min_translation({out, along}, {2, 1});
        ASSERT_LE(norm(c.delta), best + 1e-9);
        ASSERT_GE(norm(c.delta), best - 2e-3);
        ASSERT_EQ(count_on_violations(g), 0u);
    }
}

TEST(StabilityCorrectEdge, Errors) {
    Graph g;
    g.add_node(box(1, "p", {0, 0, 0}));
    g.add_node(box(2, "c", {3, 0, 0}));
    g.add_edge({1, 2, Relation::inside()});
    EXPECT_THROW(stability_correct_edge(g, {1, 2, Relation::inside()}), Error);
    try {
        stability_correct_edge(g, {1, 2, Relation::adjacent()});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::RelationMismatch);
    }
}

TEST(OptimizeLayout, StableSceneIsAFixpoint) {
    Graph g = desk_with_lamp(-0.2);
    const std::string before = io::canonical_text(g);
    const auto r = optimize_layout(g);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.passes, 1);
    EXPECT_TRUE(r.corrections.empty());
    EXPECT_EQ(io::canonical_text(g), before);
}

TEST(OptimizeLayout, LampOffDesk) {
    Graph g = desk_with_lamp(0.4);
    const auto r = optimize_layout(g);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.passes, 2);
    ASSERT_EQ(r.stability_count(), 1u);
    EXPECT_NEAR(norm(r.corrections[0].deltaTranslation), 0.4, 1e-12);
    EXPECT_EQ(r.corrections[0].pass, 1);
    EXPECT_EQ(count_on_violations(g), 0u);
}

TEST(OptimizeLayout, CorrectionCarriesDescendants) {
    Graph g = desk_with_lamp(0.4);
    g.add_node(box(3, "moth", {1.0, 0.1, 1.2}, 0, {0.01, 0.01, 0.01}));
    g.add_edge({2, 3, Relation::inside()});
    const auto r = optimize_layout(g);
    EXPECT_NEAR(g.node(3).pos.x, 0.6, 1e-12);
    bool propagated = false;
    for (const auto& c : r.corrections) propagated |= c.nid == 3 && c.reason == CorrectionReason::Propagation;
    EXPECT_TRUE(propagated);
}

TEST(OptimizeLayout, RandomTreesConvergeAndAreStable) {
    Rng rng(33);
    for (int t = 0; t < 100; ++t) {
        Graph g = higs::testing::random_forest(rng, {.maxDepth = 5, .maxFanout = 4, .roots = 1});
        const auto r = optimize_layout(g);
        ASSERT_TRUE(r.converged);
        ASSERT_LE(r.passes, 8);
        ASSERT_EQ(count_on_violations(g), 0u);
        ASSERT_TRUE(validate(g).empty());
        // Second run is a no-op.
        const std::string once = io::canonical_text(g);
        const auto again = optimize_layout(g);
        ASSERT_TRUE(again.corrections.empty());
        ASSERT_EQ(io::canonical_text(g), once);
    }
}

TEST(OptimizeLayout, WeakEdgesAreInert) {
    Rng rng(34);
    for (int t = 0; t < 50; ++t) {
        Graph g = higs::testing::random_forest(rng, {.maxDepth = 4, .maxFanout = 3, .roots = 2});
        Graph h = g;
        std::vector<Nid> ids;
        for (const auto& [nid, n] : h.nodes()) ids.push_back(nid);
        for (int k = 0; k < 10; ++k) {
            const Nid a = ids[rng.index(ids.size())], b = ids[rng.index(ids.size())];
            const RelationEdge e{a, b, rng.chance(0.5) ? Relation::adjacent() : Relation::under()};
            if (a != b && std::find(h.edges().begin(), h.edges().end(), e) == h.edges().end()) h.add_edge(e);
        }
        optimize_layout(g);
        optimize_layout(h);
        ASSERT_EQ(g.nodes(), h.nodes());
    }
}

TEST(OptimizeLayout, InsetShrinksPlacementArea) {
    Graph g = desk_with_lamp(0.0);
    optimize_layout(g, 8, 0.5);
    EXPECT_NEAR(g.node(2).pos.x, 0.3, 1e-12);
    EXPECT_EQ(count_on_violations(g, 1e-6, 0.5), 0u);
}

TEST(OptimizeLayout, OverhangWarns) {
    Graph g;
    g.add_node(box(1, "stool", {0, 0, 0.2}, 0, {0.2, 0.2, 0.2}));
    g.add_node(box(2, "board", {0.1, 0, 0.5}, 0, {1, 0.1, 0.02}));
    g.add_edge({1, 2, Relation::on()});
    const auto r = optimize_layout(g);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_EQ(r.warnings[0].nid, 2);
    EXPECT_NEAR(g.node(2).pos.x, 0.1, 1e-15);
}

TEST(OptimizeLayout, RevisionBumpsOnlyOnChange) {
    Graph g = desk_with_lamp(0.4);
    const auto r0 = g.revision();
    optimize_layout(g);
    EXPECT_EQ(g.revision(), r0 + 1);
    optimize_layout(g);
    EXPECT_EQ(g.revision(), r0 + 1);
}
