#include <gtest/gtest.h>

#include <thread>

#include "higs/service.hpp"
#include "http_support.hpp"
#include "support.hpp"

using namespace higs;
using higs::io::Json;

namespace {

struct Fixture {
    service::SessionService svc{service::ServiceConfig{}};
    higs::testing::LocalServer server{[this](httplib::Server& s) { svc.install(s); }};
    httplib::Client client{"127.0.0.1", server.port()};

    Fixture() { client.set_read_timeout(std::chrono::seconds(30)); }

    httplib::Result post(const std::string& path, const Json& body, const std::string& ifMatch = "") {
        httplib::Headers h;
        if (!ifMatch.empty()) h.emplace("If-Match", ifMatch);
        return client.Post(path, h, body.dump(), "application/json");
    }
    httplib::Result patch(const std::string& path, const Json& body, const std::string& ifMatch = "") {
        httplib::Headers h;
        if (!ifMatch.empty()) h.emplace("If-Match", ifMatch);
        return client.Patch(path, h, body.dump(), "application/json");
    }
};

Json body_of(const httplib::Result& r) { return Json::parse(r->body); }

}  // namespace

TEST(Service, CreateSessionMatchesLibrary) {
    Fixture f;
    auto r = f.post("/sessions", {{"text", "a cozy bedroom"}, {"seed", 42}});
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 201);
    const Json j = body_of(r);
    EXPECT_EQ(j["sessionId"], "s1");
    EXPECT_EQ(j["revision"], 1);
    EXPECT_EQ(r->get_header_value("ETag"), "\"1\"");

    pipeline::SceneSession lib;
    lib = pipeline::run_step(lib, procedural::procedural_backend(0), pipeline::kFloorAnchor, "a cozy bedroom", 42);
    EXPECT_EQ(j["scene"].dump(), io::scene_json(lib.global, {"", 0, 1}).dump());

    auto scene = f.client.Get("/sessions/s1/scene");
    ASSERT_EQ(scene->status, 200);
    EXPECT_EQ(body_of(scene).dump(), j["scene"].dump());
    const auto loaded = io::load_scene(scene->body);
    EXPECT_TRUE(validate(loaded.graph).empty());
}

TEST(Service, ErrorsMapToStatusCodes) {
    Fixture f;
    ASSERT_EQ(f.post("/sessions", {{"text", "a desk with a lamp"}, {"seed", 1}})->status, 201);
    EXPECT_EQ(f.client.Get("/sessions/nope")->status, 404);
    EXPECT_EQ(f.post("/sessions/s1/steps", {{"text", "a mug"}, {"anchor", 999}})->status, 404);
    EXPECT_EQ(f.post("/sessions/s1/steps", {{"text", "a mug"}})->status, 422);
    EXPECT_EQ(f.post("/sessions/s1/steps", {{"text", ""}, {"anchor", 2}})->status, 422);
    EXPECT_EQ(f.post("/sessions", {{"seed", 1}})->status, 422);
    EXPECT_EQ(f.client.Post("/sessions", "{not json", "application/json")->status, 422);
    EXPECT_EQ(f.patch("/sessions/s1/nodes/77", {{"pos", {0, 0, 0}}})->status, 404);
    EXPECT_EQ(f.patch("/sessions/s1/nodes/2", {{"pos", {0, 0}}})->status, 422);
    EXPECT_EQ(f.patch("/sessions/s1/nodes/2", {{"rot", {0.3, 0, 0}}})->status, 422);
    EXPECT_EQ(f.client.Delete("/sessions/s1/nodes/2?cascade=maybe")->status, 422);
    // None of the failures above mutated the session.
    EXPECT_EQ(body_of(f.client.Get("/sessions/s1"))["revision"], 1);
}

TEST(Service, PatchMovesChildrenAndCountsRevisions) {
    Fixture f;
    ASSERT_EQ(f.post("/sessions", {{"text", "a desk with a lamp"}, {"seed", 5}})->status, 201);
    pipeline::SceneSession lib =
        pipeline::run_step({}, procedural::procedural_backend(0), pipeline::kFloorAnchor, "a desk with a lamp", 5);
    lib.sessionId = "s1";
    const Graph& g0 = lib.global;
    ASSERT_EQ(g0.strong_parent(3), std::optional<Nid>(2));
    const Vec3 target = g0.node(2).pos + Vec3{0.25, -0.5, 0};
    const Vec3 rot{0, 0, g0.node(2).yaw() + 0.3};

    auto r = f.patch("/sessions/s1/nodes/2", {{"pos", {target.x, target.y, target.z}}, {"rot", {rot.x, rot.y, rot.z}}});
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body_of(r)["revision"], 2);
    pipeline::apply_edit(lib, {pipeline::EditRecord::Kind::Pose, 2, target, rot, false});
    EXPECT_EQ(f.client.Get("/sessions/s1/scene")->body, io::scene_json(lib.global, {"", 0, 1}).dump());

    r = f.post("/sessions/s1/steps", {{"text", "two books"}, {"anchor", 2}, {"seed", 9}});
    ASSERT_EQ(r->status, 201);
    EXPECT_EQ(body_of(r)["revision"], 3);
    lib = pipeline::run_step(lib, procedural::procedural_backend(0), 2, "two books", 9);
    r = f.client.Delete("/sessions/s1/nodes/3?cascade=true");
    ASSERT_EQ(r->status, 200);
    pipeline::apply_edit(lib, {pipeline::EditRecord::Kind::Remove, 3, {}, {}, true});
    EXPECT_EQ(body_of(f.client.Get("/sessions/s1"))["revision"], 4);
    EXPECT_EQ(f.client.Get("/sessions/s1/scene")->body, io::scene_json(lib.global, {"", 0, 2}).dump());
    EXPECT_EQ(f.svc.export_session("s1"), io::save_session(lib, {"procedural", 0, ""}));
}

TEST(Service, IfMatchConflictDoesNotMutate) {
    Fixture f;
    ASSERT_EQ(f.post("/sessions", {{"text", "a desk"}, {"seed", 1}})->status, 201);
    auto stale = f.patch("/sessions/s1/nodes/2", {{"pos", {1, 1, 0.4}}}, "\"7\"");
    ASSERT_EQ(stale->status, 409);
    EXPECT_EQ(body_of(stale)["revision"], 1);
    EXPECT_EQ(body_of(f.client.Get("/sessions/s1"))["revision"], 1);
    EXPECT_EQ(f.patch("/sessions/s1/nodes/2", {{"pos", {1, 1, 0.4}}}, "W/\"1\"")->status, 200);
    EXPECT_EQ(f.post("/sessions/s1/steps", {{"text", "a lamp"}, {"anchor", 2}}, "\"1\"")->status, 409);
    EXPECT_EQ(f.post("/sessions/s1/steps", {{"text", "a lamp"}, {"anchor", 2}}, "abc")->status, 422);
    EXPECT_EQ(f.client.Delete("/sessions/s1/nodes/2", {{"If-Match", "\"2\""}})->status, 200);
}

TEST(Service, GraphAndReportViews) {
    Fixture f;
    ASSERT_EQ(f.post("/sessions", {{"text", "a desk with a lamp"}, {"seed", 2}})->status, 201);
    const Json g = body_of(f.client.Get("/sessions/s1/graph"));
    EXPECT_EQ(g["roots"], Json::array({1}));
    bool lampUnderDesk = false;
    for (const auto& n : g["nodes"])
        if (n["nid"] == 3) lampUnderDesk = n["parent"] == 2 && n["relation"] == "On" && n["depth"] == 2;
    EXPECT_TRUE(lampUnderDesk);
    const Json rep = body_of(f.client.Get("/sessions/s1/report"));
    EXPECT_TRUE(rep["report"]["converged"].get<bool>());
    EXPECT_EQ(f.client.Get("/sessions/s1/scene")->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST(Service, ConcurrentMutationsAreSerialized) {
    Fixture f;
    ASSERT_EQ(f.post("/sessions", {{"text", "a desk"}, {"seed", 3}})->status, 201);
    ASSERT_EQ(f.post("/sessions", {{"text", "a sofa"}, {"seed", 4}})->status, 201);
    std::vector<std::thread> workers;
    std::atomic<int> ok{0};
    for (int w = 0; w < 8; ++w) {
        workers.emplace_back([&, w] {
            httplib::Client c("127.0.0.1", f.server.port());
            const std::string sid = w % 2 ? "s1" : "s2";
            for (int i = 0; i < 5; ++i) {
                const Json body{{"pos", {0.1 * i, 0.05 * w, 0.5}}};
                auto r = c.Patch("/sessions/" + sid + "/nodes/2", body.dump(), "application/json");
                if (r && r->status == 200) ++ok;
            }
        });
    }
    for (auto& t : workers) t.join();
    EXPECT_EQ(ok.load(), 40);
    EXPECT_EQ(body_of(f.client.Get("/sessions/s1"))["revision"], 21);
    EXPECT_EQ(body_of(f.client.Get("/sessions/s2"))["revision"], 21);
    const auto snap = f.svc.snapshot("s1");
    ASSERT_TRUE(snap);
    EXPECT_EQ(snap->log.back().edits.size(), 20u);
    EXPECT_NO_THROW(pipeline::verify_replay(snap->log, snap->global, f.svc.adapters()));
}
