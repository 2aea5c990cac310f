// higs: command-line front end for the scene engine.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "higs/external.hpp"
#include "higs/higs.hpp"
#include "higs/service.hpp"

namespace {

using higs::io::Json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << data;
}

struct StepSpec {
    std::string anchor;
    std::string text;
};

std::vector<StepSpec> parse_steps(const std::string& spec) {
    std::vector<StepSpec> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw std::runtime_error("step '" + item + "' is not anchor:text");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        out.push_back({trim(item.substr(0, colon)), trim(item.substr(colon + 1))});
    }
    return out;
}

/// An anchor is a nid or a category name (lowest nid with that category).
higs::Nid resolve_anchor(const higs::Graph& g, const std::string& anchor) {
    if (!anchor.empty() && anchor.find_first_not_of("-0123456789") == std::string::npos) return std::stoll(anchor);
    for (const auto& [nid, n] : g.nodes())
        if (n.category == anchor) return nid;
    throw higs::Error(higs::Errc::UnknownAnchor, "no object of category '" + anchor + "'");
}

Json violations_json(const std::vector<higs::Violation>& vs) {
    Json arr = Json::array();
    for (const auto& v : vs) {
        Json j;
        j["kind"] = std::string(higs::to_string(v.kind));
        j["nids"] = v.nids;
        j["message"] = v.message;
        arr.push_back(std::move(j));
    }
    return arr;
}

higs::pipeline::BackendAdapters adapters_for(const higs::io::BackendInfo& info) {
    if (info.kind == "external") {
        auto spec = higs::external::EndpointSpec::from_env();
        if (!info.endpoint.empty()) spec.baseUrl = info.endpoint;
        return higs::external::external_adapter_config(spec);
    }
    return higs::procedural::procedural_backend(info.seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Progressive hierarchical scene graph engine"};
    app.require_subcommand(1);
    bool asJson = false;
    app.add_flag("--json", asJson, "Machine-readable JSON on stdout");

    // generate
    auto* gen = app.add_subcommand("generate", "Run a multi-step procedural generation session");
    std::string genText, genSteps, genOut, genSession, genEndpoint;
    std::uint64_t genSeed = 0, genBackendSeed = 0;
    gen->add_option("--text", genText, "Step-0 scene description")->required();
    gen->add_option("--steps", genSteps, "Further steps as \"anchor:text;anchor:text\"");
    gen->add_option("--seed", genSeed, "Seed of step 0; step i uses seed+i");
    gen->add_option("--backend-seed", genBackendSeed, "Seed of the procedural backend");
    gen->add_option("--endpoint", genEndpoint, "Use remote adapters at this base URL");
    gen->add_option("--out", genOut, "Scene file to write")->required();
    gen->add_option("--session", genSession, "Also write the session file here");

    // validate
    auto* val = app.add_subcommand("validate", "Check every graph invariant of a scene file");
    std::string valPath;
    val->add_option("scene", valPath)->required();

    // optimize
    auto* opt = app.add_subcommand("optimize", "Run layout optimization on a scene file");
    std::string optIn, optOut, optReport;
    int optPasses = 8;
    opt->add_option("scene", optIn)->required();
    opt->add_option("--out", optOut)->required();
    opt->add_option("--report", optReport);
    opt->add_option("--max-passes", optPasses);

    // replay
    auto* rep = app.add_subcommand("replay", "Re-run a session log and compare with its stored scene");
    std::string repPath;
    rep->add_option("session", repPath)->required();

    // stats
    auto* st = app.add_subcommand("stats", "Summarize a scene file");
    std::string stPath;
    st->add_option("scene", stPath)->required();

    // serve
    auto* srv = app.add_subcommand("serve", "Run the session HTTP service");
    std::string srvHost = "127.0.0.1", srvEndpoint;
    int srvPort = 8080;
    std::uint64_t srvSeed = 0;
    srv->add_option("--host", srvHost);
    srv->add_option("--port", srvPort);
    srv->add_option("--seed", srvSeed, "Procedural backend seed");
    srv->add_option("--endpoint", srvEndpoint, "Use remote adapters at this base URL");

    // serve-adapters
    auto* sad = app.add_subcommand("serve-adapters", "Serve the procedural backend over the adapter wire contract");
    std::string sadHost = "127.0.0.1";
    int sadPort = 8090;
    std::uint64_t sadSeed = 0;
    sad->add_option("--host", sadHost);
    sad->add_option("--port", sadPort);
    sad->add_option("--seed", sadSeed);

    CLI11_PARSE(app, argc, argv);

    auto emit = [&](const Json& j, const std::string& human) {
        if (asJson)
            std::cout << j.dump(2) << "\n";
        else
            std::cout << human;
    };

    try {
        if (*gen) {
            higs::io::BackendInfo info;
            info.seed = genBackendSeed;
            if (!genEndpoint.empty()) {
                info.kind = "external";
                info.endpoint = genEndpoint;
            }
            const auto adapters = adapters_for(info);
            higs::pipeline::SceneSession s;
            s.sessionId = "cli";
            s = higs::pipeline::run_step(s, adapters, higs::pipeline::kFloorAnchor, genText, genSeed);
            std::uint64_t seed = genSeed;
            for (const auto& step : parse_steps(genSteps)) {
                const higs::Nid anchor = resolve_anchor(s.global, step.anchor);
                s = higs::pipeline::run_step(s, adapters, anchor, step.text, ++seed);
            }
            write_file(genOut, higs::io::save_scene(s.global, {"", info.seed, static_cast<std::int64_t>(s.log.size())}));
            if (!genSession.empty()) write_file(genSession, higs::io::save_session(s, info));
            Json j;
            j["steps"] = s.log.size();
            j["nodes"] = s.global.size();
            j["out"] = genOut;
            emit(j, "generated " + std::to_string(s.global.size()) + " nodes in " + std::to_string(s.log.size()) +
                        " steps -> " + genOut + "\n");
            return 0;
        }
        if (*val) {
            const auto scene = higs::io::load_scene(read_file(valPath), false);
            const auto vs = higs::validate(scene.graph);
            Json j;
            j["valid"] = vs.empty();
            j["violations"] = violations_json(vs);
            std::string human = vs.empty() ? "valid\n" : "";
            for (const auto& v : vs) human += std::string(higs::to_string(v.kind)) + ": " + v.message + "\n";
            emit(j, human);
            return vs.empty() ? 0 : 1;
        }
        if (*opt) {
            auto scene = higs::io::load_scene(read_file(optIn));
            const auto report = higs::layout::optimize_layout(scene.graph, optPasses);
            write_file(optOut, higs::io::save_scene(scene.graph, scene.meta));
            if (!optReport.empty()) write_file(optReport, higs::io::dump(higs::io::report_json(report)));
            Json j = higs::io::report_json(report);
            emit(j, "converged=" + std::string(report.converged ? "true" : "false") +
                        " passes=" + std::to_string(report.passes) +
                        " stability corrections=" + std::to_string(report.stability_count()) + "\n");
            return report.converged ? 0 : 1;
        }
        if (*rep) {
            const auto loaded = higs::io::load_session(read_file(repPath));
            const auto adapters = adapters_for(loaded.backend);
            Json j;
            try {
                higs::pipeline::verify_replay(loaded.session.log, loaded.session.global, adapters);
                j["divergence"] = false;
                emit(j, "replay ok: " + std::to_string(loaded.session.log.size()) + " steps reproduce the stored scene\n");
                return 0;
            } catch (const higs::Error& e) {
                if (e.code() != higs::Errc::ReplayDivergence) throw;
                j["divergence"] = true;
                j["message"] = e.what();
                emit(j, std::string("replay diverged: ") + e.what() + "\n");
                return 1;
            }
        }
        if (*st) {
            const auto scene = higs::io::load_scene(read_file(stPath), false);
            const auto& g = scene.graph;
            std::map<std::string, int> cats;
            for (const auto& [nid, n] : g.nodes()) ++cats[n.category];
            const std::size_t onViol = higs::layout::count_on_violations(g);
            Json j;
            j["nodeCount"] = g.size();
            j["edgeCount"] = g.edges().size();
            j["strongDepth"] = g.strong_depth();
            j["categories"] = cats;
            j["onViolations"] = onViol;
            std::string human = "nodes: " + std::to_string(g.size()) + "\nedges: " + std::to_string(g.edges().size()) +
                                "\nstrong depth: " + std::to_string(g.strong_depth()) +
                                "\nOn violations: " + std::to_string(onViol) + "\n";
            for (const auto& [c, n] : cats) human += "  " + c + ": " + std::to_string(n) + "\n";
            emit(j, human);
            return 0;
        }
        if (*srv) {
            higs::service::ServiceConfig cfg;
            cfg.backend.seed = srvSeed;
            if (!srvEndpoint.empty()) {
                auto spec = higs::external::EndpointSpec::from_env();
                spec.baseUrl = srvEndpoint;
                cfg.endpoint = spec;
                cfg.backend.kind = "external";
                cfg.backend.endpoint = srvEndpoint;
            }
            higs::service::SessionService service(cfg);
            httplib::Server server;
            service.install(server);
            std::cerr << "listening on " << srvHost << ":" << srvPort << "\n";
            return server.listen(srvHost, srvPort) ? 0 : 1;
        }
        if (*sad) {
            httplib::Server server;
            higs::external::install_adapter_routes(server, higs::procedural::procedural_backend(sadSeed));
            std::cerr << "adapters listening on " << sadHost << ":" << sadPort << "\n";
            return server.listen(sadHost, sadPort) ? 0 : 1;
        }
    } catch (const std::exception& e) {
        if (asJson) {
            Json j;
            j["error"] = e.what();
            std::cout << j.dump(2) << "\n";
        }
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
