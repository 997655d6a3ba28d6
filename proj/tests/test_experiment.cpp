#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "vstab/error.hpp"
#include "vstab/experiment.hpp"

using namespace vstab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("vstab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json minimal() { return json{{"schema_version", 1}}; }

std::string validation_path(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ValidationError& e) {
        return e.path();
    }
    return "<none>";
}

RunConfig small_config(const fs::path& out) {
    RunConfig cfg;
    cfg.gains = {0.0, 2.0};
    cfg.repeats = 2;
    cfg.trace.duration_s = 0.08;
    cfg.engine.latency_steps = 4;
    cfg.seed = 17;
    cfg.threads = 2;
    cfg.output_dir = out;
    return cfg;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VSTAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, MinimalGetsDefaults) {
    const RunConfig cfg = parse_config(minimal());
    EXPECT_EQ(cfg.repeats, 5);
    EXPECT_EQ(cfg.gains.size(), 13u);
    EXPECT_EQ(cfg.scene.background_mode, BackgroundMode::Full);
    EXPECT_EQ(cfg.engine.backend, MatcherBackend::Functional);
}

TEST(Config, SchemaVersion) {
    EXPECT_EQ(validation_path(json::object()), "schema_version");
    EXPECT_EQ(validation_path(json{{"schema_version", 2}}), "schema_version");
}

TEST(Config, UnknownFieldsRejected) {
    json doc = minimal();
    doc["bogus"] = 1;
    EXPECT_EQ(validation_path(doc), "bogus");
    doc = minimal();
    doc["scene"] = {{"gain", 1.0}};
    EXPECT_EQ(validation_path(doc), "scene.gain");
    doc = minimal();
    doc["engine"] = {{"efferent", {{"noise", 1.0}}}};
    EXPECT_EQ(validation_path(doc), "engine.efferent.noise");
}

TEST(Config, FieldPaths) {
    json doc = minimal();
    doc["scene"] = {{"display_rate", -1.0}};
    EXPECT_EQ(validation_path(doc), "scene.display_rate");
    doc = minimal();
    doc["engine"] = {{"efferent", {{"noise_sd", -1.0}}}};
    EXPECT_EQ(validation_path(doc), "engine.efferent.noise_sd");
    doc = minimal();
    doc["gains"] = json::array();
    EXPECT_EQ(validation_path(doc), "gains");
    doc = minimal();
    doc["repeats"] = 0;
    EXPECT_EQ(validation_path(doc), "repeats");
    doc = minimal();
    doc["trace"] = {{"preset", "lazy"}};
    EXPECT_EQ(validation_path(doc), "trace.preset");
    doc = minimal();
    doc["matcher_backend"] = "quantum";
    EXPECT_EQ(validation_path(doc), "matcher_backend");
    doc = minimal();
    doc["scene"] = {{"background_mode", "plaid"}};
    EXPECT_EQ(validation_path(doc), "scene.background_mode");
    doc = minimal();
    doc["scene"] = {{"width", "wide"}};
    EXPECT_EQ(validation_path(doc), "scene.width");
    doc = minimal();
    doc["trace"] = {{"rate_hz", 500.0}};
    EXPECT_EQ(validation_path(doc), "engine.step_rate");
}

TEST(Config, JsonRoundTrip) {
    json doc = minimal();
    doc["scene"] = {{"background_mode", "annulus"}, {"gain_g", 0.3}, {"stimulus_center_s0", {60.0, 70.0}}};
    doc["engine"] = {{"latency_steps", 7}, {"efferent", {{"enabled", true}, {"noise_sd", 0.5}}}};
    doc["trace"] = {{"preset", "weaker"}, {"duration_s", 0.5}};
    doc["gains"] = {0.5, 1.5};
    doc["seed"] = 99;
    doc["matcher_backend"] = "msc";
    const RunConfig a = parse_config(doc);
    const RunConfig b = parse_config(to_json(a));
    EXPECT_EQ(to_json(a), to_json(b));
    EXPECT_EQ(b.scene.background_mode, BackgroundMode::Annulus);
    EXPECT_EQ(b.scene.stimulus_center_s0, (Vec2{60.0, 70.0}));
    EXPECT_EQ(b.engine.latency_steps, 7);
    EXPECT_TRUE(b.engine.efferent.enabled);
    EXPECT_EQ(b.engine.backend, MatcherBackend::Msc);
    EXPECT_EQ(b.trace.preset, "weaker");
    EXPECT_EQ(b.seed, 99u);
}

TEST(Config, LoadErrors) {
    const fs::path dir = scratch("load");
    {
        std::ofstream(dir / "bad.json") << "{ not json";
    }
    EXPECT_THROW(load_config(dir / "bad.json"), ValidationError);
    EXPECT_THROW(load_config(dir / "missing.json"), IoError);
}

TEST(Seeds, DependOnRepeatNotGain) {
    EXPECT_EQ(cell_seeds(1, 0).trace_seed, cell_seeds(1, 0).trace_seed);
    EXPECT_NE(cell_seeds(1, 0).trace_seed, cell_seeds(1, 1).trace_seed);
    EXPECT_NE(cell_seeds(1, 0).trace_seed, cell_seeds(2, 0).trace_seed);
    EXPECT_NE(cell_seeds(1, 0).trace_seed, cell_seeds(1, 0).engine_seed);
}

TEST(Cells, OrderedAndThreadIndependent) {
    RunConfig cfg = small_config(scratch("cells"));
    const auto a = run_cells(cfg);
    cfg.threads = 1;
    const auto b = run_cells(cfg);
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].gain, cfg.gains[i / 2]);
        EXPECT_EQ(a[i].repeat, static_cast<int>(i % 2));
        EXPECT_EQ(a[i].metrics.perceived_motion, b[i].metrics.perceived_motion);
        EXPECT_EQ(a[i].metrics.world_motion, b[i].metrics.world_motion);
    }
}

TEST(Sweep, ByteIdenticalOutputs) {
    const fs::path d1 = scratch("sweep1"), d2 = scratch("sweep2");
    RunConfig cfg = small_config(d1);
    cfg.plots = true;
    cfg.snapshot_every = 40;
    const SweepReport r1 = run_sweep(cfg);
    cfg.output_dir = d2;
    cfg.threads = 1;
    const SweepReport r2 = run_sweep(cfg);
    ASSERT_EQ(r1.files, r2.files);
    for (const auto& f : r1.files) EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
    EXPECT_TRUE(fs::exists(d1 / "runs" / "g0_r1_decisions.csv"));
    EXPECT_TRUE(fs::exists(d1 / "sweep_ratio.svg"));
    EXPECT_FALSE(r1.summary.discontinuity);
    EXPECT_EQ(r1.summary.rows.size(), 2u);
}

TEST(Sweep, ManifestVerifies) {
    const fs::path d = scratch("manifest");
    RunConfig cfg = small_config(d);
    run_sweep(cfg);
    const json m = json::parse(slurp(d / "manifest.json"));
    EXPECT_EQ(m.at("master_seed"), 17);
    EXPECT_EQ(m.at("config").at("gains").size(), 2u);
    EXPECT_TRUE(m.at("outputs").contains("sweep.csv"));
    EXPECT_EQ(m.at("outputs").at("sweep.csv"), sha256_file(d / "sweep.csv"));
    EXPECT_TRUE(verify_manifest(d).empty());
    {
        std::ofstream(d / "sweep.csv", std::ios::app) << "tampered\n";
    }
    EXPECT_EQ(verify_manifest(d), std::vector<std::string>{"sweep.csv"});
}

TEST(Sha256, KnownDigest) {
    const fs::path d = scratch("sha");
    {
        std::ofstream(d / "abc.txt", std::ios::binary) << "abc";
    }
    EXPECT_EQ(sha256_file(d / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Simulate, WritesArtifacts) {
    const fs::path d = scratch("simulate");
    RunConfig cfg = small_config(d);
    cfg.snapshot_every = 20;
    const auto files = run_simulate(cfg, 0.5, 1);
    for (const char* f : {"decisions.csv", "percept.csv", "trace.csv", "summary.json", "manifest.json"})
        EXPECT_TRUE(fs::exists(d / f)) << f;
    EXPECT_TRUE(fs::exists(d / "canvas_00020.pgm"));
    std::ifstream in(d / "decisions.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "step,mode,m_p.dx,m_p.dy,m_s.dx,m_s.dy,match_energy");
}

TEST(Compare, BackendsAgree) {
    RunConfig cfg = small_config(scratch("compare"));
    cfg.gains = {-1.0, 2.0};
    cfg.repeats = 1;
    cfg.trace.duration_s = 0.03;
    const BackendComparison cmp = compare_backends(cfg);
    EXPECT_EQ(cmp.steps.size(), 2u * 31u);
    EXPECT_EQ(cmp.agreement_fraction(), 1.0);
    std::stringstream ss;
    write_comparison_csv(cmp, ss);
    std::string line, last;
    while (std::getline(ss, line)) last = line;
    EXPECT_EQ(last, "agreement_fraction,1");
}

TEST(Cli, ExitCodes) {
    const fs::path d = scratch("cli");
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("gen-trace --duration 0.05 --seed 3 -o " + (d / "t.csv").string()), 0);
    EXPECT_TRUE(fs::exists(d / "t.csv"));
    EXPECT_EQ(run_cli("simulate --duration 0.05 --gain 0.5 -o " + (d / "sim").string()), 0);
    EXPECT_EQ(run_cli("sweep --duration 0.05 --gains 0,2 --repeats 1 -o " + (d / "sw").string()), 0);
    EXPECT_TRUE(fs::exists(d / "sw" / "sweep.csv"));
    EXPECT_EQ(run_cli("sweep --duration 0.05 --gains 0 --trace-file " + (d / "t.csv").string() + " -o " +
                      (d / "sw2").string()),
              0);

    {
        std::ofstream(d / "good.json") << R"({"schema_version": 1, "repeats": 2})";
        std::ofstream(d / "bad.json") << R"({"schema_version": 1, "repeats": 0})";
        std::ofstream(d / "unknown.json") << R"({"schema_version": 1, "colour": "red"})";
    }
    EXPECT_EQ(run_cli("validate-config " + (d / "good.json").string()), 0);
    EXPECT_EQ(run_cli("validate-config " + (d / "bad.json").string()), 2);
    EXPECT_EQ(run_cli("validate-config " + (d / "unknown.json").string()), 2);
    EXPECT_EQ(run_cli("sweep --repeats 0"), 2);
    EXPECT_EQ(run_cli("sweep --backend quantum"), 2);
    EXPECT_EQ(run_cli("bogus-command"), 2);
    EXPECT_EQ(run_cli("simulate --duration 0.05 --trace-file " + (d / "nope.csv").string() + " -o " +
                      (d / "x").string()),
              1);
}

TEST(Cli, SeedFlagOverridesConfig) {
    const fs::path d = scratch("cli_seed");
    {
        std::ofstream(d / "cfg.json") << R"({"schema_version": 1, "seed": 5, "gains": [0.0], "repeats": 1,
                                            "trace": {"duration_s": 0.05}})";
    }
    ASSERT_EQ(run_cli("sweep -c " + (d / "cfg.json").string() + " --seed 9 -o " + (d / "a").string()), 0);
    const json m = json::parse(slurp(d / "a" / "manifest.json"));
    EXPECT_EQ(m.at("master_seed"), 9);
    EXPECT_EQ(m.at("config").at("seed"), 9);
}
