// vstab: run stabilization experiments from a JSON config.
//
//   vstab simulate --config run.json --gain 0.5 -o out/
//   vstab sweep --config run.json --seed 7
//   vstab compare-msc --gains 0,2 --repeats 1
//   vstab gen-trace --preset weaker --seed 3 -o trace.csv
//   vstab validate-config run.json
//
// Exit status: 0 success, 2 invalid configuration or arguments, 1 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vstab/error.hpp"
#include "vstab/experiment.hpp"

namespace {

using namespace vstab;

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

// Command-line values that override config fields when given.
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::vector<double> gains;
    std::optional<int> repeats;
    std::optional<std::string> backend;
    std::optional<std::string> background;
    std::optional<std::string> preset;
    std::optional<double> diffusion;
    std::optional<double> duration;
    std::optional<std::string> trace_file;
    std::optional<int> latency;
    bool efferent = false;
    std::optional<double> efferent_noise;
    std::optional<double> jitter;
    std::optional<std::string> output;
    std::optional<int> threads;
    std::optional<int> snapshot_every;
    bool plots = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config, "JSON run config (defaults when omitted)");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--gains", o.gains, "Comma-separated gain list")->delimiter(',');
    cmd->add_option("--repeats", o.repeats, "Repeats per gain");
    cmd->add_option("--backend", o.backend, "functional | msc");
    cmd->add_option("--background", o.background, "full | annulus | absent | fixation_cross");
    cmd->add_option("--preset", o.preset, "Drift preset: strong | weaker");
    cmd->add_option("--diffusion", o.diffusion, "Drift diffusion, arcmin^2/s (overrides preset)");
    cmd->add_option("--duration", o.duration, "Trace duration, s");
    cmd->add_option("--trace-file", o.trace_file, "Load the eye trace from CSV instead of generating");
    cmd->add_option("--latency", o.latency, "Secondary transfer latency, engine steps");
    cmd->add_flag("--efferent", o.efferent, "Enable the efferent eye-motion estimate");
    cmd->add_option("--efferent-noise", o.efferent_noise, "Efferent noise sd, arcmin");
    cmd->add_option("--jitter", o.jitter, "Matcher score jitter sd");
    cmd->add_option("-o,--output", o.output, "Output directory");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    cmd->add_option("--snapshot-every", o.snapshot_every, "Write a canvas PGM every N steps");
    cmd->add_flag("--plots", o.plots, "Write SVG ratio plots");
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
    auto wrap = [](const char* path, auto&& fn) {
        try {
            fn();
        } catch (const InvalidArgument& e) {
            throw ValidationError(path, e.what());
        }
    };
    if (o.seed) cfg.seed = *o.seed;
    if (!o.gains.empty()) cfg.gains = o.gains;
    if (o.repeats) cfg.repeats = *o.repeats;
    if (o.backend) wrap("matcher_backend", [&] { cfg.engine.backend = parse_backend(*o.backend); });
    if (o.background) wrap("scene.background_mode", [&] { cfg.scene.background_mode = parse_background_mode(*o.background); });
    if (o.preset) {
        cfg.trace.kind = TraceSource::Kind::Generated;
        cfg.trace.preset = *o.preset;
        cfg.trace.diffusion.reset();
    }
    if (o.diffusion) {
        cfg.trace.kind = TraceSource::Kind::Generated;
        cfg.trace.diffusion = *o.diffusion;
    }
    if (o.duration) cfg.trace.duration_s = *o.duration;
    if (o.trace_file) {
        cfg.trace.kind = TraceSource::Kind::File;
        cfg.trace.path = *o.trace_file;
    }
    if (o.latency) cfg.engine.latency_steps = *o.latency;
    if (o.efferent) cfg.engine.efferent.enabled = true;
    if (o.efferent_noise) cfg.engine.efferent.noise_sd = *o.efferent_noise;
    if (o.jitter) cfg.engine.matcher_jitter_sd = *o.jitter;
    if (o.output) cfg.output_dir = *o.output;
    if (o.threads) cfg.threads = *o.threads;
    if (o.snapshot_every) cfg.snapshot_every = *o.snapshot_every;
    if (o.plots) cfg.plots = true;
    cfg.validate();
    return cfg;
}

std::string opt_fmt(const std::optional<double>& v) { return v ? fmt::format("{:8.3f}", *v) : std::string("       -"); }

int cmd_sweep(const Overrides& o) {
    const RunConfig cfg = resolve(o);
    const SweepReport report = run_sweep(cfg);
    fmt::print("{:>6} {:>9} {:>9} {:>9} {:>8} {:>8} {:>6} {:>6}\n", "gain", "world", "retinal", "perceived",
               "r_world", "r_retin", "stab", "over");
    for (const GainSweepRow& r : report.summary.rows)
        fmt::print("{:6.2f} {:9.2f} {:9.2f} {:9.2f} {} {} {:6.3f} {:6.3f}\n", r.gain, r.world_motion, r.retinal_motion,
                   r.perceived_motion, opt_fmt(r.motion_ratio_world), opt_fmt(r.motion_ratio_retinal),
                   r.mode_fractions[0], r.mode_fractions[1]);
    if (report.summary.discontinuity)
        fmt::print("discontinuity {:.4f}\n", *report.summary.discontinuity);
    else
        fmt::print("discontinuity undefined (need two gains on each side of 1 and a filled window)\n");
    fmt::print("wrote {} files to {}\n", report.files.size() + 1, cfg.output_dir.string());
    return 0;
}

int cmd_simulate(const Overrides& o, std::optional<double> gain, int repeat) {
    RunConfig cfg = resolve(o);
    if (!o.snapshot_every && cfg.snapshot_every == 0) cfg.snapshot_every = 100;
    const double g = gain ? *gain : cfg.scene.gain_g;
    if (repeat < 0) throw ValidationError("repeat", "must be >= 0");
    const auto files = run_simulate(cfg, g, repeat);
    fmt::print("gain {:g}: wrote {} files to {}\n", g, files.size() + 1, cfg.output_dir.string());
    return 0;
}

int cmd_compare(const Overrides& o) {
    const RunConfig cfg = resolve(o);
    const BackendComparison cmp = compare_backends(cfg);
    write_comparison(cfg, cmp);
    std::size_t shown = 0;
    for (const auto& s : cmp.steps) {
        if (s.agree()) continue;
        if (shown++ < 20)
            fmt::print("disagree gain={:g} repeat={} step={} functional={} msc={}\n", s.gain, s.repeat, s.step,
                       to_string(s.functional.mode), to_string(s.msc.mode));
    }
    fmt::print("agreement {}/{} = {:.6f}\n", cmp.agreeing, cmp.steps.size(), cmp.agreement_fraction());
    return 0;
}

int cmd_gen_trace(const std::string& preset, std::optional<double> diffusion, double duration, double rate,
                  std::uint64_t seed, const std::string& out) {
    TraceSource src;
    src.preset = preset;
    src.diffusion = diffusion;
    src.duration_s = duration;
    src.rate_hz = rate;
    if (!diffusion) {
        try {
            drift_preset(preset);
        } catch (const InvalidArgument& e) {
            throw ValidationError("preset", e.what());
        }
    }
    if (diffusion && *diffusion < 0) throw ValidationError("diffusion", "must be >= 0");
    if (!(duration > 0)) throw ValidationError("duration", "must be > 0");
    if (!(rate > 0)) throw ValidationError("rate", "must be > 0");
    const EyeTrace trace = make_trace(src, seed);
    if (out.empty() || out == "-") {
        save_trace(trace, std::cout);
    } else {
        save_trace(trace, std::filesystem::path(out));
    }
    return 0;
}

int cmd_validate(const std::string& path) {
    const RunConfig cfg = load_config(path);
    fmt::print("{}: valid ({} gains x {} repeats, background {}, backend {})\n", path, cfg.gains.size(), cfg.repeats,
               to_string(cfg.scene.background_mode), to_string(cfg.engine.backend));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retinal stabilization model: canvas mapping experiments"};
    app.require_subcommand(1);

    Overrides sim_o, sweep_o, cmp_o;
    std::optional<double> sim_gain;
    int sim_repeat = 0;
    auto* sim = app.add_subcommand("simulate", "Run one condition and dump canvases, decisions and percept");
    add_common(sim, sim_o);
    sim->add_option("--gain", sim_gain, "Stimulus gain (default: scene.gain_g)");
    sim->add_option("--repeat", sim_repeat, "Repeat index selecting the trace seed");

    auto* sweep = app.add_subcommand("sweep", "Run the gain x repeat grid");
    add_common(sweep, sweep_o);

    auto* cmp = app.add_subcommand("compare-msc", "Compare the neuronal and functional matchers step by step");
    add_common(cmp, cmp_o);

    std::string gen_preset = "strong", gen_out;
    std::optional<double> gen_diffusion;
    double gen_duration = 1.0, gen_rate = 1000.0;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen-trace", "Write a drift eye trace as CSV");
    gen->add_option("--preset", gen_preset, "strong | weaker");
    gen->add_option("--diffusion", gen_diffusion, "Diffusion, arcmin^2/s (overrides preset)");
    gen->add_option("--duration", gen_duration, "Duration, s");
    gen->add_option("--rate", gen_rate, "Sample rate, Hz");
    gen->add_option("--seed", gen_seed, "Seed");
    gen->add_option("-o,--output", gen_out, "Output CSV (stdout when omitted)");

    std::string validate_path;
    auto* val = app.add_subcommand("validate-config", "Check a config file");
    val->add_option("config", validate_path, "Config path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*sim) return cmd_simulate(sim_o, sim_gain, sim_repeat);
        if (*sweep) return cmd_sweep(sweep_o);
        if (*cmp) return cmd_compare(cmp_o);
        if (*gen) return cmd_gen_trace(gen_preset, gen_diffusion, gen_duration, gen_rate, gen_seed, gen_out);
        if (*val) return cmd_validate(validate_path);
    } catch (const ValidationError& e) {
        fmt::print(stderr, "invalid configuration: {}\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitRuntime;
    }
    return kExitRuntime;
}
