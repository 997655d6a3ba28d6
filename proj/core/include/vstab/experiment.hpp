#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vstab/engine.hpp"
#include "vstab/percept.hpp"
#include "vstab/scene.hpp"

namespace vstab {

inline constexpr int kConfigSchemaVersion = 1;

struct TraceSource {
    enum class Kind { Generated, File };
    Kind kind = Kind::Generated;
    // Generated: preset name ("strong"/"weaker") unless diffusion is set explicitly.
    std::string preset = "strong";
    std::optional<double> diffusion;
    double duration_s = 1.0;
    double rate_hz = 1000.0;
    // File: CSV trace; every repeat uses the same samples.
    std::filesystem::path path;
    double saccade_threshold = kDefaultSaccadeThreshold;

    double effective_diffusion() const;
};

struct RunConfig {
    SceneConfig scene;
    EngineConfig engine;
    TraceSource trace;
    std::vector<double> gains{-2.0, -1.5, -1.0, -0.5, 0.0, 0.25, 0.5, 0.75, 0.9, 1.1, 1.25, 1.5, 2.0};
    int repeats = 5;
    std::uint64_t seed = 0;  // master seed; per-cell seeds derive from it
    std::filesystem::path output_dir = "vstab_out";
    int snapshot_every = 0;  // canvas PGM period in steps; 0 = none
    bool plots = false;
    int threads = 0;  // 0 = hardware concurrency
    int tracker_radius = 48;
    double tracker_threshold = 0.9;

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

/// Parses and validates a config document. Unknown fields and a missing or unsupported
/// schema_version are rejected.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

struct CellSeeds {
    std::uint64_t trace_seed = 0;
    std::uint64_t engine_seed = 0;
};

/// Seeds depend on the master seed and repeat only, so every gain sees the same trace per repeat.
CellSeeds cell_seeds(std::uint64_t master_seed, int repeat);

EyeTrace make_trace(const TraceSource& src, std::uint64_t seed);

struct CellResult {
    double gain = 0.0;
    int repeat = 0;
    CellSeeds seeds;
    ConditionResult metrics;
    std::vector<MappingDecision> decisions;
    PerceptTrace percept;
};

struct CellOptions {
    bool keep_decisions = true;
    // Called with each canvas; used for snapshots.
    CanvasObserver observer;
};

/// One (gain, repeat) condition: trace, fixation run, tracked percept and metrics.
CellResult run_cell(const RunConfig& cfg, double gain, int repeat, const CellOptions& opts = {});

/// All cells of the grid, in (gain, repeat) order regardless of scheduling.
std::vector<CellResult> run_cells(const RunConfig& cfg, bool keep_decisions = false);

struct SweepReport {
    SweepSummary summary;
    std::vector<CellResult> cells;
    std::vector<std::filesystem::path> files;  // relative to the output directory
};

/// Runs the grid and writes sweep.csv, per-cell decision logs, optional snapshots/plots and manifest.json.
SweepReport run_sweep(const RunConfig& cfg);

/// One condition with canvas snapshots, decision log and percept track.
std::vector<std::filesystem::path> run_simulate(const RunConfig& cfg, double gain, int repeat = 0);

struct BackendStepComparison {
    double gain = 0.0;
    int repeat = 0;
    std::size_t step = 0;
    MappingDecision functional;
    MappingDecision msc;
    bool canvas_equal = true;
    bool agree() const;
};

struct BackendComparison {
    std::vector<BackendStepComparison> steps;
    std::size_t agreeing = 0;
    double agreement_fraction() const;
};

/// Runs every cell under both backends and compares decisions and canvases step by step.
BackendComparison compare_backends(const RunConfig& cfg);
void write_comparison_csv(const BackendComparison& cmp, std::ostream& out);
/// Writes compare.csv and manifest.json into the output directory.
std::vector<std::filesystem::path> write_comparison(const RunConfig& cfg, const BackendComparison& cmp);

std::string sha256_file(const std::filesystem::path& path);

/// Manifest listing the full config, seeds and SHA-256 of every output file.
void write_manifest(const RunConfig& cfg, const std::vector<std::filesystem::path>& files);
/// Re-hashes the files listed in dir/manifest.json; returns the mismatching or missing ones.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

/// Self-contained SVG with ratio-vs-gain panels (perceived/world and perceived/retinal).
void write_ratio_plot_svg(const SweepSummary& summary, std::ostream& out, const std::string& title = {});

void write_percept_csv(const PerceptTrace& trace, double dt, std::ostream& out);

}  // namespace vstab
