#include "vstab/experiment.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "vstab/error.hpp"

namespace vstab {

using nlohmann::json;

namespace {

// ---- config reading ----

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double read_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ValidationError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(path, "must be finite");
    return d;
}

long long read_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ValidationError(path, "expected an integer");
    return v.get<long long>();
}

void read(const json& v, const std::string& path, double& out) { out = read_number(v, path); }
void read(const json& v, const std::string& path, int& out) { out = static_cast<int>(read_integer(v, path)); }
void read(const json& v, const std::string& path, std::uint64_t& out) {
    if (v.is_number_unsigned()) {
        out = v.get<std::uint64_t>();
        return;
    }
    const long long i = read_integer(v, path);
    if (i < 0) throw ValidationError(path, "must be >= 0");
    out = static_cast<std::uint64_t>(i);
}
void read(const json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) throw ValidationError(path, "expected true or false");
    out = v.get<bool>();
}
void read(const json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) throw ValidationError(path, "expected a string");
    out = v.get<std::string>();
}
void read(const json& v, const std::string& path, std::filesystem::path& out) {
    std::string s;
    read(v, path, s);
    out = s;
}
void read(const json& v, const std::string& path, Vec2& out) {
    if (!v.is_array() || v.size() != 2) throw ValidationError(path, "expected [x, y]");
    out = {read_number(v[0], path + "[0]"), read_number(v[1], path + "[1]")};
}
void read(const json& v, const std::string& path, std::vector<double>& out) {
    if (!v.is_array()) throw ValidationError(path, "expected an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read_number(v[i], fmt::format("{}[{}]", path, i)));
}
void read(const json& v, const std::string& path, std::optional<double>& out) {
    if (v.is_null()) {
        out.reset();
        return;
    }
    out = read_number(v, path);
}

// Object reader that remembers which keys were consumed and rejects the rest.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    template <class T>
    void field(const char* key, T& out) {
        known_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) read(*it, join(path_, key), out);
    }

    template <class F>
    void object(const char* key, F&& fn) {
        known_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) {
            ObjectReader sub(*it, join(path_, key));
            fn(sub);
            sub.finish();
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const std::string& path() const { return path_; }

    void finish() const {
        for (const auto& item : j_.items())
            if (!known_.count(item.key())) throw ValidationError(join(path_, item.key()), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> known_;
};

template <class F>
void rethrow_as_validation(const std::string& path, F&& fn) {
    try {
        fn();
    } catch (const InvalidArgument& e) {
        throw ValidationError(path, e.what());
    }
}

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string cell_stem(double gain, int repeat) { return fmt::format("g{:g}_r{}", gain, repeat); }

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    return f;
}

void ensure_dir(const std::filesystem::path& p) {
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace

// ---- config ----

double TraceSource::effective_diffusion() const { return diffusion ? *diffusion : drift_preset(preset).diffusion; }

void RunConfig::validate() const {
    scene.validate();
    engine.validate();
    if (trace.kind == TraceSource::Kind::Generated) {
        if (!trace.diffusion) rethrow_as_validation("trace.preset", [&] { drift_preset(trace.preset); });
        if (trace.diffusion && *trace.diffusion < 0.0) throw ValidationError("trace.diffusion", "must be >= 0");
        if (!(trace.duration_s > 0.0)) throw ValidationError("trace.duration_s", "must be > 0");
        if (!(trace.rate_hz > 0.0)) throw ValidationError("trace.rate_hz", "must be > 0");
        if (trace.rate_hz != engine.step_rate)
            throw ValidationError("engine.step_rate", "must equal trace.rate_hz; the engine steps once per eye sample");
    } else if (trace.path.empty()) {
        throw ValidationError("trace.path", "required for a file trace");
    }
    if (!(trace.saccade_threshold > 0.0)) throw ValidationError("trace.saccade_threshold", "must be > 0");
    if (gains.empty()) throw ValidationError("gains", "must not be empty");
    if (repeats < 1) throw ValidationError("repeats", "must be >= 1");
    if (snapshot_every < 0) throw ValidationError("snapshot_every", "must be >= 0");
    if (threads < 0) throw ValidationError("threads", "must be >= 0");
    if (tracker_radius < 0) throw ValidationError("tracker.radius", "must be >= 0");
    if (!(tracker_threshold > 0.0 && tracker_threshold <= 1.0))
        throw ValidationError("tracker.threshold", "must be in (0, 1]");
    if (output_dir.empty()) throw ValidationError("output_dir", "must not be empty");
}

RunConfig parse_config(const json& doc) {
    RunConfig cfg;
    ObjectReader root(doc, "");
    if (!root.has("schema_version")) throw ValidationError("schema_version", "missing");
    int version = 0;
    root.field("schema_version", version);
    if (version != kConfigSchemaVersion)
        throw ValidationError("schema_version", fmt::format("unsupported version {} (expected {})", version,
                                                            kConfigSchemaVersion));

    root.object("scene", [&](ObjectReader& r) {
        SceneConfig& s = cfg.scene;
        std::string mode(to_string(s.background_mode));
        r.field("background_mode", mode);
        rethrow_as_validation("scene.background_mode", [&] { s.background_mode = parse_background_mode(mode); });
        r.field("annulus_inner_radius_deg", s.annulus_inner_radius_deg);
        r.field("background_texture_seed", s.background_texture_seed);
        r.field("background_contrast", s.background_contrast);
        r.field("stimulus_center_s0", s.stimulus_center_s0);
        r.field("stimulus_radius", s.stimulus_radius);
        r.field("gain_g", s.gain_g);
        r.field("display_rate", s.display_rate);
        r.field("width", s.width);
        r.field("height", s.height);
        r.field("pitch", s.pitch);
        r.field("cross_center", s.cross_center);
        r.field("cross_half_length", s.cross_half_length);
        r.field("cross_activation", s.cross_activation);
    });
    root.object("engine", [&](ObjectReader& r) {
        EngineConfig& e = cfg.engine;
        r.field("search_radius", e.search_radius);
        r.field("secondary_search_radius", e.secondary_search_radius);
        r.field("latency_steps", e.latency_steps);
        r.field("sector_half_angle", e.sector_half_angle);
        r.object("efferent", [&](ObjectReader& f) {
            f.field("enabled", e.efferent.enabled);
            f.field("noise_sd", e.efferent.noise_sd);
            f.field("quantization", e.efferent.quantization);
        });
        r.field("background_energy_threshold", e.background_energy_threshold);
        r.field("separation_threshold", e.separation_threshold);
        r.field("eccentricity_weighting", e.eccentricity_weighting);
        r.field("weight_half_radius_arcmin", e.weight_half_radius_arcmin);
        r.field("step_rate", e.step_rate);
        r.field("matcher_jitter_sd", e.matcher_jitter_sd);
        r.object("msc", [&](ObjectReader& m) {
            m.field("coincidence_threshold", e.msc.coincidence_threshold);
            m.field("inhibition_strength", e.msc.inhibition_strength);
            m.field("saturation_sigma", e.msc.saturation_sigma);
            m.field("max_rounds", e.msc.max_rounds);
        });
    });
    root.object("trace", [&](ObjectReader& r) {
        TraceSource& t = cfg.trace;
        std::string kind = t.kind == TraceSource::Kind::File ? "file" : "generated";
        r.field("kind", kind);
        if (kind == "generated") {
            t.kind = TraceSource::Kind::Generated;
        } else if (kind == "file") {
            t.kind = TraceSource::Kind::File;
        } else {
            throw ValidationError("trace.kind", "expected \"generated\" or \"file\"");
        }
        r.field("preset", t.preset);
        r.field("diffusion", t.diffusion);
        r.field("duration_s", t.duration_s);
        r.field("rate_hz", t.rate_hz);
        r.field("path", t.path);
        r.field("saccade_threshold", t.saccade_threshold);
    });
    root.field("gains", cfg.gains);
    root.field("repeats", cfg.repeats);
    root.field("seed", cfg.seed);
    std::string backend(to_string(cfg.engine.backend));
    root.field("matcher_backend", backend);
    rethrow_as_validation("matcher_backend", [&] { cfg.engine.backend = parse_backend(backend); });
    root.field("output_dir", cfg.output_dir);
    root.field("snapshot_every", cfg.snapshot_every);
    root.field("plots", cfg.plots);
    root.field("threads", cfg.threads);
    root.object("tracker", [&](ObjectReader& r) {
        r.field("radius", cfg.tracker_radius);
        r.field("threshold", cfg.tracker_threshold);
    });
    root.finish();
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
    const SceneConfig& s = cfg.scene;
    const EngineConfig& e = cfg.engine;
    const TraceSource& t = cfg.trace;
    json trace = {{"kind", t.kind == TraceSource::Kind::File ? "file" : "generated"},
                  {"preset", t.preset},
                  {"duration_s", t.duration_s},
                  {"rate_hz", t.rate_hz},
                  {"path", t.path.string()},
                  {"saccade_threshold", t.saccade_threshold}};
    trace["diffusion"] = t.diffusion ? json(*t.diffusion) : json(nullptr);
    return {
        {"schema_version", kConfigSchemaVersion},
        {"scene",
         {{"background_mode", std::string(to_string(s.background_mode))},
          {"annulus_inner_radius_deg", s.annulus_inner_radius_deg},
          {"background_texture_seed", s.background_texture_seed},
          {"background_contrast", s.background_contrast},
          {"stimulus_center_s0", vec_json(s.stimulus_center_s0)},
          {"stimulus_radius", s.stimulus_radius},
          {"gain_g", s.gain_g},
          {"display_rate", s.display_rate},
          {"width", s.width},
          {"height", s.height},
          {"pitch", s.pitch},
          {"cross_center", vec_json(s.cross_center)},
          {"cross_half_length", s.cross_half_length},
          {"cross_activation", s.cross_activation}}},
        {"engine",
         {{"search_radius", e.search_radius},
          {"secondary_search_radius", e.secondary_search_radius},
          {"latency_steps", e.latency_steps},
          {"sector_half_angle", e.sector_half_angle},
          {"efferent",
           {{"enabled", e.efferent.enabled},
            {"noise_sd", e.efferent.noise_sd},
            {"quantization", e.efferent.quantization}}},
          {"background_energy_threshold", e.background_energy_threshold},
          {"separation_threshold", e.separation_threshold},
          {"eccentricity_weighting", e.eccentricity_weighting},
          {"weight_half_radius_arcmin", e.weight_half_radius_arcmin},
          {"step_rate", e.step_rate},
          {"matcher_jitter_sd", e.matcher_jitter_sd},
          {"msc",
           {{"coincidence_threshold", e.msc.coincidence_threshold},
            {"inhibition_strength", e.msc.inhibition_strength},
            {"saturation_sigma", e.msc.saturation_sigma},
            {"max_rounds", e.msc.max_rounds}}}}},
        {"trace", trace},
        {"gains", cfg.gains},
        {"repeats", cfg.repeats},
        {"seed", cfg.seed},
        {"matcher_backend", std::string(to_string(e.backend))},
        {"output_dir", cfg.output_dir.string()},
        {"snapshot_every", cfg.snapshot_every},
        {"plots", cfg.plots},
        {"threads", cfg.threads},
        {"tracker", {{"radius", cfg.tracker_radius}, {"threshold", cfg.tracker_threshold}}},
    };
}

// ---- cells ----

CellSeeds cell_seeds(std::uint64_t master_seed, int repeat) {
    const std::uint64_t base = splitmix(master_seed ^ splitmix(static_cast<std::uint64_t>(repeat) + 1));
    return {splitmix(base ^ 0x7472616365ULL), splitmix(base ^ 0x656e67696eULL)};
}

EyeTrace make_trace(const TraceSource& src, std::uint64_t seed) {
    if (src.kind == TraceSource::Kind::File) return load_trace(src.path, src.saccade_threshold);
    EyeTrace t = generate_drift(seed, src.duration_s, src.effective_diffusion(), src.rate_hz);
    // Re-validate against the configured saccade threshold.
    return EyeTrace(t.sample_interval(), t.positions(), src.saccade_threshold);
}

CellResult run_cell(const RunConfig& cfg, double gain, int repeat, const CellOptions& opts) {
    CellResult cell;
    cell.gain = gain;
    cell.repeat = repeat;
    cell.seeds = cell_seeds(cfg.seed, repeat);

    const EyeTrace trace = make_trace(cfg.trace, cell.seeds.trace_seed);
    SceneConfig scene = cfg.scene;
    scene.gain_g = gain;
    EngineConfig engine = cfg.engine;
    engine.seed = cell.seeds.engine_seed;

    // References are deterministic in the onset frame, so the tracker can be built up front
    // and fed canvases as they are produced.
    const RetinalFrame frame0 = SceneRenderer(trace, scene).render_step(0);
    const ReferenceSet refs = capture_references(frame0, scene, engine.separation_threshold);
    StimulusTracker tracker(refs, {cfg.tracker_radius, cfg.tracker_threshold});
    PerceptTrace& percept = cell.percept;
    percept.positions.reserve(trace.size());
    percept.valid.reserve(trace.size());
    auto observe = [&](std::size_t step, const SpatialArray& canvas) {
        const auto [p, ok] = tracker.locate(canvas);
        percept.push(p, ok);
        if (opts.observer) opts.observer(step, canvas);
    };
    FixationRun run = run_fixation(trace, scene, engine, false, observe);
    cell.metrics = measure_condition(gain, run, percept, scene.pitch);
    if (opts.keep_decisions) cell.decisions = std::move(run.decisions);
    return cell;
}

std::vector<CellResult> run_cells(const RunConfig& cfg, bool keep_decisions) {
    cfg.validate();
    const std::size_t per_gain = static_cast<std::size_t>(cfg.repeats);
    std::vector<CellResult> cells(cfg.gains.size() * per_gain);
    parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
        CellOptions opts;
        opts.keep_decisions = keep_decisions;
        cells[i] = run_cell(cfg, cfg.gains[i / per_gain], static_cast<int>(i % per_gain), opts);
    });
    return cells;
}

SweepReport run_sweep(const RunConfig& cfg) {
    cfg.validate();
    const auto& dir = cfg.output_dir;
    ensure_dir(dir / "runs");

    const std::size_t per_gain = static_cast<std::size_t>(cfg.repeats);
    const std::size_t n = cfg.gains.size() * per_gain;
    SweepReport report;
    report.cells.resize(n);
    std::vector<std::vector<std::filesystem::path>> cell_files(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const double gain = cfg.gains[i / per_gain];
        const int repeat = static_cast<int>(i % per_gain);
        const std::string stem = cell_stem(gain, repeat);
        CellOptions opts;
        if (cfg.snapshot_every > 0) {
            opts.observer = [&, stem, i](std::size_t step, const SpatialArray& canvas) {
                if (step % static_cast<std::size_t>(cfg.snapshot_every) != 0) return;
                const auto rel = std::filesystem::path("runs") / fmt::format("{}_canvas_{:05d}.pgm", stem, step);
                write_pgm(canvas, dir / rel);
                cell_files[i].push_back(rel);
            };
        }
        report.cells[i] = run_cell(cfg, gain, repeat, opts);
        const auto rel = std::filesystem::path("runs") / (stem + "_decisions.csv");
        auto out = open_out(dir / rel);
        write_decision_log(report.cells[i].decisions, out);
        cell_files[i].push_back(rel);
    });

    std::vector<ConditionResult> metrics;
    for (const CellResult& c : report.cells) metrics.push_back(c.metrics);
    report.summary = summarize_sweep(metrics);

    {
        auto out = open_out(dir / "sweep.csv");
        write_sweep_csv(report.summary, out);
    }
    report.files.push_back("sweep.csv");
    for (auto& files : cell_files) report.files.insert(report.files.end(), files.begin(), files.end());
    if (cfg.plots) {
        auto out = open_out(dir / "sweep_ratio.svg");
        write_ratio_plot_svg(report.summary, out,
                             fmt::format("background={} preset={}", to_string(cfg.scene.background_mode),
                                         cfg.trace.kind == TraceSource::Kind::File ? cfg.trace.path.string()
                                                                                   : cfg.trace.preset));
        report.files.push_back("sweep_ratio.svg");
    }
    write_manifest(cfg, report.files);
    return report;
}

std::vector<std::filesystem::path> run_simulate(const RunConfig& cfg, double gain, int repeat) {
    cfg.validate();
    const auto& dir = cfg.output_dir;
    ensure_dir(dir);
    std::vector<std::filesystem::path> files;
    CellOptions opts;
    if (cfg.snapshot_every > 0) {
        opts.observer = [&](std::size_t step, const SpatialArray& canvas) {
            if (step % static_cast<std::size_t>(cfg.snapshot_every) != 0) return;
            const auto rel = std::filesystem::path(fmt::format("canvas_{:05d}.pgm", step));
            write_pgm(canvas, dir / rel);
            files.push_back(rel);
        };
    }
    const CellResult cell = run_cell(cfg, gain, repeat, opts);
    {
        auto out = open_out(dir / "decisions.csv");
        write_decision_log(cell.decisions, out);
    }
    files.emplace_back("decisions.csv");
    {
        auto out = open_out(dir / "percept.csv");
        write_percept_csv(cell.percept, 1.0 / cfg.engine.step_rate, out);
    }
    files.emplace_back("percept.csv");
    {
        const EyeTrace trace = make_trace(cfg.trace, cell.seeds.trace_seed);
        auto out = open_out(dir / "trace.csv");
        save_trace(trace, out);
    }
    files.emplace_back("trace.csv");
    {
        const ConditionResult& m = cell.metrics;
        auto out = open_out(dir / "summary.json");
        json j = {{"gain", gain},
                  {"repeat", repeat},
                  {"world_motion", m.world_motion},
                  {"retinal_motion", m.retinal_motion},
                  {"perceived_motion", m.perceived_motion},
                  {"perceived_rms", m.perceived_rms},
                  {"steps", m.steps}};
        j["ratio_world"] = m.ratio_world() ? json(*m.ratio_world()) : json(nullptr);
        j["ratio_retinal"] = m.ratio_retinal() ? json(*m.ratio_retinal()) : json(nullptr);
        json modes = json::object();
        for (int k = 0; k < kModeCount; ++k) modes[std::string(to_string(static_cast<Mode>(k)))] = m.mode_counts[k];
        j["mode_counts"] = modes;
        out << j.dump(2) << "\n";
    }
    files.emplace_back("summary.json");
    write_manifest(cfg, files);
    return files;
}

// ---- backend comparison ----

bool BackendStepComparison::agree() const {
    return canvas_equal && functional.mode == msc.mode && functional.m_p == msc.m_p && functional.m_s == msc.m_s;
}

double BackendComparison::agreement_fraction() const {
    return steps.empty() ? 1.0 : static_cast<double>(agreeing) / static_cast<double>(steps.size());
}

BackendComparison compare_backends(const RunConfig& cfg) {
    cfg.validate();
    const std::size_t per_gain = static_cast<std::size_t>(cfg.repeats);
    const std::size_t n = cfg.gains.size() * per_gain;
    std::vector<std::vector<BackendStepComparison>> per_cell(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const double gain = cfg.gains[i / per_gain];
        const int repeat = static_cast<int>(i % per_gain);
        const CellSeeds seeds = cell_seeds(cfg.seed, repeat);
        const EyeTrace trace = make_trace(cfg.trace, seeds.trace_seed);
        SceneConfig scene = cfg.scene;
        scene.gain_g = gain;
        EngineConfig fcfg = cfg.engine;
        fcfg.seed = seeds.engine_seed;
        fcfg.backend = MatcherBackend::Functional;
        EngineConfig mcfg = fcfg;
        mcfg.backend = MatcherBackend::Msc;

        const SceneRenderer renderer(trace, scene);
        StabilizationEngine fe(fcfg, scene);
        StabilizationEngine me(mcfg, scene);
        const RetinalFrame frame0 = renderer.render_step(0);
        EngineState fs = fe.initialize(frame0);
        EngineState ms = me.initialize(frame0);
        auto& rows = per_cell[i];
        rows.reserve(trace.size());
        for (std::size_t k = 0; k < trace.size(); ++k) {
            const RetinalFrame frame = k == 0 ? frame0 : renderer.render_step(k);
            std::optional<Vec2> eff;
            if (fcfg.efferent.enabled)
                eff = efferent_estimate(trace[k], fcfg.efferent.noise_sd, fcfg.efferent.quantization, fcfg.seed, k);
            BackendStepComparison row;
            row.gain = gain;
            row.repeat = repeat;
            row.step = k;
            row.functional = fe.step(fs, frame, eff);
            row.msc = me.step(ms, frame, eff);
            row.canvas_equal = fs.canvas == ms.canvas;
            rows.push_back(row);
        }
    });
    BackendComparison cmp;
    for (auto& rows : per_cell)
        for (auto& r : rows) {
            if (r.agree()) ++cmp.agreeing;
            cmp.steps.push_back(r);
        }
    return cmp;
}

std::vector<std::filesystem::path> write_comparison(const RunConfig& cfg, const BackendComparison& cmp) {
    ensure_dir(cfg.output_dir);
    {
        auto out = open_out(cfg.output_dir / "compare.csv");
        write_comparison_csv(cmp, out);
    }
    {
        auto out = open_out(cfg.output_dir / "compare_summary.json");
        std::size_t canvas_mismatch = 0;
        for (const auto& s : cmp.steps) canvas_mismatch += s.canvas_equal ? 0 : 1;
        out << json{{"steps", cmp.steps.size()},
                    {"agreeing", cmp.agreeing},
                    {"agreement_fraction", cmp.agreement_fraction()},
                    {"canvas_mismatches", canvas_mismatch}}
                   .dump(2)
            << "\n";
    }
    std::vector<std::filesystem::path> files{"compare.csv", "compare_summary.json"};
    write_manifest(cfg, files);
    return files;
}

}  // namespace vstab
