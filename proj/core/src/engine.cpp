#include "vstab/engine.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "vstab/error.hpp"
#include "vstab/msc.hpp"

namespace vstab {

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::CoherentStabilize: return "stabilize";
        case Mode::VeridicalOverride: return "override";
        case Mode::Identity: return "identity";
        case Mode::Efferent: return "efferent";
    }
    return "?";
}

std::string_view to_string(MatcherBackend backend) {
    return backend == MatcherBackend::Functional ? "functional" : "msc";
}

MatcherBackend parse_backend(std::string_view name) {
    if (name == "functional") return MatcherBackend::Functional;
    if (name == "msc") return MatcherBackend::Msc;
    throw InvalidArgument("unknown matcher backend '" + std::string(name) + "'");
}

void EngineConfig::validate() const {
    if (search_radius < 0) throw ValidationError("engine.search_radius", "must be >= 0");
    if (secondary_search_radius < 0) throw ValidationError("engine.secondary_search_radius", "must be >= 0");
    if (latency_steps < 0) throw ValidationError("engine.latency_steps", "must be >= 0");
    if (!(sector_half_angle >= 0.0 && sector_half_angle <= 90.0))
        throw ValidationError("engine.sector_half_angle", "must be in [0,90]");
    if (!(efferent.noise_sd >= 0.0)) throw ValidationError("engine.efferent.noise_sd", "must be >= 0");
    if (!(efferent.quantization >= 0.0)) throw ValidationError("engine.efferent.quantization", "must be >= 0");
    if (!(background_energy_threshold >= 0.0))
        throw ValidationError("engine.background_energy_threshold", "must be >= 0");
    if (!(separation_threshold > 0.0 && separation_threshold <= 1.0))
        throw ValidationError("engine.separation_threshold", "must be in (0,1]");
    if (!(weight_half_radius_arcmin > 0.0)) throw ValidationError("engine.weight_half_radius_arcmin", "must be > 0");
    if (!(step_rate > 0.0)) throw ValidationError("engine.step_rate", "must be > 0");
    if (!(matcher_jitter_sd >= 0.0)) throw ValidationError("engine.matcher_jitter_sd", "must be >= 0");
    if (!(msc.coincidence_threshold >= 0.0 && msc.coincidence_threshold <= 1.0))
        throw ValidationError("engine.msc.coincidence_threshold", "must be in [0,1]");
    if (!(msc.inhibition_strength > 0.0 && msc.inhibition_strength < 1.0))
        throw ValidationError("engine.msc.inhibition_strength", "must be in (0,1)");
    if (!(msc.saturation_sigma >= 0.0)) throw ValidationError("engine.msc.saturation_sigma", "must be >= 0");
    if (msc.max_rounds < 1) throw ValidationError("engine.msc.max_rounds", "must be >= 1");
}

MatchResult FunctionalMatcher::match(const SpatialArray& moving, const PreparedReference& reference,
                                     const MatchOptions& opts) const {
    return best_translation(moving, reference, opts);
}

SpatialArray FunctionalMatcher::gate(const SpatialArray& canvas, const SpatialArray& source, const SpatialArray& mask,
                                     Translation t) const {
    return transfer(canvas, shift(source, t), shift(mask, t));
}

std::shared_ptr<const Matcher> make_matcher(const EngineConfig& cfg, const SceneConfig& scene) {
    if (cfg.backend == MatcherBackend::Functional) return std::make_shared<FunctionalMatcher>();
    MscMatcher::Params p;
    p.coincidence_threshold = cfg.msc.coincidence_threshold;
    p.inhibition_strength = cfg.msc.inhibition_strength;
    p.max_rounds = cfg.msc.max_rounds;
    p.saturation_sigma = cfg.msc.saturation_sigma > 0.0
                             ? cfg.msc.saturation_sigma
                             : 0.5 * static_cast<double>(disk_footprint(scene.stimulus_radius / scene.pitch).size());
    return std::make_shared<MscMatcher>(p);
}

bool hard_sector(Translation m_p, Translation m_s, double half_angle_deg) {
    const double d = static_cast<double>(m_p.dx) * m_s.dx + static_cast<double>(m_p.dy) * m_s.dy;
    if (!(d > 0.0)) return false;
    const double cos_angle = d / (m_p.norm() * m_s.norm());
    // Boundary angles count as inside.
    return cos_angle >= std::cos(half_angle_deg * 3.14159265358979323846 / 180.0) - 1e-12;
}

Mode select_mode(Translation m_p, Translation m_s, double sector_half_angle, const SectorRule& rule) {
    if (m_p.is_zero()) throw InvalidArgument("select_mode: primary mapping must be non-zero");
    if (m_s.is_zero()) return Mode::CoherentStabilize;
    return rule(m_p, m_s, sector_half_angle) ? Mode::CoherentStabilize : Mode::VeridicalOverride;
}

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double quantize(double v, double q) { return q > 0.0 ? q * std::round(v / q) : v; }

constexpr std::size_t kMemoSize = 8;

}  // namespace

Vec2 efferent_estimate(Vec2 e, double noise_sd, double quantization, std::uint64_t seed, std::uint64_t step) {
    Vec2 out = e;
    if (noise_sd > 0.0) {
        std::mt19937_64 rng(mix(seed, step));
        std::normal_distribution<double> n(0.0, noise_sd);
        out.x += n(rng);
        out.y += n(rng);
    }
    return {quantize(out.x, quantization), quantize(out.y, quantization)};
}

StabilizationEngine::StabilizationEngine(EngineConfig cfg, SceneConfig scene, std::shared_ptr<const Matcher> matcher)
    : cfg_(std::move(cfg)), scene_(std::move(scene)), matcher_(std::move(matcher)) {
    cfg_.validate();
    scene_.validate();
    if (!matcher_) matcher_ = make_matcher(cfg_, scene_);
    ones_ = SpatialArray::filled(scene_.width, scene_.height, 1.0, scene_.pitch);
}

EngineState StabilizationEngine::initialize(const RetinalFrame& frame0) {
    EngineState s;
    s.refs = capture_references(frame0, scene_, cfg_.separation_threshold);
    s.canvas = SpatialArray(scene_.width, scene_.height, scene_.pitch);
    std::optional<EccentricityWeight> w;
    if (cfg_.eccentricity_weighting) w = EccentricityWeight{cfg_.weight_half_radius_arcmin, scene_.fovea()};
    bg_prepared_.reset();
    if (s.refs.background_ref) bg_prepared_.emplace(*s.refs.background_ref, w);
    stim_prepared_.emplace(s.refs.stimulus_ref, std::nullopt);
    primary_memo_.clear();
    secondary_memo_.clear();
    return s;
}

MatchResult StabilizationEngine::primary_match(const SpatialArray& frame, std::size_t step) {
    MatchOptions opts;
    opts.radius = cfg_.search_radius;
    opts.weight = bg_prepared_->weight();
    opts.jitter_sd = cfg_.matcher_jitter_sd;
    opts.jitter_seed = mix(mix(cfg_.seed, 0x70), step);
    if (opts.jitter_sd > 0.0) return matcher_->match(frame, *bg_prepared_, opts);
    for (const auto& m : primary_memo_)
        if (m.input == frame) return m.result;
    MatchResult r = matcher_->match(frame, *bg_prepared_, opts);
    primary_memo_.push_front({frame, r});
    if (primary_memo_.size() > kMemoSize) primary_memo_.pop_back();
    return r;
}

MatchResult StabilizationEngine::secondary_match(const SpatialArray& patch, std::size_t step) {
    MatchOptions opts;
    opts.radius = cfg_.secondary_search_radius;
    opts.jitter_sd = cfg_.matcher_jitter_sd;
    opts.jitter_seed = mix(mix(cfg_.seed, 0x73), step);
    if (opts.jitter_sd > 0.0) return matcher_->match(patch, *stim_prepared_, opts);
    for (const auto& m : secondary_memo_)
        if (m.input == patch) return m.result;
    MatchResult r = matcher_->match(patch, *stim_prepared_, opts);
    secondary_memo_.push_front({patch, r});
    if (secondary_memo_.size() > kMemoSize) secondary_memo_.pop_back();
    return r;
}

MappingDecision StabilizationEngine::step(EngineState& state, const RetinalFrame& frame, std::optional<Vec2> efferent) {
    if (!stim_prepared_) throw InvalidArgument("engine step before initialize");
    const std::size_t k = state.step_index++;
    const SpatialArray& retina = frame.array;
    MappingDecision d;

    std::optional<MatchResult> primary;
    if (bg_prepared_ && !bg_prepared_->all_zero()) {
        try {
            primary = primary_match(retina, k);
        } catch (const NoMatchError&) {
        }
    }
    if (primary) d.match_energy = primary->energy;

    // No usable background: identity, or the efferent estimate when available.
    if (!primary || primary->energy < cfg_.background_energy_threshold) {
        state.pending.clear();
        d.mode = Mode::Identity;
        if (cfg_.efferent.enabled && efferent) {
            d.mode = Mode::Efferent;
            d.m_p = {static_cast<int>(std::lround(efferent->x / scene_.pitch)),
                     static_cast<int>(std::lround(efferent->y / scene_.pitch))};
        }
        state.canvas = matcher_->gate(state.canvas, retina, ones_, d.m_p);
        return d;
    }

    d.m_p = primary->translation;
    auto discard_due = [&] {
        while (!state.pending.empty() && state.pending.front().due_step <= k) state.pending.pop_front();
    };

    const auto sep = separate_stimulus(retina, state.refs, d.m_p, cfg_.separation_threshold);
    std::optional<Translation> m_s;
    if (sep) {
        try {
            m_s = secondary_match(sep->patch, k).translation;
        } catch (const NoMatchError&) {
        }
    }
    if (!m_s) {
        d.stimulus_lost = true;
        d.mode = Mode::VeridicalOverride;
        state.canvas = matcher_->gate(state.canvas, retina, ones_, d.m_p);
        discard_due();
        return d;
    }

    if (*m_s == d.m_p) {
        // Stimulus has not moved relative to the background: one mapping registers both.
        d.mode = Mode::CoherentStabilize;
        d.m_s = m_s;
        state.canvas = matcher_->gate(state.canvas, retina, ones_, d.m_p);
        discard_due();
        return d;
    }

    // A zero primary has no direction to disagree with.
    d.mode = d.m_p.is_zero() ? Mode::CoherentStabilize
                             : select_mode(d.m_p, *m_s, cfg_.sector_half_angle, sector_rule_);
    if (d.mode == Mode::VeridicalOverride) {
        state.canvas = matcher_->gate(state.canvas, retina, ones_, d.m_p);
        discard_due();
        return d;
    }

    d.m_s = m_s;
    state.canvas = matcher_->gate(state.canvas, retina, complement_mask(sep->mask), d.m_p);
    state.pending.push_back({k + static_cast<std::size_t>(cfg_.latency_steps), *m_s});
    while (!state.pending.empty() && state.pending.front().due_step <= k) {
        state.canvas = matcher_->gate(state.canvas, sep->patch, sep->mask, state.pending.front().m_s);
        state.pending.pop_front();
    }
    return d;
}

FixationRun run_fixation(const EyeTrace& trace, const SceneConfig& scene, const EngineConfig& cfg, bool keep_canvases,
                         const CanvasObserver& observer, std::shared_ptr<const Matcher> matcher) {
    SceneRenderer renderer(trace, scene);
    StabilizationEngine engine(cfg, scene, std::move(matcher));
    FixationRun run;
    const RetinalFrame frame0 = renderer.render_step(0);
    EngineState state = engine.initialize(frame0);
    run.refs = state.refs;
    run.decisions.reserve(trace.size());
    run.samples.reserve(trace.size());
    if (keep_canvases) run.canvases.reserve(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const RetinalFrame frame = i == 0 ? frame0 : renderer.render_step(i);
        std::optional<Vec2> eff;
        if (cfg.efferent.enabled)
            eff = efferent_estimate(trace[i], cfg.efferent.noise_sd, cfg.efferent.quantization, cfg.seed, i);
        run.decisions.push_back(engine.step(state, frame, eff));
        run.samples.push_back({i, frame.time, frame.eye_offset, frame.stimulus_world_element,
                               frame.stimulus_retinal_element});
        if (observer) observer(i, state.canvas);
        if (keep_canvases) run.canvases.push_back(state.canvas);
    }
    return run;
}

void write_decision_log(const std::vector<MappingDecision>& decisions, std::ostream& out) {
    out << "step,mode,m_p.dx,m_p.dy,m_s.dx,m_s.dy,match_energy\n";
    out.precision(17);
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const auto& d = decisions[i];
        out << i << ',' << to_string(d.mode) << ',' << d.m_p.dx << ',' << d.m_p.dy << ',';
        if (d.m_s)
            out << d.m_s->dx << ',' << d.m_s->dy;
        else
            out << ',';
        out << ',' << d.match_energy << '\n';
    }
}

}  // namespace vstab
