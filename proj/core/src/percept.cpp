#include "vstab/percept.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "vstab/error.hpp"

namespace vstab {

namespace {

int to_element(double arcmin, double pitch) { return static_cast<int>(std::lround(arcmin / pitch)); }

Vec2 element_to_arcmin(ElementPos p, double pitch) { return {p.x * pitch, p.y * pitch}; }

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation; zero for fewer than two values.
double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::size_t PerceptTrace::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

StimulusTracker::StimulusTracker(const ReferenceSet& refs, Options opts)
    : origin_(refs.stimulus_ref_pos), pitch_(refs.stimulus_ref.pitch()), opts_(opts) {
    if (opts_.search_radius < 0) throw InvalidArgument("tracker search radius must be >= 0");
    if (!(opts_.threshold > 0.0 && opts_.threshold <= 1.0))
        throw InvalidArgument("tracker threshold must be in (0, 1]");
    const SpatialArray& ref = refs.stimulus_ref;
    for (int y = 0; y < ref.height(); ++y)
        for (int x = 0; x < ref.width(); ++x) {
            const double v = ref(x, y);
            if (v != 0.0) {
                taps_.push_back({ElementPos{x, y} - origin_, v});
                self_match_ += v * v;
            }
        }
    if (taps_.empty()) throw InvalidArgument("stimulus reference is empty");
    candidates_ = search_disk(opts_.search_radius);
}

std::pair<Vec2, bool> StimulusTracker::locate(const SpatialArray& canvas) {
    if (last_canvas_ && *last_canvas_ == canvas) return last_result_;

    double best = -1.0;
    long sx = 0, sy = 0, n = 0;
    for (const Translation& c : candidates_) {
        double s = 0.0;
        for (const Tap& tap : taps_)
            s += tap.value * canvas.at_or_zero(origin_.x + c.dx + tap.offset.dx, origin_.y + c.dy + tap.offset.dy);
        if (s > best) {
            best = s;
            sx = c.dx;
            sy = c.dy;
            n = 1;
        } else if (s == best) {
            sx += c.dx;
            sy += c.dy;
            ++n;
        }
    }
    const bool ok = best >= opts_.threshold * self_match_;
    const Vec2 pos{(origin_.x + static_cast<double>(sx) / n) * pitch_, (origin_.y + static_cast<double>(sy) / n) * pitch_};
    last_canvas_ = canvas;
    last_result_ = {pos, ok};
    return last_result_;
}

PerceptTrace track_stimulus(const std::vector<SpatialArray>& canvases, const ReferenceSet& refs,
                            StimulusTracker::Options opts) {
    StimulusTracker tracker(refs, opts);
    PerceptTrace out;
    out.positions.reserve(canvases.size());
    out.valid.reserve(canvases.size());
    for (const SpatialArray& c : canvases) {
        const auto [p, ok] = tracker.locate(c);
        out.push(p, ok);
    }
    return out;
}

double path_length(const std::vector<Vec2>& positions) {
    double s = 0.0;
    for (std::size_t i = 1; i < positions.size(); ++i) s += (positions[i] - positions[i - 1]).norm();
    return s;
}

double motion_magnitude(const PerceptTrace& trace) {
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < trace.size(); ++i)
        if (trace.valid[i]) pts.push_back(trace.positions[i]);
    if (pts.size() < 2) throw InvalidArgument("motion undefined: fewer than two valid percept samples");
    return path_length(pts);
}

double rms_deviation(const PerceptTrace& trace) {
    Vec2 m;
    std::size_t n = 0;
    for (std::size_t i = 0; i < trace.size(); ++i)
        if (trace.valid[i]) {
            m = m + trace.positions[i];
            ++n;
        }
    if (n == 0) throw InvalidArgument("rms undefined: no valid percept samples");
    m = (1.0 / static_cast<double>(n)) * m;
    double s = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i)
        if (trace.valid[i]) {
            const Vec2 d = trace.positions[i] - m;
            s += d.x * d.x + d.y * d.y;
        }
    return std::sqrt(s / static_cast<double>(n));
}

PerceptTrace closed_form_percept(const EyeTrace& trace, const ClosedFormInputs& in) {
    if (in.latency_steps < 0) throw InvalidArgument("latency_steps must be >= 0");
    const double g = in.gain;
    const auto L = static_cast<std::size_t>(in.latency_steps);
    PerceptTrace out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Vec2 e = trace[i];
        Vec2 p;
        switch (in.mode) {
            case Mode::CoherentStabilize: {
                const Vec2 past = i >= L ? trace[i - L] : trace[0];
                p = in.s0 + (g - 1.0) * (e - past);
                break;
            }
            case Mode::VeridicalOverride: p = in.s0 + g * e; break;
            case Mode::Identity: p = in.s0 + (g - 1.0) * e; break;
            case Mode::Efferent: {
                Vec2 est = e;
                if (in.efferent)
                    est = efferent_estimate(e, in.efferent->noise_sd, in.efferent->quantization, in.efferent_seed, i);
                p = in.s0 + (g - 1.0) * e + est;
                break;
            }
        }
        out.push(p, true);
    }
    return out;
}

PerceptTrace closed_form_percept_rasterized(const EyeTrace& trace, const SceneConfig& scene, Mode mode,
                                            int latency_steps, const std::optional<EfferentConfig>& efferent,
                                            std::uint64_t efferent_seed) {
    if (latency_steps < 0) throw InvalidArgument("latency_steps must be >= 0");
    const SceneRenderer renderer(trace, scene);
    const double pitch = scene.pitch;
    const std::size_t n = trace.size();
    std::vector<ElementPos> world(n), retinal(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * trace.sample_interval();
        const Vec2 e = trace[i];
        const Translation E{to_element(e.x, pitch), to_element(e.y, pitch)};
        world[i] = renderer.stimulus_world_element(renderer.held_eye(t));
        retinal[i] = world[i] - E;
    }
    const auto L = static_cast<std::size_t>(latency_steps);
    PerceptTrace out;
    for (std::size_t i = 0; i < n; ++i) {
        ElementPos p;
        bool ok = true;
        switch (mode) {
            case Mode::CoherentStabilize:
                // The canvas shows the current patch under the mapping measured L steps ago.
                if (i >= L) {
                    p = world[0] + (retinal[i] - retinal[i - L]);
                } else {
                    ok = false;
                }
                break;
            case Mode::VeridicalOverride: p = world[i]; break;
            case Mode::Identity: p = retinal[i]; break;
            case Mode::Efferent: {
                Vec2 est = trace[i];
                if (efferent) est = efferent_estimate(trace[i], efferent->noise_sd, efferent->quantization, efferent_seed, i);
                p = retinal[i] + Translation{to_element(est.x, pitch), to_element(est.y, pitch)};
                break;
            }
        }
        out.push(element_to_arcmin(p, pitch), ok);
    }
    return out;
}

std::optional<double> ConditionResult::ratio_world() const {
    if (world_motion == 0.0) return std::nullopt;
    return perceived_motion / world_motion;
}

std::optional<double> ConditionResult::ratio_retinal() const {
    if (retinal_motion == 0.0) return std::nullopt;
    return perceived_motion / retinal_motion;
}

ConditionResult measure_condition(double gain, const FixationRun& run, const PerceptTrace& percept, double pitch) {
    ConditionResult r;
    r.gain = gain;
    std::vector<Vec2> w, ret;
    w.reserve(run.samples.size());
    ret.reserve(run.samples.size());
    for (const StepSample& s : run.samples) {
        w.push_back(element_to_arcmin(s.stimulus_world_element, pitch));
        ret.push_back(element_to_arcmin(s.stimulus_retinal_element, pitch));
    }
    r.world_motion = path_length(w);
    r.retinal_motion = path_length(ret);
    r.perceived_motion = motion_magnitude(percept);
    r.perceived_rms = rms_deviation(percept);
    for (const MappingDecision& d : run.decisions) ++r.mode_counts[static_cast<std::size_t>(d.mode)];
    r.steps = run.decisions.size();
    return r;
}

namespace {

SweepSummary summarize(const std::vector<ConditionResult>& results, double delta, bool strict) {
    if (!(delta > 0.0)) throw InvalidArgument("discontinuity window must be > 0");
    std::map<double, std::vector<const ConditionResult*>> by_gain;
    for (const ConditionResult& r : results) by_gain[r.gain].push_back(&r);

    SweepSummary out;
    for (const auto& [gain, group] : by_gain) {
        GainSweepRow row;
        row.gain = gain;
        row.repeats = group.size();
        std::vector<double> world, retinal, perceived, rms, rw, rr;
        std::array<double, kModeCount> counts{};
        double steps = 0.0;
        for (const ConditionResult* c : group) {
            world.push_back(c->world_motion);
            retinal.push_back(c->retinal_motion);
            perceived.push_back(c->perceived_motion);
            rms.push_back(c->perceived_rms);
            if (auto v = c->ratio_world()) rw.push_back(*v);
            if (auto v = c->ratio_retinal()) rr.push_back(*v);
            for (int m = 0; m < kModeCount; ++m) counts[m] += static_cast<double>(c->mode_counts[m]);
            steps += static_cast<double>(c->steps);
        }
        row.world_motion = mean(world);
        row.retinal_motion = mean(retinal);
        row.perceived_motion = mean(perceived);
        row.perceived_motion_sd = stddev(perceived);
        row.perceived_rms = mean(rms);
        if (!rw.empty()) row.motion_ratio_world = mean(rw);
        if (!rr.empty()) row.motion_ratio_retinal = mean(rr);
        row.ratio_world_sd = stddev(rw);
        row.ratio_retinal_sd = stddev(rr);
        for (int m = 0; m < kModeCount; ++m) row.mode_fractions[m] = steps > 0.0 ? counts[m] / steps : 0.0;
        out.rows.push_back(row);
    }

    std::size_t below = 0, above = 0;
    std::vector<double> lo, hi;
    for (const GainSweepRow& row : out.rows) {
        if (row.gain < 1.0) ++below;
        if (row.gain > 1.0) ++above;
        if (!row.motion_ratio_world) continue;
        if (row.gain > 1.0 && row.gain <= 1.0 + delta) hi.push_back(*row.motion_ratio_world);
        if (row.gain < 1.0 && row.gain >= 1.0 - delta) lo.push_back(*row.motion_ratio_world);
    }
    if (below < 2 || above < 2) {
        if (strict) throw InvalidArgument("discontinuity needs at least two gains on each side of 1");
        return out;
    }
    if (lo.empty() || hi.empty()) {
        if (strict) throw InvalidArgument("discontinuity window around g=1 is empty");
        return out;
    }
    out.discontinuity = mean(hi) - mean(lo);
    return out;
}

}  // namespace

SweepSummary sweep_summary(const std::vector<ConditionResult>& results, double delta) {
    return summarize(results, delta, true);
}

SweepSummary summarize_sweep(const std::vector<ConditionResult>& results, double delta) {
    return summarize(results, delta, false);
}

void write_sweep_csv(const SweepSummary& summary, std::ostream& out) {
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.9g}", *v) : std::string(); };
    out << "gain,world_motion,retinal_motion,perceived_motion,ratio_world,ratio_retinal,"
           "frac_stabilize,frac_override,frac_identity,frac_efferent,"
           "perceived_motion_sd,ratio_world_sd,ratio_retinal_sd,perceived_rms,repeats\n";
    for (const GainSweepRow& r : summary.rows) {
        out << fmt::format("{:.9g},{:.9g},{:.9g},{:.9g},{},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{}\n",
                           r.gain, r.world_motion, r.retinal_motion, r.perceived_motion, opt(r.motion_ratio_world),
                           opt(r.motion_ratio_retinal), r.mode_fractions[0], r.mode_fractions[1], r.mode_fractions[2],
                           r.mode_fractions[3], r.perceived_motion_sd, r.ratio_world_sd, r.ratio_retinal_sd,
                           r.perceived_rms, r.repeats);
    }
    out << "discontinuity," << opt(summary.discontinuity) << "\n";
}

}  // namespace vstab
