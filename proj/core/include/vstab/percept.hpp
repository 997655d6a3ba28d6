#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "vstab/engine.hpp"
#include "vstab/eye_motion.hpp"
#include "vstab/registration.hpp"
#include "vstab/scene.hpp"

namespace vstab {

/// Canvas stimulus position per step, arcmin in array coordinates.
struct PerceptTrace {
    std::vector<Vec2> positions;
    std::vector<bool> valid;

    std::size_t size() const noexcept { return positions.size(); }
    std::size_t valid_count() const;
    void push(Vec2 p, bool ok) {
        positions.push_back(p);
        valid.push_back(ok);
    }
};

/// Locates the stimulus pattern on successive canvases by template correlation.
class StimulusTracker {
public:
    struct Options {
        int search_radius = 48;
        double threshold = 0.9;  // fraction of the template's self-match a peak must reach
    };

    StimulusTracker(const ReferenceSet& refs, Options opts);
    explicit StimulusTracker(const ReferenceSet& refs) : StimulusTracker(refs, Options{}) {}

    /// Centroid of the offsets attaining the peak correlation; invalid when the peak is weak.
    std::pair<Vec2, bool> locate(const SpatialArray& canvas);

private:
    struct Tap {
        Translation offset;
        double value;
    };
    std::vector<Tap> taps_;
    std::vector<Translation> candidates_;
    ElementPos origin_;
    double self_match_ = 0.0;
    double pitch_ = 1.0;
    Options opts_;
    std::optional<SpatialArray> last_canvas_;
    std::pair<Vec2, bool> last_result_;
};

PerceptTrace track_stimulus(const std::vector<SpatialArray>& canvases, const ReferenceSet& refs,
                            StimulusTracker::Options opts = {});

/// Path length over consecutive valid samples. Throws InvalidArgument with fewer than two.
double motion_magnitude(const PerceptTrace& trace);
/// RMS distance of valid samples from their mean position.
double rms_deviation(const PerceptTrace& trace);
/// Path length of a position sequence.
double path_length(const std::vector<Vec2>& positions);

struct ClosedFormInputs {
    double gain = 0.0;
    Mode mode = Mode::CoherentStabilize;
    int latency_steps = 0;
    Vec2 s0{64.0, 64.0};
    std::optional<EfferentConfig> efferent;  // Efferent mode; nullopt = perfect estimate
    std::uint64_t efferent_seed = 0;
};

/// Per-mode analytic percept on continuous coordinates:
///   stabilize: s0 + (g-1)(e(t) - e(t - L dt));  override: s0 + g e(t);
///   identity:  s0 + (g-1) e(t);                efferent: s0 + (g-1) e(t) + ê(t).
PerceptTrace closed_form_percept(const EyeTrace& trace, const ClosedFormInputs& in);

/// The same model evaluated through the scene's rasterization and display hold, so it is
/// directly comparable to engine canvases. Stabilize steps before the first delayed
/// transfer (t < L dt) are invalid.
PerceptTrace closed_form_percept_rasterized(const EyeTrace& trace, const SceneConfig& scene, Mode mode,
                                            int latency_steps, const std::optional<EfferentConfig>& efferent = {},
                                            std::uint64_t efferent_seed = 0);

/// Measurements of one fixation run under one gain.
struct ConditionResult {
    double gain = 0.0;
    double world_motion = 0.0;
    double retinal_motion = 0.0;
    double perceived_motion = 0.0;
    double perceived_rms = 0.0;
    std::array<std::size_t, kModeCount> mode_counts{};
    std::size_t steps = 0;

    std::optional<double> ratio_world() const;
    std::optional<double> ratio_retinal() const;
};

/// world/retinal path lengths from the rasterized stimulus the scene displayed.
ConditionResult measure_condition(double gain, const FixationRun& run, const PerceptTrace& percept, double pitch);

struct GainSweepRow {
    double gain = 0.0;
    double world_motion = 0.0;
    double retinal_motion = 0.0;
    double perceived_motion = 0.0;
    std::optional<double> motion_ratio_world;
    std::optional<double> motion_ratio_retinal;
    std::array<double, kModeCount> mode_fractions{};
    double perceived_motion_sd = 0.0;
    double ratio_world_sd = 0.0;
    double ratio_retinal_sd = 0.0;
    double perceived_rms = 0.0;
    std::size_t repeats = 0;
};

struct SweepSummary {
    std::vector<GainSweepRow> rows;  // sorted by gain
    std::optional<double> discontinuity;  // absent when the grid does not straddle g=1
};

/// Aggregates repeats per gain (mean and sd) and computes
/// mean ratio_world over (1, 1+delta] minus mean over [1-delta, 1).
/// Throws InvalidArgument when fewer than two gains lie on either side of 1 or a window is empty.
SweepSummary sweep_summary(const std::vector<ConditionResult>& results, double delta = 0.25);
/// As sweep_summary, but leaves the discontinuity absent instead of throwing on poor coverage.
SweepSummary summarize_sweep(const std::vector<ConditionResult>& results, double delta = 0.25);

/// Sweep CSV; the footer row carries the discontinuity statistic.
void write_sweep_csv(const SweepSummary& summary, std::ostream& out);

}  // namespace vstab
