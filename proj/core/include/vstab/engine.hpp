#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "vstab/registration.hpp"
#include "vstab/scene.hpp"

namespace vstab {

enum class Mode { CoherentStabilize, VeridicalOverride, Identity, Efferent };
inline constexpr int kModeCount = 4;

std::string_view to_string(Mode mode);

struct EfferentConfig {
    bool enabled = false;
    double noise_sd = 1.0;      // arcmin, per axis
    double quantization = 1.0;  // arcmin; 0 disables rounding
};

enum class MatcherBackend { Functional, Msc };
std::string_view to_string(MatcherBackend backend);
MatcherBackend parse_backend(std::string_view name);

/// Parameters of the neuronal matcher; see msc.hpp.
struct MscParams {
    double coincidence_threshold = 0.1;
    double inhibition_strength = 0.5;
    double saturation_sigma = 0.0;  // 0 = half the stimulus footprint element count
    int max_rounds = 10000;
};

struct EngineConfig {
    int search_radius = 20;  // primary (background) search disk, elements
    // Stimulus search disk. The stimulus can travel (1-g) times the eye excursion on the retina,
    // which exceeds the background disk at strongly negative gains.
    int secondary_search_radius = 48;
    int latency_steps = 16;
    double sector_half_angle = 45.0;
    EfferentConfig efferent;
    double background_energy_threshold = 8.0;
    double separation_threshold = 0.5;
    bool eccentricity_weighting = true;
    double weight_half_radius_arcmin = 120.0;
    double step_rate = 1000.0;
    double matcher_jitter_sd = 0.0;
    std::uint64_t seed = 0;  // efferent noise and score jitter streams
    MatcherBackend backend = MatcherBackend::Functional;
    MscParams msc;

    void validate() const;
};

struct MappingDecision {
    Mode mode = Mode::Identity;
    Translation m_p;
    std::optional<Translation> m_s;  // present iff mode == CoherentStabilize
    double match_energy = 0.0;
    bool stimulus_lost = false;

    /// Background and stimulus moved by one translation this step.
    bool single_mapping() const { return !m_s || *m_s == m_p; }
};

struct PendingTransfer {
    std::size_t due_step = 0;
    Translation m_s;  // measured at enqueue time
};

struct EngineState {
    ReferenceSet refs;
    SpatialArray canvas;
    std::deque<PendingTransfer> pending;
    std::size_t step_index = 0;
};

/// Matching and gated transfer backend.
class Matcher {
public:
    virtual ~Matcher() = default;
    virtual std::string_view name() const = 0;
    virtual MatchResult match(const SpatialArray& moving, const PreparedReference& reference,
                              const MatchOptions& opts) const = 0;
    /// canvas <- source shifted by t wherever mask (also shifted) is set.
    virtual SpatialArray gate(const SpatialArray& canvas, const SpatialArray& source, const SpatialArray& mask,
                              Translation t) const = 0;
};

class FunctionalMatcher final : public Matcher {
public:
    std::string_view name() const override { return "functional"; }
    MatchResult match(const SpatialArray& moving, const PreparedReference& reference,
                      const MatchOptions& opts) const override;
    SpatialArray gate(const SpatialArray& canvas, const SpatialArray& source, const SpatialArray& mask,
                      Translation t) const override;
};

std::shared_ptr<const Matcher> make_matcher(const EngineConfig& cfg, const SceneConfig& scene);

/// Angular predicate deciding whether a secondary mapping is consistent with the primary.
using SectorRule = std::function<bool(Translation m_p, Translation m_s, double half_angle_deg)>;

/// Hard wedge: angle(m_s, m_p) <= half angle and m_s . m_p > 0.
bool hard_sector(Translation m_p, Translation m_s, double half_angle_deg);

/// CoherentStabilize when m_s lies in the sector around m_p (or is zero), else VeridicalOverride.
/// Throws InvalidArgument when m_p is zero.
Mode select_mode(Translation m_p, Translation m_s, double sector_half_angle, const SectorRule& rule = hard_sector);

/// round_to_quantization(e + N(0, noise_sd)) per axis; deterministic in (seed, step).
Vec2 efferent_estimate(Vec2 e, double noise_sd, double quantization, std::uint64_t seed, std::uint64_t step = 0);

class StabilizationEngine {
public:
    StabilizationEngine(EngineConfig cfg, SceneConfig scene, std::shared_ptr<const Matcher> matcher = nullptr);

    const EngineConfig& config() const noexcept { return cfg_; }
    const SceneConfig& scene() const noexcept { return scene_; }
    const Matcher& matcher() const noexcept { return *matcher_; }
    void set_sector_rule(SectorRule rule) { sector_rule_ = std::move(rule); }

    /// Captures references from the fixation-onset frame; the canvas starts empty and the
    /// first step() copies the onset frame in.
    EngineState initialize(const RetinalFrame& frame0);

    /// One engine tick. efferent is the eye estimate in arcmin, used only when enabled and
    /// no background mapping is available.
    MappingDecision step(EngineState& state, const RetinalFrame& frame, std::optional<Vec2> efferent = std::nullopt);

private:
    MatchResult primary_match(const SpatialArray& frame, std::size_t step);
    MatchResult secondary_match(const SpatialArray& patch, std::size_t step);

    EngineConfig cfg_;
    SceneConfig scene_;
    std::shared_ptr<const Matcher> matcher_;
    SectorRule sector_rule_ = hard_sector;

    // Prepared references and small memo tables for repeated identical inputs.
    std::optional<PreparedReference> bg_prepared_;
    std::optional<PreparedReference> stim_prepared_;
    struct Memo {
        SpatialArray input;
        MatchResult result;
    };
    std::deque<Memo> primary_memo_;
    std::deque<Memo> secondary_memo_;
    SpatialArray ones_;
};

struct StepSample {
    std::size_t step = 0;
    double time = 0.0;
    Translation eye_offset;
    ElementPos stimulus_world_element;
    ElementPos stimulus_retinal_element;
};

struct FixationRun {
    ReferenceSet refs;
    std::vector<MappingDecision> decisions;
    std::vector<StepSample> samples;
    std::vector<SpatialArray> canvases;  // filled only when requested
};

/// Per-step callback with the canvas after that step.
using CanvasObserver = std::function<void(std::size_t step, const SpatialArray& canvas)>;

/// Captures references from the first frame and steps the engine once per trace sample.
FixationRun run_fixation(const EyeTrace& trace, const SceneConfig& scene, const EngineConfig& cfg,
                         bool keep_canvases = true, const CanvasObserver& observer = nullptr,
                         std::shared_ptr<const Matcher> matcher = nullptr);

/// CSV: step,mode,m_p.dx,m_p.dy,m_s.dx,m_s.dy,match_energy (m_s columns empty when absent).
void write_decision_log(const std::vector<MappingDecision>& decisions, std::ostream& out);

}  // namespace vstab
