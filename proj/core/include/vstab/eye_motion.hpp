#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace vstab {

/// Position on the retina/world plane in arcmin.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr bool operator==(Vec2, Vec2) = default;
    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
    double norm() const;
};

/// Per-sample step above which a trace is treated as containing a saccade.
inline constexpr double kDefaultSaccadeThreshold = 5.0;

/// Eye position samples at a fixed interval, re-based so the first sample is the origin.
class EyeTrace {
public:
    /// Throws InvalidArgument if interval <= 0, fewer than two samples, positions[0] != 0,
    /// or any per-sample step exceeds saccade_threshold (arcmin).
    EyeTrace(double sample_interval_s, std::vector<Vec2> positions,
             double saccade_threshold = kDefaultSaccadeThreshold);

    double sample_interval() const noexcept { return dt_; }
    double duration() const noexcept { return dt_ * static_cast<double>(positions_.size() - 1); }
    std::size_t size() const noexcept { return positions_.size(); }
    const std::vector<Vec2>& positions() const noexcept { return positions_; }
    Vec2 operator[](std::size_t i) const { return positions_[i]; }

    /// Nearest-sample index for time t; throws InvalidArgument outside [0, duration].
    std::size_t index_at(double t) const;
    Vec2 at(double t) const { return positions_[index_at(t)]; }

    /// Largest per-sample step magnitude.
    double max_step() const;

private:
    double dt_;
    std::vector<Vec2> positions_;
};

struct DriftPreset {
    const char* name;
    double diffusion;  // arcmin^2/s per axis
};

inline constexpr DriftPreset kStrongFixation{"strong", 5.0};
inline constexpr DriftPreset kWeakerFixation{"weaker", 40.0};

/// Looks up "strong" / "weaker"; throws InvalidArgument for anything else.
DriftPreset drift_preset(const std::string& name);

/// Brownian drift: independent Gaussian steps with variance diffusion*dt per axis.
EyeTrace generate_drift(std::uint64_t seed, double duration_s, double diffusion, double rate_hz);

/// Linear ramp e(t) = velocity * t, handy for closed-form checks.
EyeTrace ramp_trace(Vec2 velocity_arcmin_per_s, double duration_s, double rate_hz);

/// e(t1) - e(t0) using nearest samples.
Vec2 displacement(const EyeTrace& trace, double t0, double t1);

// CSV: optional header "t,x,y"; rows time(s), x, y (arcmin) with strictly increasing t.
// Positions are re-based to the first row. The sample interval is the mean row spacing.
EyeTrace load_trace(std::istream& in, double saccade_threshold = kDefaultSaccadeThreshold);
EyeTrace load_trace(const std::filesystem::path& path, double saccade_threshold = kDefaultSaccadeThreshold);
void save_trace(const EyeTrace& trace, std::ostream& out);
void save_trace(const EyeTrace& trace, const std::filesystem::path& path);

}  // namespace vstab
