#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vstab/eye_motion.hpp"
#include "vstab/spatial_array.hpp"

namespace vstab {

enum class BackgroundMode { Full, Annulus, Absent, FixationCross };

std::string_view to_string(BackgroundMode mode);
BackgroundMode parse_background_mode(std::string_view name);

/// Integer element position.
struct ElementPos {
    int x = 0;
    int y = 0;
    friend constexpr bool operator==(ElementPos, ElementPos) = default;
    friend constexpr ElementPos operator+(ElementPos p, Translation t) { return {p.x + t.dx, p.y + t.dy}; }
    friend constexpr ElementPos operator-(ElementPos p, Translation t) { return {p.x - t.dx, p.y - t.dy}; }
    friend constexpr Translation operator-(ElementPos a, ElementPos b) { return {a.x - b.x, a.y - b.y}; }
};

/// Stimulus-delivery geometry. Positions are arcmin in array coordinates (element (0,0) at the origin).
struct SceneConfig {
    BackgroundMode background_mode = BackgroundMode::Full;
    double annulus_inner_radius_deg = 4.5;
    std::uint64_t background_texture_seed = 1;
    // Activation of the "on" texture elements. Kept below the separation threshold so an
    // opaque stimulus over texture still leaves a residual above it.
    double background_contrast = 0.4;

    Vec2 stimulus_center_s0{64.0, 64.0};
    double stimulus_radius = 6.0;
    double gain_g = 0.0;
    double display_rate = 60.0;

    int width = 128;
    int height = 128;
    double pitch = 1.0;

    Vec2 cross_center{34.0, 64.0};
    double cross_half_length = 8.0;
    double cross_activation = 1.0;

    /// World position of the fovea at fixation onset; annulus eccentricity is measured from here.
    Vec2 fovea() const { return {0.5 * width * pitch, 0.5 * height * pitch}; }

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

/// s0 + g*e.
Vec2 stimulus_world_pos(double g, Vec2 e, Vec2 s0);
/// s0 + (g-1)*e: world position minus eye position.
Vec2 stimulus_retinal_pos(double g, Vec2 e, Vec2 s0);

struct RetinalFrame {
    double time = 0.0;
    SpatialArray array;
    // Analytic retinal stimulus position using the display-held eye sample. Ground truth for
    // tests and metrics only.
    Vec2 true_stimulus_retinal_pos;
    // Rasterized quantities the frame was drawn from.
    Translation eye_offset;             // round(e(t) / pitch)
    ElementPos stimulus_world_element;  // round(world stimulus position / pitch)
    ElementPos stimulus_retinal_element;
    Vec2 held_eye;                      // eye sample at the last display update
};

/// Renders retinal frames for one trace and scene. Precomputes the stimulus footprint.
class SceneRenderer {
public:
    SceneRenderer(const EyeTrace& trace, SceneConfig cfg);

    const SceneConfig& config() const noexcept { return cfg_; }
    const EyeTrace& trace() const noexcept { return trace_; }
    std::size_t steps() const noexcept { return trace_.size(); }

    RetinalFrame render(double t) const;
    RetinalFrame render_step(std::size_t i) const;

    /// Eye sample in effect for the stimulus at time t (60 Hz zero-order hold by default).
    Vec2 held_eye(double t) const;

    /// Background activation at a world element, zero where the mode draws nothing.
    double background_at(int world_x, int world_y) const;

    /// Element offsets of the stimulus disk relative to its center.
    const std::vector<Translation>& stimulus_footprint() const noexcept { return footprint_; }

    ElementPos stimulus_world_element(Vec2 held_eye) const;

private:
    EyeTrace trace_;
    SceneConfig cfg_;
    std::vector<Translation> footprint_;
};

/// One-shot convenience around SceneRenderer.
RetinalFrame render_retina(const EyeTrace& trace, double t, const SceneConfig& cfg);

/// Offsets of a filled disk of the given radius in elements.
std::vector<Translation> disk_footprint(double radius_elements);

/// Binary world texture value at an integer world element for a seed.
bool texture_bit(std::uint64_t seed, int x, int y);

/// Dense binary random texture with values {0, 1}; unique autocorrelation peak with high probability.
SpatialArray random_binary_texture(int width, int height, std::uint64_t seed, double pitch = 1.0);

/// Outline of a regular hexagon (Figure-style illustration fixture).
SpatialArray hexagon_outline(int width, int height, Vec2 center, double radius, double pitch = 1.0);

}  // namespace vstab
