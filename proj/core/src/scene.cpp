#include "vstab/scene.hpp"

#include <algorithm>
#include <cmath>

#include "vstab/error.hpp"

namespace vstab {

std::string_view to_string(BackgroundMode mode) {
    switch (mode) {
        case BackgroundMode::Full: return "full";
        case BackgroundMode::Annulus: return "annulus";
        case BackgroundMode::Absent: return "absent";
        case BackgroundMode::FixationCross: return "fixation_cross";
    }
    return "?";
}

BackgroundMode parse_background_mode(std::string_view name) {
    if (name == "full") return BackgroundMode::Full;
    if (name == "annulus") return BackgroundMode::Annulus;
    if (name == "absent") return BackgroundMode::Absent;
    if (name == "fixation_cross") return BackgroundMode::FixationCross;
    throw InvalidArgument("unknown background mode '" + std::string(name) + "'");
}

void SceneConfig::validate() const {
    if (width < 1) throw ValidationError("scene.width", "must be >= 1");
    if (height < 1) throw ValidationError("scene.height", "must be >= 1");
    if (!(pitch > 0.0)) throw ValidationError("scene.pitch", "must be > 0");
    if (!(display_rate > 0.0)) throw ValidationError("scene.display_rate", "must be > 0");
    if (!(stimulus_radius > 0.0)) throw ValidationError("scene.stimulus_radius", "must be > 0");
    if (!(background_contrast > 0.0 && background_contrast <= 1.0))
        throw ValidationError("scene.background_contrast", "must be in (0,1]");
    if (!(cross_activation > 0.0 && cross_activation <= 1.0))
        throw ValidationError("scene.cross_activation", "must be in (0,1]");
    if (!(annulus_inner_radius_deg >= 0.0)) throw ValidationError("scene.annulus_inner_radius_deg", "must be >= 0");
    if (!std::isfinite(gain_g)) throw ValidationError("scene.gain_g", "must be finite");
    const double r = stimulus_radius;
    const Vec2 s = stimulus_center_s0;
    if (s.x - r < 0.0 || s.y - r < 0.0 || s.x + r > (width - 1) * pitch || s.y + r > (height - 1) * pitch)
        throw ValidationError("scene.stimulus_center_s0", "stimulus disk must lie inside the array");
}

Vec2 stimulus_world_pos(double g, Vec2 e, Vec2 s0) { return s0 + g * e; }

Vec2 stimulus_retinal_pos(double g, Vec2 e, Vec2 s0) { return s0 + (g - 1.0) * e; }

std::vector<Translation> disk_footprint(double radius_elements) {
    std::vector<Translation> out;
    const int r = static_cast<int>(std::floor(radius_elements));
    const double r2 = radius_elements * radius_elements;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy <= r2) out.push_back({dx, dy});
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

int round_to_element(double arcmin, double pitch) { return static_cast<int>(std::lround(arcmin / pitch)); }

}  // namespace

bool texture_bit(std::uint64_t seed, int x, int y) {
    const auto ux = static_cast<std::uint64_t>(static_cast<std::uint32_t>(x));
    const auto uy = static_cast<std::uint64_t>(static_cast<std::uint32_t>(y));
    return (splitmix64(splitmix64(seed) ^ (ux << 32 | uy)) >> 63) != 0;
}

SpatialArray random_binary_texture(int width, int height, std::uint64_t seed, double pitch) {
    SpatialArray a(width, height, pitch);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (texture_bit(seed, x, y)) a.set(x, y, 1.0);
    return a;
}

SpatialArray hexagon_outline(int width, int height, Vec2 center, double radius, double pitch) {
    SpatialArray a(width, height, pitch);
    // Distance to the hexagon boundary in the hex metric; mark elements within half an element of it.
    constexpr double kSqrt3 = 1.7320508075688772;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double px = std::abs(x * pitch - center.x);
            const double py = std::abs(y * pitch - center.y);
            const double d = std::max(py * 2.0 / kSqrt3, px + py / kSqrt3);
            if (std::abs(d - radius) <= 0.5 * pitch) a.set(x, y, 1.0);
        }
    }
    return a;
}

SceneRenderer::SceneRenderer(const EyeTrace& trace, SceneConfig cfg)
    : trace_(trace), cfg_(std::move(cfg)), footprint_(disk_footprint(cfg_.stimulus_radius / cfg_.pitch)) {
    cfg_.validate();
}

Vec2 SceneRenderer::held_eye(double t) const {
    const double period = 1.0 / cfg_.display_rate;
    // Small tolerance so sample times that land on an update instant count as updated.
    const double update = std::floor(t / period + 1e-9) * period;
    return trace_.at(std::min(update, trace_.duration()));
}

ElementPos SceneRenderer::stimulus_world_element(Vec2 held) const {
    const Vec2 w = stimulus_world_pos(cfg_.gain_g, held, cfg_.stimulus_center_s0);
    return {round_to_element(w.x, cfg_.pitch), round_to_element(w.y, cfg_.pitch)};
}

double SceneRenderer::background_at(int wx, int wy) const {
    switch (cfg_.background_mode) {
        case BackgroundMode::Absent: return 0.0;
        case BackgroundMode::Full:
            return texture_bit(cfg_.background_texture_seed, wx, wy) ? cfg_.background_contrast : 0.0;
        case BackgroundMode::Annulus: {
            const Vec2 f = cfg_.fovea();
            const double ecc = std::hypot(wx * cfg_.pitch - f.x, wy * cfg_.pitch - f.y);
            if (ecc < cfg_.annulus_inner_radius_deg * 60.0) return 0.0;
            return texture_bit(cfg_.background_texture_seed, wx, wy) ? cfg_.background_contrast : 0.0;
        }
        case BackgroundMode::FixationCross: {
            const int cx = round_to_element(cfg_.cross_center.x, cfg_.pitch);
            const int cy = round_to_element(cfg_.cross_center.y, cfg_.pitch);
            const int half = static_cast<int>(std::lround(cfg_.cross_half_length / cfg_.pitch));
            const bool on = (wy == cy && std::abs(wx - cx) <= half) || (wx == cx && std::abs(wy - cy) <= half);
            return on ? cfg_.cross_activation : 0.0;
        }
    }
    return 0.0;
}

RetinalFrame SceneRenderer::render(double t) const {
    const Vec2 e = trace_.at(t);
    const Vec2 held = held_eye(t);

    RetinalFrame f;
    f.time = t;
    f.held_eye = held;
    f.eye_offset = {round_to_element(e.x, cfg_.pitch), round_to_element(e.y, cfg_.pitch)};
    f.stimulus_world_element = stimulus_world_element(held);
    f.stimulus_retinal_element = f.stimulus_world_element - f.eye_offset;
    f.true_stimulus_retinal_pos = stimulus_world_pos(cfg_.gain_g, held, cfg_.stimulus_center_s0) - e;

    std::vector<double> values(static_cast<std::size_t>(cfg_.width) * static_cast<std::size_t>(cfg_.height), 0.0);
    if (cfg_.background_mode != BackgroundMode::Absent) {
        for (int y = 0; y < cfg_.height; ++y)
            for (int x = 0; x < cfg_.width; ++x)
                values[static_cast<std::size_t>(y) * cfg_.width + x] =
                    background_at(x + f.eye_offset.dx, y + f.eye_offset.dy);
    }
    for (const Translation& o : footprint_) {
        const int x = f.stimulus_retinal_element.x + o.dx;
        const int y = f.stimulus_retinal_element.y + o.dy;
        if (x >= 0 && y >= 0 && x < cfg_.width && y < cfg_.height)
            values[static_cast<std::size_t>(y) * cfg_.width + x] = 1.0;
    }
    f.array = SpatialArray(cfg_.width, cfg_.height, std::move(values), cfg_.pitch);
    return f;
}

RetinalFrame SceneRenderer::render_step(std::size_t i) const {
    return render(static_cast<double>(i) * trace_.sample_interval());
}

RetinalFrame render_retina(const EyeTrace& trace, double t, const SceneConfig& cfg) {
    return SceneRenderer(trace, cfg).render(t);
}

}  // namespace vstab
