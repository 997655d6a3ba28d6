#include "vstab/registration.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "vstab/error.hpp"

namespace vstab {

double EccentricityWeight::operator()(double x, double y) const {
    const double r = std::hypot(x - center.x, y - center.y) / half_radius_arcmin;
    return 1.0 / (1.0 + r * r);
}

SpatialArray EccentricityWeight::sample(int width, int height, double pitch) const {
    std::vector<double> v(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) v[static_cast<std::size_t>(y) * width + x] = (*this)(x * pitch, y * pitch);
    return SpatialArray(width, height, std::move(v), pitch);
}

std::vector<PreparedReference::Span> nonzero_row_spans(const SpatialArray& a) {
    std::vector<PreparedReference::Span> spans(static_cast<std::size_t>(a.height()));
    for (int y = 0; y < a.height(); ++y) {
        const auto r = a.row(y);
        int b = 0;
        while (b < a.width() && r[static_cast<std::size_t>(b)] == 0.0) ++b;
        int e = a.width();
        while (e > b && r[static_cast<std::size_t>(e - 1)] == 0.0) --e;
        spans[static_cast<std::size_t>(y)] = {b, e};
    }
    return spans;
}

PreparedReference::PreparedReference(SpatialArray reference, std::optional<EccentricityWeight> weight)
    : ref_(std::move(reference)), weight_(std::move(weight)) {
    const int w = ref_.width();
    const int h = ref_.height();
    weights_.assign(ref_.size(), 1.0);
    if (weight_) {
        const SpatialArray s = weight_->sample(w, h, ref_.pitch());
        weights_.assign(s.values().begin(), s.values().end());
    }
    weighted_.resize(ref_.size());
    const auto v = ref_.values();
    for (std::size_t i = 0; i < v.size(); ++i) weighted_[i] = v[i] * weights_[i];
    all_zero_ = ref_.all_zero();

    prefix_.assign(static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += weights_[static_cast<std::size_t>(y) * w + x];
            prefix_[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
                prefix_[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] + row;
        }
    }
    spans_ = nonzero_row_spans(ref_);
}

double PreparedReference::overlap_weight(Translation t) const {
    const int w = ref_.width();
    const int h = ref_.height();
    const int x0 = std::max(0, t.dx), x1 = std::min(w, w + t.dx);
    const int y0 = std::max(0, t.dy), y1 = std::min(h, h + t.dy);
    if (x0 >= x1 || y0 >= y1) return 0.0;
    if (!weight_) return static_cast<double>(x1 - x0) * static_cast<double>(y1 - y0);
    auto p = [&](int x, int y) { return prefix_[static_cast<std::size_t>(y) * (w + 1) + x]; };
    return p(x1, y1) - p(x0, y1) - p(x1, y0) + p(x0, y0);
}

double weighted_overlap_dot(const SpatialArray& moving, const std::vector<PreparedReference::Span>& moving_spans,
                            const PreparedReference& ref, Translation t) {
    const int w = moving.width();
    const int h = moving.height();
    // Reference coordinates x with source x - t in range.
    const int x0 = std::max(0, t.dx), x1 = std::min(w, w + t.dx);
    const int y0 = std::max(0, t.dy), y1 = std::min(h, h + t.dy);
    if (x0 >= x1 || y0 >= y1) return 0.0;

    const double* mv = moving.values().data();
    const double* rv = ref.weighted().data();
    const auto& ref_spans = ref.row_spans();
    double total = 0.0;
    for (int y = y0; y < y1; ++y) {
        const auto& rs = ref_spans[static_cast<std::size_t>(y)];
        const auto& ms = moving_spans[static_cast<std::size_t>(y - t.dy)];
        // Intersect nonzero spans (moving span mapped into reference coordinates).
        const int b = std::max({x0, rs.begin, ms.begin + t.dx});
        const int e = std::min({x1, rs.end, ms.end + t.dx});
        if (b >= e) continue;
        // Lanes are anchored at x0, so skipping leading zero terms keeps the lane pattern.
        int k = (b - x0) & ~3;
        const int kend = e - x0;
        const double* m = mv + static_cast<std::ptrdiff_t>(y - t.dy) * w + (x0 - t.dx);
        const double* r = rv + static_cast<std::ptrdiff_t>(y) * w + x0;
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        for (; k + 4 <= kend; k += 4) {
            a0 += m[k] * r[k];
            a1 += m[k + 1] * r[k + 1];
            a2 += m[k + 2] * r[k + 2];
            a3 += m[k + 3] * r[k + 3];
        }
        if (k < kend) a0 += m[k] * r[k];
        if (k + 1 < kend) a1 += m[k + 1] * r[k + 1];
        if (k + 2 < kend) a2 += m[k + 2] * r[k + 2];
        total += (a0 + a1) + (a2 + a3);
    }
    return total;
}

std::size_t canonical_argmax(const std::vector<ScoredCandidate>& candidates) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].score > candidates[best].score) best = i;
    return best;
}

MatchResult best_translation(const SpatialArray& moving, const PreparedReference& reference, const MatchOptions& opts) {
    if (!moving.same_shape(reference.reference())) throw InvalidArgument("best_translation: dimension mismatch");
    if (opts.radius < 0) throw InvalidArgument("best_translation: radius must be >= 0");
    if (reference.all_zero()) throw NoMatchError("reference array is all zero");

    const auto candidates = search_disk(opts.radius);
    const auto spans = nonzero_row_spans(moving);
    MatchResult out;
    out.score_map.reserve(candidates.size());
    std::vector<double> raw(candidates.size());
    bool any = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        raw[i] = weighted_overlap_dot(moving, spans, reference, candidates[i]);
        const double area = reference.overlap_weight(candidates[i]);
        any = any || raw[i] > 0.0;
        out.score_map.push_back({candidates[i], area > 0.0 ? raw[i] / area : 0.0});
    }
    if (!any) throw NoMatchError("no candidate translation has overlap energy");
    if (opts.jitter_sd > 0.0) {
        std::mt19937_64 rng(opts.jitter_seed);
        std::normal_distribution<double> n(0.0, opts.jitter_sd);
        for (auto& c : out.score_map) c.score += n(rng);
    }
    const std::size_t best = canonical_argmax(out.score_map);
    out.translation = out.score_map[best].translation;
    out.score = {out.score_map[best].score};
    out.energy = raw[best];
    return out;
}

MatchResult best_translation(const SpatialArray& moving, const SpatialArray& reference, int radius,
                             std::optional<EccentricityWeight> weight) {
    if (!moving.same_shape(reference)) throw InvalidArgument("best_translation: dimension mismatch");
    MatchOptions opts;
    opts.radius = radius;
    opts.weight = weight;
    return best_translation(moving, PreparedReference(reference, std::move(weight)), opts);
}

ReferenceSet capture_references(const RetinalFrame& frame0, const SceneConfig& cfg, double threshold) {
    const SpatialArray& a = frame0.array;
    const ElementPos c = frame0.stimulus_retinal_element;
    const auto footprint = disk_footprint(cfg.stimulus_radius / cfg.pitch);

    std::vector<double> stim(a.size(), 0.0);
    std::vector<double> bg(a.values().begin(), a.values().end());
    std::size_t bright = 0;
    for (const Translation& o : footprint) {
        const int x = c.x + o.dx, y = c.y + o.dy;
        if (!a.contains(x, y)) continue;
        const std::size_t i = static_cast<std::size_t>(y) * a.width() + x;
        stim[i] = a.values()[i];
        bg[i] = 0.0;
        bright += a.values()[i] >= threshold;
    }
    if (2 * bright < footprint.size()) throw CaptureError("stimulus not detectable in onset frame");

    ReferenceSet refs;
    refs.stimulus_ref = SpatialArray(a.width(), a.height(), std::move(stim), a.pitch());
    refs.stimulus_ref_pos = c;
    refs.capture_time = frame0.time;
    if (cfg.background_mode != BackgroundMode::Absent)
        refs.background_ref = SpatialArray(a.width(), a.height(), std::move(bg), a.pitch());
    return refs;
}

std::optional<StimulusSeparation> separate_stimulus(const SpatialArray& frame, const ReferenceSet& refs,
                                                    Translation primary, double threshold) {
    if (!refs.background_ref) throw InvalidArgument("separate_stimulus: no background reference");
    const SpatialArray predicted = shift(*refs.background_ref, -primary);
    if (!predicted.same_shape(frame)) throw InvalidArgument("separate_stimulus: dimension mismatch");

    const auto f = frame.values();
    const auto p = predicted.values();
    std::vector<double> mask(f.size(), 0.0), patch(f.size(), 0.0);
    StimulusSeparation out;
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double residual = std::max(0.0, f[i] - p[i]);
        if (residual >= threshold) {
            mask[i] = 1.0;
            patch[i] = f[i];
            ++out.element_count;
            sx += static_cast<double>(i % static_cast<std::size_t>(frame.width()));
            sy += static_cast<double>(i / static_cast<std::size_t>(frame.width()));
        }
    }
    if (out.element_count == 0) return std::nullopt;
    out.centroid = {sx / out.element_count, sy / out.element_count};
    out.mask = SpatialArray(frame.width(), frame.height(), std::move(mask), frame.pitch());
    out.patch = SpatialArray(frame.width(), frame.height(), std::move(patch), frame.pitch());
    return out;
}

void write_score_map_csv(const MatchResult& result, std::ostream& out) {
    int r = 0;
    for (const auto& c : result.score_map) r = std::max({r, std::abs(c.translation.dx), std::abs(c.translation.dy)});
    const int n = 2 * r + 1;
    std::vector<std::optional<double>> grid(static_cast<std::size_t>(n) * n);
    for (const auto& c : result.score_map)
        grid[static_cast<std::size_t>(c.translation.dy + r) * n + (c.translation.dx + r)] = c.score;
    out << std::setprecision(17);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            if (x) out << ',';
            if (const auto& v = grid[static_cast<std::size_t>(y) * n + x]) out << *v;
        }
        out << '\n';
    }
}

}  // namespace vstab
