#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "vstab/scene.hpp"
#include "vstab/spatial_array.hpp"

namespace vstab {

/// w(r) = 1 / (1 + (r / half_radius)^2) with r the eccentricity from center, both in arcmin.
struct EccentricityWeight {
    double half_radius_arcmin = 120.0;
    Vec2 center{64.0, 64.0};

    double operator()(double x_arcmin, double y_arcmin) const;
    /// Weight array over the element grid of the given shape.
    SpatialArray sample(int width, int height, double pitch) const;
};

struct ScoredCandidate {
    Translation translation;
    double score = 0.0;
};

struct MatchResult {
    Translation translation;
    // Overlap-normalized (and weighted) score of the winner; this is what the argmax ranks.
    MatchScore score;
    // Raw weighted dot product at the winner: sum of w * moving * reference over the overlap.
    double energy = 0.0;
    // Every candidate in canonical order.
    std::vector<ScoredCandidate> score_map;
};

struct MatchOptions {
    int radius = 20;
    std::optional<EccentricityWeight> weight;
    // Additive Gaussian score jitter (diagnostic; zero reproduces the exact search).
    double jitter_sd = 0.0;
    std::uint64_t jitter_seed = 0;
};

/// A reference array with the per-call precomputation hoisted out: weighted values,
/// weight prefix sums for overlap areas, and per-row nonzero spans.
class PreparedReference {
public:
    PreparedReference(SpatialArray reference, std::optional<EccentricityWeight> weight);

    const SpatialArray& reference() const noexcept { return ref_; }
    const std::optional<EccentricityWeight>& weight() const noexcept { return weight_; }
    const std::vector<double>& weighted() const noexcept { return weighted_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    bool all_zero() const noexcept { return all_zero_; }

    /// Sum of weights over reference elements x with x - t inside the array.
    double overlap_weight(Translation t) const;

    struct Span {
        int begin = 0;
        int end = 0;  // exclusive; begin == end for an all-zero row
    };
    const std::vector<Span>& row_spans() const noexcept { return spans_; }

private:
    SpatialArray ref_;
    std::optional<EccentricityWeight> weight_;
    std::vector<double> weights_;
    std::vector<double> weighted_;
    std::vector<double> prefix_;  // (w+1)*(h+1) inclusive prefix sums of weights_
    std::vector<Span> spans_;
    bool all_zero_ = true;
};

/// Per-row nonzero spans of an arbitrary array.
std::vector<PreparedReference::Span> nonzero_row_spans(const SpatialArray& a);

/// Raw weighted dot of shift(moving, t) against a prepared reference over the valid overlap.
/// The summation order is fixed (row-major, four interleaved lanes per row), so sparse and
/// dense evaluation, sequential or parallel, produce identical bits.
double weighted_overlap_dot(const SpatialArray& moving, const std::vector<PreparedReference::Span>& moving_spans,
                            const PreparedReference& ref, Translation t);

/// Exhaustive translation search over the disk |t| <= radius.
/// Throws NoMatchError if the reference is all zero or every candidate scores zero.
MatchResult best_translation(const SpatialArray& moving, const PreparedReference& reference, const MatchOptions& opts);
MatchResult best_translation(const SpatialArray& moving, const SpatialArray& reference, int radius,
                             std::optional<EccentricityWeight> weight = std::nullopt);

/// Index of the canonical argmax: highest score, ties to the earliest candidate in canonical order.
std::size_t canonical_argmax(const std::vector<ScoredCandidate>& candidates);

struct ReferenceSet {
    std::optional<SpatialArray> background_ref;
    SpatialArray stimulus_ref;
    ElementPos stimulus_ref_pos;  // element position of the stimulus center at capture
    double capture_time = 0.0;
};

/// Splits the onset frame into background and stimulus references using the known stimulus
/// footprint. Throws CaptureError when fewer than half the footprint elements reach
/// separation_threshold.
ReferenceSet capture_references(const RetinalFrame& frame0, const SceneConfig& cfg, double separation_threshold = 0.5);

struct StimulusSeparation {
    SpatialArray patch;
    SpatialArray mask;
    std::size_t element_count = 0;
    Vec2 centroid;  // element coordinates
};

/// Inhibitive subtraction: residual = max(0, frame - shift(background_ref, -m_p)), thresholded.
/// Returns nullopt when no element survives (stimulus lost). Throws InvalidArgument if the
/// reference set has no background.
std::optional<StimulusSeparation> separate_stimulus(const SpatialArray& frame, const ReferenceSet& refs,
                                                    Translation primary, double threshold = 0.5);

/// (2r+1)x(2r+1) grid indexed by dy (rows) and dx (columns); cells outside the disk are empty.
void write_score_map_csv(const MatchResult& result, std::ostream& out);

}  // namespace vstab
