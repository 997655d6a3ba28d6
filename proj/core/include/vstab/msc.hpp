#pragma once

// Single-stage map-seeking circuit restricted to translations: one match neuron and one
// map-select neuron per candidate mapping, coincidence synapse pairs summed along a
// saturating dendrite, and lateral-inhibition competition with a radial layout.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vstab/engine.hpp"
#include "vstab/registration.hpp"

namespace vstab {

struct MatchNeuron {
    Translation mapping;
    double angle_deg = 0.0;  // radial layout: direction of the mapping
    double radius = 0.0;     // radial layout: magnitude of the mapping
    double activation = 0.0;
    double pulse_time = 1.0;  // earlier = stronger

    static MatchNeuron at(Translation t);
};

struct MapSelectNeuron {
    Translation mapping;
    bool gate_open = false;
};

/// Approximate AND of two adjacent synapses: min(a, b) when it reaches threshold, else 0.
double coincidence_inject(double pre_a, double pre_b, double threshold = 0.1);

/// S(x) = x / (1 + x / sigma): zero at zero, strictly increasing, bounded by sigma.
struct Saturation {
    double sigma = 56.5;
    double operator()(double x) const { return x / (1.0 + x / sigma); }
    /// Pulse onset in (0, 1]; a stronger dendritic signal fires earlier.
    double pulse_time(double activation) const { return 1.0 - activation / sigma; }
};

struct DendriteOutput {
    double activation = 0.0;
    double pulse_time = 1.0;
};

DendriteOutput dendritic_sum(std::span<const double> contributions, const Saturation& s);

struct CompetitionRound {
    int round = 0;
    std::size_t survivors = 0;
    Translation leader;
};

struct MscNetwork {
    std::vector<MatchNeuron> match_neurons;  // canonical candidate order
    std::vector<MapSelectNeuron> select_neurons;
    double inhibition_strength = 0.5;
    Saturation nonlinearity;
    int max_rounds = 10000;

    /// One neuron pair per translation in the disk |t| <= radius, activations zero.
    static MscNetwork for_radius(int radius, double inhibition_strength, Saturation s);
};

struct CompetitionResult {
    std::size_t winner = 0;
    std::vector<CompetitionRound> trace;
};

/// Synchronous-round lateral inhibition: every neuron loses inhibition_strength times the
/// strongest other activation each round until one survives. Exact ties at the top are
/// broken by canonical order. Returns nullopt when every activation is zero. Opens the
/// winner's map-select gate.
std::optional<CompetitionResult> compete_traced(MscNetwork& network);
std::optional<MatchNeuron> compete(MscNetwork& network);

/// transfer(canvas, shift(retina, m), shift(active_subset, m)) for the winner's mapping m.
SpatialArray gate_transfer(const MatchNeuron& winner, const SpatialArray& retina, const SpatialArray& canvas,
                           const SpatialArray& active_subset);

/// Uniform random subset of exactly round(fraction * N) elements, without replacement.
SpatialArray random_active_subset(int width, int height, double fraction, std::uint64_t seed, double pitch = 1.0);

struct MscOptions {
    int radius = 20;
    std::optional<EccentricityWeight> weight;
    double coincidence_threshold = 0.1;
    double inhibition_strength = 0.5;
    double saturation_sigma = 56.5;
    int max_rounds = 10000;
};

/// Builds the network for moving vs reference and loads each match neuron's dendrite.
MscNetwork build_network(const SpatialArray& moving, const PreparedReference& reference, const MscOptions& opts);

/// Throws NoMatchError when no neuron fires.
MatchResult msc_best_translation(const SpatialArray& moving, const PreparedReference& reference,
                                 const MscOptions& opts, std::vector<CompetitionRound>* trace = nullptr);
MatchResult msc_best_translation(const SpatialArray& moving, const SpatialArray& reference, int radius);

/// True when the two winners sit on the same side of the layout within the sector
/// (radii may differ). A zero secondary is always consistent.
bool radial_consistency(const MatchNeuron& primary_winner, const MatchNeuron& secondary_winner,
                        double sector_half_angle);

/// CSV: round,survivors,leader.dx,leader.dy
void write_competition_trace(const std::vector<CompetitionRound>& trace, std::ostream& out);

class MscMatcher final : public Matcher {
public:
    struct Params {
        double coincidence_threshold = 0.1;
        double inhibition_strength = 0.5;
        double saturation_sigma = 56.5;
        int max_rounds = 10000;
    };
    explicit MscMatcher(Params p) : params_(p) {}

    std::string_view name() const override { return "msc"; }
    MatchResult match(const SpatialArray& moving, const PreparedReference& reference,
                      const MatchOptions& opts) const override;
    SpatialArray gate(const SpatialArray& canvas, const SpatialArray& source, const SpatialArray& mask,
                      Translation t) const override;

private:
    Params params_;
};

}  // namespace vstab
