#include "vstab/msc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "vstab/error.hpp"

namespace vstab {

MatchNeuron MatchNeuron::at(Translation t) {
    MatchNeuron n;
    n.mapping = t;
    n.angle_deg = t.angle_deg();
    n.radius = t.norm();
    return n;
}

double coincidence_inject(double a, double b, double threshold) {
    const double m = std::min(a, b);
    return m > 0.0 && m >= threshold ? m : 0.0;
}

DendriteOutput dendritic_sum(std::span<const double> contributions, const Saturation& s) {
    double total = 0.0;
    for (double c : contributions) {
        if (c < 0.0) throw InvalidArgument("dendritic_sum: contributions must be >= 0");
        total += c;
    }
    const double a = s(total);
    return {a, s.pulse_time(a)};
}

MscNetwork MscNetwork::for_radius(int radius, double inhibition_strength, Saturation s) {
    MscNetwork net;
    net.inhibition_strength = inhibition_strength;
    net.nonlinearity = s;
    for (Translation t : search_disk(radius)) {
        net.match_neurons.push_back(MatchNeuron::at(t));
        net.select_neurons.push_back({t, false});
    }
    return net;
}

std::optional<CompetitionResult> compete_traced(MscNetwork& net) {
    auto& neurons = net.match_neurons;
    for (auto& s : net.select_neurons) s.gate_open = false;
    std::vector<double> a(neurons.size());
    for (std::size_t i = 0; i < neurons.size(); ++i) a[i] = std::max(0.0, neurons[i].activation);
    if (std::none_of(a.begin(), a.end(), [](double v) { return v > 0.0; })) return std::nullopt;

    CompetitionResult result;
    auto finish = [&](std::size_t w) {
        result.winner = w;
        if (w < net.select_neurons.size()) net.select_neurons[w].gate_open = true;
        return result;
    };
    const double beta = net.inhibition_strength;
    for (int round = 0;; ++round) {
        std::size_t survivors = 0, leader = 0;
        double top = -1.0, second = -1.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] <= 0.0) continue;
            ++survivors;
            if (a[i] > top) {
                second = top;
                top = a[i];
                leader = i;
            } else if (a[i] > second) {
                second = a[i];
            }
        }
        result.trace.push_back({round, survivors, neurons[leader].mapping});
        if (survivors == 1) return finish(leader);
        // Exact tie among the strongest: inhibition is symmetric and cannot separate them.
        if (second == top || round >= net.max_rounds) return finish(leader);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] <= 0.0) continue;
            const double strongest_other = i == leader ? second : top;
            a[i] = std::max(0.0, a[i] - beta * strongest_other);
        }
    }
}

std::optional<MatchNeuron> compete(MscNetwork& net) {
    auto r = compete_traced(net);
    if (!r) return std::nullopt;
    return net.match_neurons[r->winner];
}

SpatialArray gate_transfer(const MatchNeuron& winner, const SpatialArray& retina, const SpatialArray& canvas,
                           const SpatialArray& active_subset) {
    return transfer(canvas, shift(retina, winner.mapping), shift(active_subset, winner.mapping));
}

SpatialArray random_active_subset(int width, int height, double fraction, std::uint64_t seed, double pitch) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw InvalidArgument("active fraction must be in [0,1]");
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first k entries are a uniform sample without replacement.
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 0; i < k; ++i) v[idx[i]] = 1.0;
    return SpatialArray(width, height, std::move(v), pitch);
}

namespace {

// Coincidence-weighted dendritic input of one match neuron, summed in the same row-major,
// four-lane order as the functional matcher so binary inputs give identical sums.
double dendrite_input(const SpatialArray& moving, const std::vector<PreparedReference::Span>& moving_spans,
                      const PreparedReference& ref, Translation t, double threshold) {
    const int w = moving.width();
    const int h = moving.height();
    const int x0 = std::max(0, t.dx), x1 = std::min(w, w + t.dx);
    const int y0 = std::max(0, t.dy), y1 = std::min(h, h + t.dy);
    if (x0 >= x1 || y0 >= y1) return 0.0;
    const double* mv = moving.values().data();
    const double* rv = ref.reference().values().data();
    const double* wv = ref.weights().data();
    const auto& ref_spans = ref.row_spans();
    double total = 0.0;
    for (int y = y0; y < y1; ++y) {
        const auto& rs = ref_spans[static_cast<std::size_t>(y)];
        const auto& ms = moving_spans[static_cast<std::size_t>(y - t.dy)];
        const int b = std::max({x0, rs.begin, ms.begin + t.dx});
        const int e = std::min({x1, rs.end, ms.end + t.dx});
        if (b >= e) continue;
        const double* m = mv + static_cast<std::ptrdiff_t>(y - t.dy) * w + (x0 - t.dx);
        const double* r = rv + static_cast<std::ptrdiff_t>(y) * w + x0;
        const double* wt = wv + static_cast<std::ptrdiff_t>(y) * w + x0;
        double lanes[4] = {0.0, 0.0, 0.0, 0.0};
        for (int k = (b - x0) & ~3; k < e - x0; ++k) lanes[k & 3] += wt[k] * coincidence_inject(m[k], r[k], threshold);
        total += (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    }
    return total;
}

}  // namespace

MscNetwork build_network(const SpatialArray& moving, const PreparedReference& reference, const MscOptions& opts) {
    if (!moving.same_shape(reference.reference())) throw InvalidArgument("msc: dimension mismatch");
    MscNetwork net = MscNetwork::for_radius(opts.radius, opts.inhibition_strength, Saturation{opts.saturation_sigma});
    net.max_rounds = opts.max_rounds;
    const auto spans = nonzero_row_spans(moving);
    const double full = reference.overlap_weight({0, 0});
    for (auto& n : net.match_neurons) {
        const double area = reference.overlap_weight(n.mapping);
        if (area <= 0.0) continue;
        // Neurons for large shifts have fewer synapse pairs; their dendritic gain compensates
        // so every neuron sees a per-pair average scaled to the full array.
        const double input =
            dendrite_input(moving, spans, reference, n.mapping, opts.coincidence_threshold) / area * full;
        n.activation = net.nonlinearity(input);
        n.pulse_time = net.nonlinearity.pulse_time(n.activation);
    }
    return net;
}

MatchResult msc_best_translation(const SpatialArray& moving, const PreparedReference& reference,
                                 const MscOptions& opts, std::vector<CompetitionRound>* trace) {
    if (reference.all_zero()) throw NoMatchError("reference array is all zero");
    MscNetwork net = build_network(moving, reference, opts);
    auto outcome = compete_traced(net);
    if (!outcome) throw NoMatchError("no match neuron fired");
    if (trace) *trace = outcome->trace;

    MatchResult r;
    const auto& winner = net.match_neurons[outcome->winner];
    r.translation = winner.mapping;
    r.score = {winner.activation};
    r.score_map.reserve(net.match_neurons.size());
    for (const auto& n : net.match_neurons) r.score_map.push_back({n.mapping, n.activation});
    r.energy = weighted_overlap_dot(moving, nonzero_row_spans(moving), reference, winner.mapping);
    return r;
}

MatchResult msc_best_translation(const SpatialArray& moving, const SpatialArray& reference, int radius) {
    MscOptions opts;
    opts.radius = radius;
    return msc_best_translation(moving, PreparedReference(reference, std::nullopt), opts);
}

bool radial_consistency(const MatchNeuron& p, const MatchNeuron& s, double half_angle) {
    if (s.radius == 0.0) return true;
    if (p.radius == 0.0) return false;
    double diff = std::fmod(std::abs(p.angle_deg - s.angle_deg), 360.0);
    diff = std::min(diff, 360.0 - diff);
    // Same side of the zero point: a perpendicular pair is never on the same side.
    return diff <= half_angle + 1e-9 && diff < 90.0 - 1e-9;
}

void write_competition_trace(const std::vector<CompetitionRound>& trace, std::ostream& out) {
    out << "round,survivors,leader.dx,leader.dy\n";
    for (const auto& r : trace) out << r.round << ',' << r.survivors << ',' << r.leader.dx << ',' << r.leader.dy << '\n';
}

MatchResult MscMatcher::match(const SpatialArray& moving, const PreparedReference& reference,
                              const MatchOptions& opts) const {
    MscOptions o;
    o.radius = opts.radius;
    o.weight = opts.weight;
    o.coincidence_threshold = params_.coincidence_threshold;
    o.inhibition_strength = params_.inhibition_strength;
    o.saturation_sigma = params_.saturation_sigma;
    o.max_rounds = params_.max_rounds;
    return msc_best_translation(moving, reference, o);
}

SpatialArray MscMatcher::gate(const SpatialArray& canvas, const SpatialArray& source, const SpatialArray& mask,
                              Translation t) const {
    return gate_transfer(MatchNeuron::at(t), source, canvas, mask);
}

}  // namespace vstab
