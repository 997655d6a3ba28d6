#include "vstab/eye_motion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "vstab/error.hpp"

namespace vstab {

double Vec2::norm() const { return std::hypot(x, y); }

EyeTrace::EyeTrace(double sample_interval_s, std::vector<Vec2> positions, double saccade_threshold)
    : dt_(sample_interval_s), positions_(std::move(positions)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidArgument("sample interval must be > 0");
    if (positions_.size() < 2) throw InvalidArgument("trace needs at least 2 samples");
    if (positions_.front() != Vec2{}) throw InvalidArgument("trace must start at the origin");
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        if (!std::isfinite(positions_[i].x) || !std::isfinite(positions_[i].y))
            throw InvalidArgument("non-finite eye position at sample " + std::to_string(i));
        if (i > 0 && (positions_[i] - positions_[i - 1]).norm() > saccade_threshold)
            throw InvalidArgument("step at sample " + std::to_string(i) + " exceeds saccade threshold");
    }
}

std::size_t EyeTrace::index_at(double t) const {
    const double eps = 1e-9 * dt_;
    if (!(t >= -eps) || t > duration() + eps) throw InvalidArgument("time " + std::to_string(t) + " outside trace");
    const auto i = static_cast<std::size_t>(std::llround(std::max(0.0, t) / dt_));
    return std::min(i, positions_.size() - 1);
}

double EyeTrace::max_step() const {
    double m = 0.0;
    for (std::size_t i = 1; i < positions_.size(); ++i) m = std::max(m, (positions_[i] - positions_[i - 1]).norm());
    return m;
}

DriftPreset drift_preset(const std::string& name) {
    if (name == kStrongFixation.name) return kStrongFixation;
    if (name == kWeakerFixation.name) return kWeakerFixation;
    throw InvalidArgument("unknown drift preset '" + name + "'");
}

EyeTrace generate_drift(std::uint64_t seed, double duration_s, double diffusion, double rate_hz) {
    if (!(duration_s > 0.0)) throw InvalidArgument("duration must be > 0");
    if (!(rate_hz > 0.0)) throw InvalidArgument("rate must be > 0");
    if (!(diffusion >= 0.0)) throw InvalidArgument("diffusion must be >= 0");
    const double dt = 1.0 / rate_hz;
    const auto steps = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
    std::vector<Vec2> pos(std::max<std::size_t>(steps, 1) + 1);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, std::sqrt(diffusion * dt));
    for (std::size_t i = 1; i < pos.size(); ++i) {
        // Draw both axes even at zero diffusion so the stream layout does not depend on it.
        const double sx = step(rng);
        const double sy = step(rng);
        pos[i] = {pos[i - 1].x + sx, pos[i - 1].y + sy};
    }
    return EyeTrace(dt, std::move(pos));
}

EyeTrace ramp_trace(Vec2 velocity, double duration_s, double rate_hz) {
    if (!(duration_s > 0.0) || !(rate_hz > 0.0)) throw InvalidArgument("ramp needs positive duration and rate");
    const double dt = 1.0 / rate_hz;
    const auto steps = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
    std::vector<Vec2> pos(std::max<std::size_t>(steps, 1) + 1);
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = (static_cast<double>(i) * dt) * velocity;
    return EyeTrace(dt, std::move(pos));
}

Vec2 displacement(const EyeTrace& trace, double t0, double t1) {
    if (t0 > t1) throw InvalidArgument("displacement: t0 > t1");
    return trace.at(t1) - trace.at(t0);
}

EyeTrace load_trace(std::istream& in, double saccade_threshold) {
    std::vector<double> times;
    std::vector<Vec2> pos;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto first = line.find_first_not_of(" \t");
        if (times.empty() && std::isalpha(static_cast<unsigned char>(line[first]))) {
            std::string compact;
            for (char c : line)
                if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
            if (compact != "t,x,y") throw ParseError("unexpected header '" + line + "'", line_no);
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        double vals[3];
        int n = 0;
        while (std::getline(ss, cell, ',')) {
            if (n >= 3) throw ParseError("expected 3 columns", line_no);
            std::size_t used = 0;
            try {
                vals[n] = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError("non-numeric field '" + cell + "'", line_no);
            }
            if (cell.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(vals[n]))
                throw ParseError("malformed field '" + cell + "'", line_no);
            ++n;
        }
        if (n != 3) throw ParseError("expected 3 columns", line_no);
        if (!times.empty() && !(vals[0] > times.back()))
            throw ValidationError("t", "timestamps must be strictly increasing (line " + std::to_string(line_no) + ")");
        times.push_back(vals[0]);
        pos.push_back({vals[1], vals[2]});
    }
    if (pos.size() < 2) throw ValidationError("", "trace needs at least 2 samples");
    const Vec2 origin = pos.front();
    for (auto& p : pos) p = p - origin;
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    try {
        return EyeTrace(dt, std::move(pos), saccade_threshold);
    } catch (const InvalidArgument& e) {
        throw ValidationError("", e.what());
    }
}

EyeTrace load_trace(const std::filesystem::path& path, double saccade_threshold) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return load_trace(in, saccade_threshold);
}

void save_trace(const EyeTrace& trace, std::ostream& out) {
    out << "t,x,y\n" << std::fixed << std::setprecision(9);
    for (std::size_t i = 0; i < trace.size(); ++i)
        out << static_cast<double>(i) * trace.sample_interval() << ',' << trace[i].x << ',' << trace[i].y << '\n';
}

void save_trace(const EyeTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    save_trace(trace, out);
}

}  // namespace vstab
