#include "vstab/spatial_array.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

#include "vstab/error.hpp"

namespace vstab {

double Translation::angle_deg() const {
    if (is_zero()) return 0.0;
    double a = std::atan2(static_cast<double>(dy), static_cast<double>(dx)) * 180.0 / std::numbers::pi;
    if (a < 0.0) a += 360.0;
    return a;
}

bool canonical_less(Translation a, Translation b) {
    if (a.norm_sq() != b.norm_sq()) return a.norm_sq() < b.norm_sq();
    const double aa = a.angle_deg();
    const double ab = b.angle_deg();
    if (aa != ab) return aa < ab;
    // Distinct vectors with equal norm and angle cannot exist; keep the order strict anyway.
    return a.dx != b.dx ? a.dx < b.dx : a.dy < b.dy;
}

std::vector<Translation> search_disk(int radius) {
    if (radius < 0) throw InvalidArgument("search radius must be >= 0");
    std::vector<Translation> out;
    const int r2 = radius * radius;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= r2) out.push_back({dx, dy});
    std::sort(out.begin(), out.end(), canonical_less);
    return out;
}

namespace {

void check_value(double v) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw InvalidArgument("activation must be finite and in [0,1], got " + std::to_string(v));
}

void check_shape(const SpatialArray& a, const SpatialArray& b, const char* op) {
    if (!a.same_shape(b))
        throw InvalidArgument(std::string(op) + ": dimension mismatch " + std::to_string(a.width()) + "x" +
                              std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                              std::to_string(b.height()));
}

}  // namespace

SpatialArray::SpatialArray(int width, int height, double pitch_arcmin)
    : width_(width), height_(height), pitch_(pitch_arcmin) {
    if (width < 1 || height < 1) throw InvalidArgument("array dimensions must be >= 1");
    if (!(pitch_arcmin > 0.0) || !std::isfinite(pitch_arcmin)) throw InvalidArgument("element pitch must be > 0");
    values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0);
}

SpatialArray::SpatialArray(int width, int height, std::vector<double> values, double pitch_arcmin)
    : SpatialArray(width, height, pitch_arcmin) {
    if (values.size() != values_.size())
        throw InvalidArgument("value count " + std::to_string(values.size()) + " does not match " +
                              std::to_string(width) + "x" + std::to_string(height));
    for (double v : values) check_value(v);
    values_ = std::move(values);
}

SpatialArray SpatialArray::filled(int width, int height, double value, double pitch_arcmin) {
    check_value(value);
    SpatialArray a(width, height, pitch_arcmin);
    std::fill(a.values_.begin(), a.values_.end(), value);
    return a;
}

void SpatialArray::set(int x, int y, double v) {
    if (!contains(x, y)) throw InvalidArgument("set: element out of range");
    check_value(v);
    values_[index(x, y)] = v;
}

bool SpatialArray::all_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

std::size_t SpatialArray::count_nonzero() const noexcept {
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return v != 0.0; }));
}

double SpatialArray::sum() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
}

SpatialArray shift(const SpatialArray& a, Translation t) {
    SpatialArray out(a.width(), a.height(), a.pitch());
    std::vector<double> values(a.size(), 0.0);
    const int w = a.width();
    const int x_begin = std::max(0, t.dx);
    const int x_end = std::min(w, w + t.dx);
    if (x_begin < x_end) {
        for (int y = 0; y < a.height(); ++y) {
            const int sy = y - t.dy;
            if (sy < 0 || sy >= a.height()) continue;
            const auto src = a.row(sy);
            std::copy(src.begin() + (x_begin - t.dx), src.begin() + (x_end - t.dx),
                      values.begin() + static_cast<std::ptrdiff_t>(y) * w + x_begin);
        }
    }
    return SpatialArray(a.width(), a.height(), std::move(values), a.pitch());
}

MatchScore dot(const SpatialArray& a, const SpatialArray& b) {
    check_shape(a, b, "dot");
    const auto va = a.values();
    const auto vb = b.values();
    double s = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
    return {s};
}

SpatialArray transfer(const SpatialArray& canvas, const SpatialArray& source, const SpatialArray& mask) {
    check_shape(canvas, source, "transfer");
    check_shape(canvas, mask, "transfer");
    const auto c = canvas.values();
    const auto s = source.values();
    const auto m = mask.values();
    std::vector<double> out(c.begin(), c.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (m[i] == 1.0)
            out[i] = s[i];
        else if (m[i] != 0.0)
            throw InvalidArgument("transfer: mask must be binary");
    }
    return SpatialArray(canvas.width(), canvas.height(), std::move(out), canvas.pitch());
}

SpatialArray complement_mask(const SpatialArray& mask) {
    std::vector<double> out(mask.size());
    const auto m = mask.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = m[i] == 0.0 ? 1.0 : 0.0;
    return SpatialArray(mask.width(), mask.height(), std::move(out), mask.pitch());
}

SpatialArray multiply(const SpatialArray& a, const SpatialArray& b) {
    check_shape(a, b, "multiply");
    std::vector<double> out(a.size());
    const auto va = a.values();
    const auto vb = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
    return SpatialArray(a.width(), a.height(), std::move(out), a.pitch());
}

std::size_t count_differences(const SpatialArray& a, const SpatialArray& b) {
    check_shape(a, b, "count_differences");
    const auto va = a.values();
    const auto vb = b.values();
    std::size_t n = 0;
    for (std::size_t i = 0; i < va.size(); ++i) n += va[i] != vb[i];
    return n;
}

void write_pgm(const SpatialArray& a, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << a.width() << ' ' << a.height() << "\n255\n";
    for (double v : a.values()) out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

// PGM header tokens, skipping '#' comments.
std::string next_pgm_token(std::istream& in) {
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string ignored;
            std::getline(in, ignored);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

}  // namespace

SpatialArray read_pgm(const std::filesystem::path& path, double pitch_arcmin) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (next_pgm_token(in) != "P5") throw ParseError("not a binary PGM (P5): " + path.string(), 0);
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_pgm_token(in));
        h = std::stoi(next_pgm_token(in));
        maxval = std::stoi(next_pgm_token(in));
    } catch (const std::exception&) {
        throw ParseError("bad PGM header: " + path.string(), 0);
    }
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255) throw ParseError("unsupported PGM header: " + path.string(), 0);
    std::vector<double> values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (double& v : values) {
        char c;
        if (!in.get(c)) throw ParseError("truncated PGM data: " + path.string(), 0);
        v = static_cast<double>(static_cast<unsigned char>(c)) / maxval;
    }
    return SpatialArray(w, h, std::move(values), pitch_arcmin);
}

void write_csv(const SpatialArray& a, std::ostream& out) {
    out << std::setprecision(17);
    for (int y = 0; y < a.height(); ++y) {
        const auto r = a.row(y);
        for (int x = 0; x < a.width(); ++x) {
            if (x) out << ',';
            out << r[static_cast<std::size_t>(x)];
        }
        out << '\n';
    }
}

void write_csv(const SpatialArray& a, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_csv(a, out);
}

SpatialArray read_csv(std::istream& in, double pitch_arcmin) {
    std::vector<double> values;
    int width = -1;
    int height = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int count = 0;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError("non-numeric cell '" + cell + "'", line_no);
            }
            if (cell.find_first_not_of(" \t", used) != std::string::npos)
                throw ParseError("trailing characters in cell '" + cell + "'", line_no);
            values.push_back(v);
            ++count;
        }
        if (width < 0) width = count;
        if (count != width) throw ParseError("ragged row", line_no);
        ++height;
    }
    if (height == 0) throw ParseError("empty grid", line_no);
    return SpatialArray(width, height, std::move(values), pitch_arcmin);
}

SpatialArray read_csv(const std::filesystem::path& path, double pitch_arcmin) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_csv(in, pitch_arcmin);
}

}  // namespace vstab
