#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace vstab {

/// Integer shift on the element grid. Positive dx moves content toward larger x.
struct Translation {
    int dx = 0;
    int dy = 0;

    friend constexpr bool operator==(Translation, Translation) = default;
    friend constexpr Translation operator+(Translation a, Translation b) { return {a.dx + b.dx, a.dy + b.dy}; }
    friend constexpr Translation operator-(Translation a, Translation b) { return {a.dx - b.dx, a.dy - b.dy}; }
    constexpr Translation operator-() const { return {-dx, -dy}; }

    constexpr int norm_sq() const { return dx * dx + dy * dy; }
    double norm() const { return std::sqrt(static_cast<double>(norm_sq())); }
    constexpr bool is_zero() const { return dx == 0 && dy == 0; }

    /// Direction from the +x axis in [0, 360). The zero vector reports 0.
    double angle_deg() const;
};

/// Canonical candidate order shared by every matcher: smaller |t| first, then smaller angle.
bool canonical_less(Translation a, Translation b);

/// All translations with |t| <= radius, in canonical order.
std::vector<Translation> search_disk(int radius);

/// Sum of element products. Bounded by the number of overlapping elements.
struct MatchScore {
    double value = 0.0;
    friend auto operator<=>(MatchScore, MatchScore) = default;
};

/// Row-major 2D activation grid. Values are finite and lie in [0, 1].
class SpatialArray {
public:
    SpatialArray() = default;
    SpatialArray(int width, int height, double pitch_arcmin = 1.0);
    SpatialArray(int width, int height, std::vector<double> values, double pitch_arcmin = 1.0);

    static SpatialArray filled(int width, int height, double value, double pitch_arcmin = 1.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    double pitch() const noexcept { return pitch_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    double operator()(int x, int y) const { return values_[index(x, y)]; }
    /// Out-of-range reads return 0.
    double at_or_zero(int x, int y) const noexcept { return contains(x, y) ? values_[index(x, y)] : 0.0; }
    void set(int x, int y, double v);

    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> row(int y) const { return {values_.data() + index(0, y), static_cast<std::size_t>(width_)}; }

    bool same_shape(const SpatialArray& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }
    bool all_zero() const noexcept;
    std::size_t count_nonzero() const noexcept;
    double sum() const noexcept;

    friend bool operator==(const SpatialArray&, const SpatialArray&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    double pitch_ = 1.0;
    std::vector<double> values_;
};

// result(x, y) = a(x - t.dx, y - t.dy), zero where the source is out of range.
SpatialArray shift(const SpatialArray& a, Translation t);

// Throws InvalidArgument on shape mismatch.
MatchScore dot(const SpatialArray& a, const SpatialArray& b);

// source where mask is 1, canvas where mask is 0. Masks must be binary.
SpatialArray transfer(const SpatialArray& canvas, const SpatialArray& source, const SpatialArray& mask);

// 1 where mask is unset, 0 where it is set.
SpatialArray complement_mask(const SpatialArray& mask);

// Element-wise product; used to cut a patch out of an array by a mask.
SpatialArray multiply(const SpatialArray& a, const SpatialArray& b);

// Number of elements whose values differ.
std::size_t count_differences(const SpatialArray& a, const SpatialArray& b);

// Serialization. PGM is binary P5 with maxval 255 (lossy); CSV is lossless (17 significant digits).
void write_pgm(const SpatialArray& a, const std::filesystem::path& path);
SpatialArray read_pgm(const std::filesystem::path& path, double pitch_arcmin = 1.0);
void write_csv(const SpatialArray& a, std::ostream& out);
void write_csv(const SpatialArray& a, const std::filesystem::path& path);
SpatialArray read_csv(std::istream& in, double pitch_arcmin = 1.0);
SpatialArray read_csv(const std::filesystem::path& path, double pitch_arcmin = 1.0);

}  // namespace vstab
