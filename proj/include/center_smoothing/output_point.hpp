#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

namespace csmooth {

struct RealVector {
    std::vector<double> values;

    friend bool operator==(const RealVector&, const RealVector&) = default;
};

/// Axis-aligned box. A default-constructed Box is Empty (no detection).
class Box {
public:
    Box() = default;
    /// Throws DomainError unless x_min <= x_max and y_min <= y_max (all finite).
    Box(double x_min, double y_min, double x_max, double y_max);

    static Box empty() { return Box{}; }

    bool is_empty() const noexcept { return empty_; }
    double x_min() const noexcept { return x_min_; }
    double y_min() const noexcept { return y_min_; }
    double x_max() const noexcept { return x_max_; }
    double y_max() const noexcept { return y_max_; }
    double area() const noexcept;

    friend bool operator==(const Box&, const Box&) = default;

private:
    bool empty_ = true;
    double x_min_ = 0.0;
    double y_min_ = 0.0;
    double x_max_ = 0.0;
    double y_max_ = 0.0;
};

/// Finite set of discrete ids, kept sorted and unique.
class FiniteSet {
public:
    FiniteSet() = default;
    explicit FiniteSet(std::vector<std::int64_t> elements);

    const std::vector<std::int64_t>& elements() const noexcept { return elements_; }
    std::size_t size() const noexcept { return elements_.size(); }

    friend bool operator==(const FiniteSet&, const FiniteSet&) = default;

private:
    std::vector<std::int64_t> elements_;
};

/// Image stored row-major as (row, column, channel), pixels in [0, 1].
class ImageGrid {
public:
    ImageGrid() = default;
    /// Throws DomainError if pixels.size() != height * width * channels or a
    /// pixel lies outside [0, 1].
    ImageGrid(std::size_t height, std::size_t width, std::size_t channels,
              std::vector<double> pixels);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    const std::vector<double>& pixels() const noexcept { return pixels_; }

    double at(std::size_t row, std::size_t col, std::size_t channel) const noexcept {
        return pixels_[(row * width_ + col) * channels_ + channel];
    }

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> pixels_;
};

struct Label {
    std::int64_t id = 0;

    friend bool operator==(const Label&, const Label&) = default;
};

using OutputPoint = std::variant<RealVector, Box, FiniteSet, ImageGrid, Label>;

enum class OutputKind { vector, box, set, image, label };

OutputKind kind_of(const OutputPoint& point) noexcept;
std::string_view to_string(OutputKind kind) noexcept;

/// Real-valued view of a point: vector values, image pixels, or box corners.
/// Throws VariantMismatch for sets, labels, and Empty boxes.
std::vector<double> flatten(const OutputPoint& point);

}  // namespace csmooth
