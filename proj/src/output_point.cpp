#include "center_smoothing/output_point.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "center_smoothing/errors.hpp"

namespace csmooth {

Box::Box(double x_min, double y_min, double x_max, double y_max)
    : empty_(false), x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
    const bool finite = std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
                        std::isfinite(y_max);
    if (!finite || x_min > x_max || y_min > y_max) {
        throw DomainError("box corners must be finite with min <= max");
    }
}

double Box::area() const noexcept {
    return empty_ ? 0.0 : (x_max_ - x_min_) * (y_max_ - y_min_);
}

FiniteSet::FiniteSet(std::vector<std::int64_t> elements) : elements_(std::move(elements)) {
    std::sort(elements_.begin(), elements_.end());
    elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
}

ImageGrid::ImageGrid(std::size_t height, std::size_t width, std::size_t channels,
                     std::vector<double> pixels)
    : height_(height), width_(width), channels_(channels), pixels_(std::move(pixels)) {
    if (pixels_.size() != height * width * channels) {
        throw DomainError("image pixel count " + std::to_string(pixels_.size()) +
                          " does not match " + std::to_string(height) + "x" +
                          std::to_string(width) + "x" + std::to_string(channels));
    }
    for (double v : pixels_) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DomainError("image pixel outside [0, 1]");
        }
    }
}

OutputKind kind_of(const OutputPoint& point) noexcept {
    return static_cast<OutputKind>(point.index());
}

std::string_view to_string(OutputKind kind) noexcept {
    switch (kind) {
        case OutputKind::vector: return "vector";
        case OutputKind::box: return "box";
        case OutputKind::set: return "set";
        case OutputKind::image: return "image";
        case OutputKind::label: return "label";
    }
    return "unknown";
}

std::vector<double> flatten(const OutputPoint& point) {
    if (const auto* v = std::get_if<RealVector>(&point)) {
        return v->values;
    }
    if (const auto* img = std::get_if<ImageGrid>(&point)) {
        return img->pixels();
    }
    if (const auto* box = std::get_if<Box>(&point); box && !box->is_empty()) {
        return {box->x_min(), box->y_min(), box->x_max(), box->y_max()};
    }
    throw VariantMismatch("cannot flatten a " + std::string(to_string(kind_of(point))) +
                          " output into real values");
}

}  // namespace csmooth
