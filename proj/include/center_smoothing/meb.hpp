#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "center_smoothing/metrics.hpp"
#include "center_smoothing/output_point.hpp"

namespace csmooth {

/// A ball B(center, radius) covering at least ⌈n/2⌉ of the n points it was
/// computed over.
struct BallEstimate {
    OutputPoint center;
    double radius = 0.0;
    /// Index of the center in the sample list (or candidate list).
    std::size_t center_index = 0;
    /// Fraction of the points within `radius` of `center`.
    double covered_fraction = 0.0;
};

/// Number of points a half-covering ball must contain: ⌈n/2⌉.
constexpr std::size_t half_cover(std::size_t n) noexcept { return (n + 1) / 2; }

/// Factor-2γ approximation of the smallest ball covering half the samples:
/// the sample whose ⌈n/2⌉-th smallest distance to all samples (itself
/// included, at distance 0) is minimal. Ties go to the lowest index.
/// O(n²) distance evaluations, spread over `workers` threads.
BallEstimate min_median_center(std::span<const OutputPoint> samples, const Metric& metric,
                               unsigned workers = 1);

/// Exhaustive optimum over a discrete candidate set: the smallest radius r such
/// that some candidate's r-ball holds at least ⌈n/2⌉ samples. Searches the
/// sorted candidate–sample distances by counting coverage, which keeps it
/// independent of the order-statistic route above. Meant for small inputs.
BallEstimate exact_meb_discrete(std::span<const OutputPoint> samples,
                                std::span<const OutputPoint> candidates, const Metric& metric);

/// Produces successive batches of a sample stream; std::nullopt ends it.
using BatchSource = std::function<std::optional<std::vector<OutputPoint>>()>;

/// Streaming variant: accumulates candidate-to-sample distances one batch at a
/// time and returns the candidate with the smallest ⌈n/2⌉-th order statistic
/// over the n streamed samples. Only one batch and the candidates are held.
BallEstimate candidate_center_select(std::span<const OutputPoint> candidates, const BatchSource& stream,
                                     const Metric& metric);

}  // namespace csmooth
