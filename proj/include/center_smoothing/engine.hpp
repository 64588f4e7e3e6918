#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "center_smoothing/base_functions.hpp"
#include "center_smoothing/meb.hpp"
#include "center_smoothing/metrics.hpp"
#include "center_smoothing/stat_bounds.hpp"

namespace csmooth {

enum class SmoothingMode { standard, high_dimensional };

/// Independent RNG streams derived from the master seed. Each phase of the
/// procedure draws from its own stream so its samples are fresh.
namespace streams {
inline constexpr std::uint64_t smoothing = 0;
inline constexpr std::uint64_t fresh = 1;
inline constexpr std::uint64_t certification = 2;
inline constexpr std::uint64_t candidates = 3;
inline constexpr std::uint64_t validation_directions = 4;
inline constexpr std::uint64_t validation_seeds = 5;
}  // namespace streams

struct SmoothingConfig {
    double sigma = 0.25;
    std::uint64_t n = 10'000;
    std::uint64_t m = 1'000'000;
    MassMargin delta{0.05};
    double alpha1 = 0.005;
    double alpha2 = 0.005;
    std::uint64_t n0 = 30;
    std::uint64_t batch_size = 1'000;
    std::uint64_t seed = 0;
    SmoothingMode mode = SmoothingMode::standard;
    /// Worker threads for evaluation and distance computation. Results do not
    /// depend on it.
    unsigned workers = 1;

    /// Throws DomainError when a field is out of range.
    void validate() const;
};

/// Which (seed, stream) pairs a smoothing run consumed.
struct SeedTrace {
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> streams;
};

struct SmoothResult {
    OutputPoint center;
    /// Radius of the half-covering ball found around `center`.
    double approx_radius = 0.0;
    std::size_t center_index = 0;
    /// Hoeffding margin; can exceed 1/2 for small n.
    double delta1 = 0.0;
    /// 1/2 - p_delta1; negative when the fresh batch is well covered.
    double delta2 = 0.0;
    /// Fraction of the fresh batch inside the ball.
    double rho = 0.0;
    /// rho - delta1.
    double p_delta1 = 0.0;
    bool abstained = false;
    SeedTrace seed_trace;
    /// Largest number of output points held at once during the run.
    std::size_t peak_resident_outputs = 0;
};

struct Certificate {
    double eps1 = 0.0;
    /// Certified output radius; +infinity when abstained.
    double eps2 = std::numeric_limits<double>::infinity();
    double r_hat = 0.0;
    double p = 0.0;
    double q = 0.0;
    double gamma = 1.0;
    double beta = 2.0;
    double alpha = 0.0;
    bool abstained = false;
    SmoothResult smoothed;
    SmoothingConfig config;
};

struct ValidationReport {
    std::size_t trials = 0;
    std::size_t violations = 0;
    /// Probes whose smoothed output abstained; not violations.
    std::size_t abstentions = 0;
    double max_observed_distance = 0.0;
    double eps2 = 0.0;
};

/// Center smoothing with the O(n²) min-median center (standard mode).
SmoothResult smooth(const BaseFunction& f, const InputPoint& x, const Metric& metric,
                    const SmoothingConfig& cfg);

/// Center smoothing over n0 candidate centers and a batched sample stream
/// (high-dimensional mode). At most n0 + batch_size outputs are held at once.
SmoothResult smooth_hd(const BaseFunction& f, const InputPoint& x, const Metric& metric,
                       const SmoothingConfig& cfg);

/// Runs smooth or smooth_hd according to cfg.mode.
SmoothResult smooth_any(const BaseFunction& f, const InputPoint& x, const Metric& metric,
                        const SmoothingConfig& cfg);

/// Certified output radius factor: 1 + beta with beta = 2 for gamma = 1 in
/// standard mode, gamma (1 + 2 gamma) otherwise.
double certified_radius_factor(double gamma, SmoothingMode mode) noexcept;

/// Smooths at x and certifies the output radius for input perturbations of
/// ℓ₂ size eps1. Abstention yields a certificate with abstained = true and
/// eps2 = +infinity. Throws CertificationInfeasible when q >= 1; that check
/// runs before smoothing.
Certificate certify(const BaseFunction& f, const InputPoint& x, double eps1, const Metric& metric,
                    const SmoothingConfig& cfg);

/// d(f(x), f̂(x)). Throws AbstainedError for abstained results.
double smoothing_error(const BaseFunction& f, const InputPoint& x, const SmoothResult& result,
                       const Metric& metric);

/// Monte-Carlo falsification of a certificate: probes x' on the eps1 sphere,
/// then along the direction with the largest observed output distance, and
/// counts d(f̂(x), f̂(x')) > eps2. About one probe in five is a line-search probe.
ValidationReport validate_certificate(const BaseFunction& f, const InputPoint& x, const Certificate& cert,
                                      const Metric& metric, std::size_t trials,
                                      std::uint64_t perturbation_seed);

/// (max‖f‖ + min‖f‖) erf(eps1 / (2√2 sigma)): bound on the ℓ₂ change of the
/// expectation-smoothed function.
double baseline_l2_bound(double f_max_norm, double f_min_norm, double eps1, double sigma);

}  // namespace csmooth
