#pragma once

#include <cstdint>
#include <span>

namespace csmooth {

/// A probability in [0, 1]. Construction outside that range throws DomainError.
class Probability {
public:
    constexpr Probability() = default;
    explicit Probability(double value);

    constexpr double value() const noexcept { return value_; }
    friend constexpr auto operator<=>(Probability, Probability) = default;

private:
    double value_ = 0.0;
};

/// A mass margin in [0, 1/2] (the configured Δ).
class MassMargin {
public:
    constexpr MassMargin() = default;
    explicit MassMargin(double value);

    constexpr double value() const noexcept { return value_; }
    friend constexpr auto operator<=>(MassMargin, MassMargin) = default;

private:
    double value_ = 0.0;
};

/// Split of the failure probability between smoothing (alpha1) and
/// certification (alpha2). Requires both in (0, 1) and alpha1 + alpha2 < 1.
class ConfidenceBudget {
public:
    ConfidenceBudget(double alpha1, double alpha2);

    double alpha1() const noexcept { return alpha1_; }
    double alpha2() const noexcept { return alpha2_; }
    double total() const noexcept { return alpha1_ + alpha2_; }

private:
    double alpha1_;
    double alpha2_;
};

/// Standard normal CDF. Throws DomainError for non-finite z.
Probability std_normal_cdf(double z);

/// Standard normal quantile function.
/// Throws UnboundedQuantileError for p in {0, 1}.
double std_normal_cdf_inv(Probability p);

/// Lower bound on the probability of an event under a shifted Gaussian:
/// Φ(Φ⁻¹(p) − eps/sigma). Requires 0 < p < 1.
Probability cohen_lower_bound(Probability p, double eps, double sigma);

/// Mass a ball must enclose at x so that it keeps at least 1/2 + delta mass
/// under any ℓ₂ shift of size eps1: Φ(Φ⁻¹(1/2 + delta) + eps1/sigma).
Probability required_mass(MassMargin delta, double eps1, double sigma);

/// DKW-corrected quantile level p + sqrt(ln(1/alpha2) / 2m).
/// Throws CertificationInfeasible when the result is ≥ 1.
Probability quantile_level(Probability p, std::uint64_t m, double alpha2);

/// Hoeffding margin sqrt(ln(2/alpha1) / 2n). Not clamped: small n gives
/// values above 1/2, which is what forces abstention.
double hoeffding_delta(std::uint64_t n, double alpha1);

/// The ⌈q·m⌉-th order statistic (1-indexed, at least the first) of `values`.
/// Throws DomainError on empty or non-finite input.
double empirical_quantile(std::span<const double> values, Probability q);

/// Lower median: the ⌈k/2⌉-th order statistic.
double lower_median(std::span<const double> values);

}  // namespace csmooth
