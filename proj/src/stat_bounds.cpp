#include "center_smoothing/stat_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "center_smoothing/errors.hpp"

namespace csmooth {

namespace {

void require_positive_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw DomainError("sigma must be positive and finite, got " + std::to_string(sigma));
    }
}

// Lower-tail quantile for 0 < p <= 1/2. Acklam's rational approximation
// (relative error ~1e-9) followed by two Halley steps on the forward CDF.
double lower_tail_quantile(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double t = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
            ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
    } else {
        const double t = p - 0.5;
        const double r = t * t;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }

    const double sqrt_2pi = std::sqrt(2.0 * std::numbers::pi);
    for (int step = 0; step < 2; ++step) {
        const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
        const double u = e * sqrt_2pi * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

}  // namespace

Probability::Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw DomainError("probability outside [0, 1]: " + std::to_string(value));
    }
}

MassMargin::MassMargin(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 0.5)) {
        throw DomainError("mass margin outside [0, 1/2]: " + std::to_string(value));
    }
}

ConfidenceBudget::ConfidenceBudget(double alpha1, double alpha2)
    : alpha1_(alpha1), alpha2_(alpha2) {
    if (!(alpha1 > 0.0 && alpha1 < 1.0) || !(alpha2 > 0.0 && alpha2 < 1.0)) {
        throw DomainError("alpha1 and alpha2 must lie in (0, 1)");
    }
    if (!(alpha1 + alpha2 < 1.0)) {
        throw DomainError("alpha1 + alpha2 must be below 1");
    }
}

Probability std_normal_cdf(double z) {
    if (!std::isfinite(z)) {
        throw DomainError("std_normal_cdf: non-finite argument");
    }
    return Probability(0.5 * std::erfc(-z / std::numbers::sqrt2));
}

double std_normal_cdf_inv(Probability p) {
    const double v = p.value();
    if (v == 0.0 || v == 1.0) {
        throw UnboundedQuantileError("std_normal_cdf_inv: quantile at p = " + std::to_string(v) +
                                     " is unbounded");
    }
    if (v == 0.5) {
        return 0.0;
    }
    return v < 0.5 ? lower_tail_quantile(v) : -lower_tail_quantile(1.0 - v);
}

Probability cohen_lower_bound(Probability p, double eps, double sigma) {
    require_positive_sigma(sigma);
    if (!(eps >= 0.0) || !std::isfinite(eps)) {
        throw DomainError("cohen_lower_bound: eps must be finite and non-negative");
    }
    if (eps == 0.0) {
        return p;
    }
    return std_normal_cdf(std_normal_cdf_inv(p) - eps / sigma);
}

Probability required_mass(MassMargin delta, double eps1, double sigma) {
    require_positive_sigma(sigma);
    if (!(eps1 >= 0.0) || !std::isfinite(eps1)) {
        throw DomainError("required_mass: eps1 must be finite and non-negative");
    }
    if (!(delta.value() < 0.5)) {
        throw DomainError("required_mass: delta must be below 1/2");
    }
    const Probability base(0.5 + delta.value());
    if (eps1 == 0.0) {
        return base;
    }
    return std_normal_cdf(std_normal_cdf_inv(base) + eps1 / sigma);
}

Probability quantile_level(Probability p, std::uint64_t m, double alpha2) {
    if (m == 0) {
        throw DomainError("quantile_level: m must be at least 1");
    }
    if (!(alpha2 > 0.0 && alpha2 < 1.0)) {
        throw DomainError("quantile_level: alpha2 must lie in (0, 1)");
    }
    const double q =
        p.value() + std::sqrt(std::log(1.0 / alpha2) / (2.0 * static_cast<double>(m)));
    if (!(q < 1.0)) {
        throw CertificationInfeasible(p.value(), m, alpha2, q);
    }
    return Probability(q);
}

double hoeffding_delta(std::uint64_t n, double alpha1) {
    if (n == 0) {
        throw DomainError("hoeffding_delta: n must be at least 1");
    }
    if (!(alpha1 > 0.0 && alpha1 < 1.0)) {
        throw DomainError("hoeffding_delta: alpha1 must lie in (0, 1)");
    }
    return std::sqrt(std::log(2.0 / alpha1) / (2.0 * static_cast<double>(n)));
}

double empirical_quantile(std::span<const double> values, Probability q) {
    if (values.empty()) {
        throw DomainError("empirical_quantile: empty input");
    }
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        throw DomainError("empirical_quantile: non-finite value");
    }
    const auto m = values.size();
    auto rank = static_cast<std::size_t>(std::ceil(q.value() * static_cast<double>(m)));
    rank = std::clamp<std::size_t>(rank, 1, m);

    std::vector<double> scratch(values.begin(), values.end());
    auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(scratch.begin(), nth, scratch.end());
    return *nth;
}

double lower_median(std::span<const double> values) {
    return empirical_quantile(values, Probability(0.5));
}

CertificationInfeasible::CertificationInfeasible(double p, std::uint64_t m, double alpha2, double q)
    : Error("certification infeasible: quantile level q = " + std::to_string(q) +
            " >= 1 for p = " + std::to_string(p) + ", m = " + std::to_string(m) +
            ", alpha2 = " + std::to_string(alpha2)),
      p_(p),
      m_(m),
      alpha2_(alpha2),
      q_(q) {}

}  // namespace csmooth
