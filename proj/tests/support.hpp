#pragma once

// Test-only helpers: a high-precision normal oracle and small random
// generators for the property suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "center_smoothing/output_point.hpp"

namespace oracle {

using big = boost::multiprecision::cpp_bin_float_50;

inline big phi_big(const big& z) { return big(0.5) * boost::math::erfc(big(-z / boost::multiprecision::sqrt(big(2)))); }

inline double phi(double z) { return static_cast<double>(phi_big(big(z))); }

// Inverse CDF by bisection on the 50-digit CDF.
inline double phi_inv(double p) {
    big lo(-40), hi(40), target(p);
    for (int i = 0; i < 200; ++i) {
        big mid = (lo + hi) / 2;
        if (phi_big(mid) < target) lo = mid; else hi = mid;
    }
    return static_cast<double>((lo + hi) / 2);
}

}  // namespace oracle

namespace gen {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::vector<double> vec(Rng& rng, std::size_t k, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(k);
    for (auto& x : v) x = uniform(rng, lo, hi);
    return v;
}

inline csmooth::RealVector real_vector(Rng& rng, std::size_t k) { return {vec(rng, k)}; }

inline csmooth::RealVector nonzero_vector(Rng& rng, std::size_t k) {
    for (;;) {
        auto v = vec(rng, k);
        double s = 0;
        for (double x : v) s += x * x;
        if (s > 1e-6) return {v};
    }
}

// Empty one time in ten.
inline csmooth::Box box(Rng& rng) {
    if (std::uniform_int_distribution<int>(0, 9)(rng) == 0) return csmooth::Box::empty();
    double x0 = uniform(rng, 0, 1), y0 = uniform(rng, 0, 1);
    return {x0, y0, x0 + uniform(rng, 0.05, 1), y0 + uniform(rng, 0.05, 1)};
}

inline csmooth::FiniteSet set(Rng& rng, std::int64_t universe = 12) {
    std::vector<std::int64_t> e;
    for (std::int64_t i = 0; i < universe; ++i)
        if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) e.push_back(i);
    return csmooth::FiniteSet(e);
}

inline csmooth::ImageGrid image(Rng& rng, std::size_t h, std::size_t w, std::size_t c = 1) {
    return {h, w, c, vec(rng, h * w * c, 0.0, 1.0)};
}

}  // namespace gen
