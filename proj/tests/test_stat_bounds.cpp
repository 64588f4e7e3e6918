#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "center_smoothing/errors.hpp"
#include "center_smoothing/stat_bounds.hpp"
#include "support.hpp"

using namespace csmooth;

TEST_CASE("strong types reject out-of-range values") {
    CHECK_THROWS_AS(Probability(-0.1), DomainError);
    CHECK_THROWS_AS(Probability(1.1), DomainError);
    CHECK_THROWS_AS(Probability(NAN), DomainError);
    CHECK_THROWS_AS(MassMargin(0.6), DomainError);
    CHECK_THROWS_AS(ConfidenceBudget(0.6, 0.5), DomainError);
    CHECK_THROWS_AS(ConfidenceBudget(0.0, 0.5), DomainError);
    CHECK(ConfidenceBudget(0.005, 0.005).total() == doctest::Approx(0.01));
}

TEST_CASE("std_normal_cdf matches frozen and high-precision values") {
    CHECK(std_normal_cdf(0.0).value() == 0.5);
    // 50-digit value, frozen
    CHECK(std::abs(std_normal_cdf(1.0).value() - 0.84134474606854294858) < 1e-15);
    CHECK(std::abs(std_normal_cdf(1.0).value() - oracle::phi(1.0)) < 1e-12);
    for (double z : {-8.0, -3.3, -1.2, -0.1, 0.4, 2.2, 5.0}) {
        CHECK(std::abs(std_normal_cdf(z).value() - oracle::phi(z)) < 1e-12);
        CHECK(std::abs(std_normal_cdf(z).value() + std_normal_cdf(-z).value() - 1.0) < 1e-14);
    }
    CHECK_THROWS_AS(std_normal_cdf(INFINITY), DomainError);
}

TEST_CASE("std_normal_cdf_inv") {
    CHECK(std_normal_cdf_inv(Probability(0.5)) == 0.0);
    double z = std_normal_cdf_inv(Probability(0.975));
    CHECK(std::abs(z - 1.95996398454005423552) < 1e-12);
    CHECK(std::abs(std_normal_cdf(z).value() - 0.975) < 1e-10);
    for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.49, 0.7, 0.999, 1 - 1e-9})
        CHECK(std::abs(std_normal_cdf_inv(Probability(p)) - oracle::phi_inv(p)) < 1e-9);
    // 1 - p is exact for these
    for (double p : {0.5 - 0.25, 0.125, 0.01, 0.2, 0.49, 0.999, 0.9375})
        CHECK(std::abs(std_normal_cdf_inv(Probability(p)) + std_normal_cdf_inv(Probability(1 - p))) < 1e-10);
    CHECK_THROWS_AS(std_normal_cdf_inv(Probability(0.0)), UnboundedQuantileError);
    CHECK_THROWS_AS(std_normal_cdf_inv(Probability(1.0)), UnboundedQuantileError);
}

TEST_CASE("cohen_lower_bound") {
    CHECK(cohen_lower_bound(Probability(0.9), 0.0, 1.0).value() == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(std::abs(cohen_lower_bound(Probability(0.9), 1.0, 1.0).value() - 0.61085630835463903096) < 1e-12);
    CHECK(std::abs(cohen_lower_bound(Probability(0.9), 1.0, 1.0).value() -
                   oracle::phi(oracle::phi_inv(0.9) - 1.0)) < 1e-12);
    double v = cohen_lower_bound(Probability(0.5), 0.5, 0.5).value();
    CHECK(std::abs(v - 0.15865525393145705141) < 1e-12);
    CHECK(v < 0.5);
    CHECK_THROWS_AS(cohen_lower_bound(Probability(0.5), 0.5, 0.0), DomainError);
}

TEST_CASE("required_mass") {
    CHECK(required_mass(MassMargin(0.05), 0.0, 0.5).value() == doctest::Approx(0.55).epsilon(1e-13));
    double a = required_mass(MassMargin(0.05), 0.5, 0.5).value();
    double b = required_mass(MassMargin(0.05), 1.0, 0.5).value();
    CHECK(std::abs(a - 0.86984555469207865167) < 1e-12);
    CHECK(std::abs(b - 0.98323426621260633242) < 1e-12);
    CHECK(a > 0.55);
    CHECK(b > a);
    CHECK_THROWS_AS(required_mass(MassMargin(0.05), 0.5, -1.0), DomainError);
}

TEST_CASE("quantile_level") {
    double q = quantile_level(Probability(0.9), 1'000'000, 0.005).value();
    CHECK(std::abs(q - 0.90162762363071872926) < 1e-14);
    CHECK_THROWS_AS(quantile_level(Probability(0.999), 100, 0.005), CertificationInfeasible);
    try {
        (void)quantile_level(Probability(0.999), 100, 0.005);
    } catch (const CertificationInfeasible& e) {
        CHECK(e.p() == 0.999);
        CHECK(e.m() == 100);
        CHECK(e.alpha2() == 0.005);
        CHECK(std::abs(e.q() - (0.999 + 0.16276236307187292551)) < 1e-12);
    }
    CHECK(std::abs(quantile_level(Probability(0.5), 1'000'000'000'000ULL, 0.5).value() - 0.5) < 1e-6);
}

TEST_CASE("hoeffding_delta") {
    double d = hoeffding_delta(10'000, 0.005);
    CHECK(std::abs(d - 0.017308183826022853382) < 1e-15);
    CHECK(std::abs(hoeffding_delta(20'000, 0.005) - d / std::sqrt(2.0)) < 1e-12);
    CHECK(hoeffding_delta(1, 2.0 / std::exp(2.0)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(hoeffding_delta(10, 0.005) - 0.54733283051119736330) < 1e-14);
    CHECK_THROWS_AS(hoeffding_delta(0, 0.005), DomainError);
}

TEST_CASE("empirical_quantile and lower_median") {
    std::vector<double> a{1, 2, 3, 4};
    CHECK(empirical_quantile(a, Probability(0.5)) == 2);
    std::vector<double> b{5, 1, 4, 2, 3};
    CHECK(empirical_quantile(b, Probability(0.8)) == 4);
    std::vector<double> c{7, 7, 7};
    for (double q : {0.0, 0.3, 1.0}) CHECK(empirical_quantile(c, Probability(q)) == 7);
    CHECK(empirical_quantile(b, Probability(0.0)) == 1);
    CHECK(empirical_quantile(b, Probability(1.0)) == 5);
    std::vector<double> empty;
    CHECK_THROWS_AS(empirical_quantile(empty, Probability(0.5)), DomainError);
    CHECK(lower_median(a) == 2);
    CHECK(lower_median(b) == 3);
}

TEST_CASE("property: quantile is monotone in q and is an element") {
    gen::Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        auto v = gen::vec(rng, 1 + rng() % 40);
        double prev = -INFINITY;
        for (double q = 0.0; q <= 1.0; q += 0.05) {
            double x = empirical_quantile(v, Probability(q));
            CHECK(x >= prev);
            CHECK(std::find(v.begin(), v.end(), x) != v.end());
            prev = x;
        }
    }
}

TEST_CASE("property: cohen_lower_bound inverts required_mass") {
    gen::Rng rng(5);
    for (int t = 0; t < 500; ++t) {
        double delta = gen::uniform(rng, 0.001, 0.3);
        double eps = gen::uniform(rng, 0.0, 1.0);
        double sigma = gen::uniform(rng, 0.25, 2.0);
        auto p = required_mass(MassMargin(delta), eps, sigma);
        if (p.value() >= 1.0) continue;
        CHECK(std::abs(cohen_lower_bound(p, eps, sigma).value() - (0.5 + delta)) < 1e-9);
    }
}
