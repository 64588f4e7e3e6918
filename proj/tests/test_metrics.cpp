#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "center_smoothing/errors.hpp"
#include "center_smoothing/metrics.hpp"
#include "support.hpp"

using namespace csmooth;

TEST_CASE("l2_distance") {
    RealVector v{{1.5, -2.0, 0.25}};
    CHECK(l2_distance(v, v) == 0.0);
    CHECK(l2_distance({{0, 0}}, {{3, 4}}) == 5.0);
    gen::Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        auto a = gen::real_vector(rng, 7), b = gen::real_vector(rng, 7);
        oracle::big s = 0;
        for (std::size_t i = 0; i < 7; ++i) {
            oracle::big d = oracle::big(a.values[i]) - oracle::big(b.values[i]);
            s += d * d;
        }
        CHECK(std::abs(l2_distance(a, b) - static_cast<double>(boost::multiprecision::sqrt(s))) < 1e-12);
    }
    CHECK_THROWS_AS(l2_distance({{1, 2}}, {{1, 2, 3}}), DimensionMismatch);
}

TEST_CASE("jaccard_distance on boxes and sets") {
    Box a(0, 0, 1, 1);
    CHECK(jaccard_distance(a, a) == 0.0);
    CHECK(jaccard_distance(a, Box(2, 2, 3, 3)) == 1.0);
    CHECK(std::abs(jaccard_distance(a, Box(0.5, 0, 1.5, 1)) - 2.0 / 3.0) < 1e-15);
    CHECK(jaccard_distance(Box::empty(), a) == 1.0);
    CHECK(jaccard_distance(Box::empty(), Box::empty()) == 0.0);
    FiniteSet s({1, 2, 3}), t({2, 3, 4, 5});
    CHECK(std::abs(jaccard_distance(s, t) - (1.0 - 2.0 / 5.0)) < 1e-15);
    CHECK(jaccard_distance(FiniteSet{}, FiniteSet{}) == 0.0);
    CHECK_THROWS_AS(jaccard_distance(OutputPoint{a}, OutputPoint{s}), VariantMismatch);
    CHECK_THROWS_AS(Box(1, 0, 0, 1), DomainError);
}

TEST_CASE("total_variation_distance") {
    gen::Rng rng(2);
    auto img = gen::image(rng, 5, 6, 3);
    std::vector<double> shifted = img.pixels();
    for (auto& p : shifted) p = p * 0.5 + 0.25;
    auto half = ImageGrid(5, 6, 3, [&] { auto v = img.pixels(); for (auto& p : v) p *= 0.5; return v; }());
    CHECK(total_variation_distance(half, ImageGrid(5, 6, 3, shifted)) < 1e-12);

    // 2x2 single channel: only the (0,0) neighbour terms contribute.
    // diff D = A - B = [[0.5, 0.1], [0.2, 0.0]]
    // |D00 - D10| + |D00 - D01| = 0.3 + 0.4
    ImageGrid A(2, 2, 1, {0.9, 0.3, 0.4, 0.5});
    ImageGrid B(2, 2, 1, {0.4, 0.2, 0.2, 0.5});
    CHECK(std::abs(total_variation_distance(A, B) - 0.7) < 1e-12);
    CHECK_THROWS_AS(total_variation_distance(A, ImageGrid(2, 3, 1, std::vector<double>(6, 0.0))),
                    DimensionMismatch);
    CHECK_THROWS_AS(ImageGrid(1, 1, 1, {1.5}), DomainError);
}

TEST_CASE("total_variation_distance stays below the random-grid bound") {
    gen::Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        auto a = gen::image(rng, 32, 32, 3), b = gen::image(rng, 32, 32, 3);
        CHECK(total_variation_distance(a, b) <= 5766.0);
    }
}

TEST_CASE("angular_distance") {
    RealVector v{{0.3, -1.2, 2.0}};
    CHECK(angular_distance(v, v) == 0.0);
    RealVector neg{{-0.3, 1.2, -2.0}};
    CHECK(std::abs(angular_distance(v, neg) - 1.0) < 1e-12);
    CHECK(std::abs(angular_distance({{1, 0}}, {{1, 1}}) - 0.25) < 1e-12);
    CHECK_THROWS_AS(angular_distance({{0, 0}}, {{1, 1}}), DegenerateDirection);
}

TEST_CASE("weighted_squared_feature_distance") {
    gen::Rng rng(4);
    auto fm = identity_features();
    for (int t = 0; t < 50; ++t) {
        auto a = gen::real_vector(rng, 5), b = gen::real_vector(rng, 5);
        std::vector<double> w(5, 1.0), w2 = gen::vec(rng, 5, 0.1, 2.0);
        CHECK(weighted_squared_feature_distance(a, a, fm, w2) == 0.0);
        double l2 = l2_distance(a, b);
        CHECK(std::abs(weighted_squared_feature_distance(a, b, fm, w) - l2 * l2) < 1e-12);
    }
    auto m = Metric::weighted_squared_feature(fm, {1, 1});
    CHECK(m.gamma() == 2.0);
}

TEST_CASE("Metric factories and ids") {
    CHECK(Metric::from_id("l2").descriptor().kind == MetricKind::l2);
    CHECK(Metric::from_id("jaccard").descriptor().kind == MetricKind::jaccard);
    CHECK(Metric::from_id("tvd").descriptor().pseudometric);
    CHECK(Metric::from_id("sqfeat").gamma() == 2.0);
    CHECK_THROWS_AS(Metric::from_id("cosine-ish"), DomainError);
    CHECK(Metric::discrete()(Label{1}, Label{1}) == 0.0);
    CHECK(Metric::discrete()(Label{1}, Label{2}) == 1.0);
    auto table = Metric::label_table({{0, 1, 1}, {1, 0, 2}, {1, 2, 0}});
    CHECK(table.gamma() == 1.0);
    CHECK(table(Label{1}, Label{2}) == 2.0);
    auto relaxed = Metric::label_table({{0, 1, 4}, {1, 0, 1}, {4, 1, 0}});
    CHECK(relaxed.gamma() == 2.0);
    CHECK_THROWS_AS(Metric::label_table({{0, 1}, {2, 0}}), DomainError);
}

namespace {

template <class Gen>
void check_metric_properties(const Metric& m, Gen draw, int triples = 10'000) {
    gen::Rng rng(99);
    const double gamma = m.gamma();
    int failures = 0;
    for (int t = 0; t < triples; ++t) {
        OutputPoint a = draw(rng), b = draw(rng), c = draw(rng);
        double ab = m(a, b), ba = m(b, a), bc = m(b, c), ac = m(a, c);
        if (std::abs(ab - ba) > 1e-12) ++failures;
        if (ab < 0) ++failures;
        if (ac > gamma * (ab + bc) + 1e-9) ++failures;
        if (m(a, a) != 0.0) ++failures;
    }
    CHECK(failures == 0);
}

}  // namespace

TEST_CASE("property: symmetry and relaxed triangle per metric") {
    SUBCASE("l2") { check_metric_properties(Metric::l2(), [](gen::Rng& r) -> OutputPoint { return gen::real_vector(r, 4); }); }
    SUBCASE("jaccard boxes") { check_metric_properties(Metric::jaccard(), [](gen::Rng& r) -> OutputPoint { return gen::box(r); }); }
    SUBCASE("jaccard sets") { check_metric_properties(Metric::jaccard(), [](gen::Rng& r) -> OutputPoint { return gen::set(r); }); }
    SUBCASE("tvd") { check_metric_properties(Metric::total_variation(), [](gen::Rng& r) -> OutputPoint { return gen::image(r, 4, 5, 2); }); }
    SUBCASE("angular") { check_metric_properties(Metric::angular(), [](gen::Rng& r) -> OutputPoint { return gen::nonzero_vector(r, 3); }); }
    SUBCASE("sqfeat") {
        check_metric_properties(Metric::weighted_squared_feature(identity_features(), {1.0, 0.5, 2.0}),
                                [](gen::Rng& r) -> OutputPoint { return gen::real_vector(r, 3); });
    }
    SUBCASE("discrete") {
        check_metric_properties(Metric::discrete(), [](gen::Rng& r) -> OutputPoint { return Label{static_cast<std::int64_t>(r() % 4)}; });
    }
}

TEST_CASE("property: angular scale invariance and jaccard range") {
    gen::Rng rng(8);
    for (int t = 0; t < 1000; ++t) {
        auto a = gen::nonzero_vector(rng, 4), b = gen::nonzero_vector(rng, 4);
        double s = gen::uniform(rng, 0.01, 100.0);
        RealVector as = a;
        for (auto& x : as.values) x *= s;
        CHECK(std::abs(angular_distance(as, b) - angular_distance(a, b)) < 1e-9);
        double j = jaccard_distance(gen::box(rng), gen::box(rng));
        CHECK(j >= 0.0);
        CHECK(j <= 1.0);
    }
}
