#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "center_smoothing/base_functions.hpp"
#include "center_smoothing/errors.hpp"
#include "support.hpp"

using namespace csmooth;

TEST_CASE("gaussian_perturb with vanishing sigma returns x") {
    InputPoint x{{0.3, -0.7, 1.1}};
    auto pts = gaussian_perturb(x, {1e-300, 42, 3, 0}, 20);
    REQUIRE(pts.size() == 20);
    for (const auto& p : pts)
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(p.values[i] - x.values[i]) < 1e-12);
}

TEST_CASE("gaussian_perturb moments over 1e6 draws") {
    InputPoint x{{0.5, -2.0}};
    const double sigma = 0.7;
    const std::size_t n = 1'000'000;
    auto pts = gaussian_perturb(x, {sigma, 123, 2, 0}, n);
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0, sq = 0;
        for (const auto& p : pts) mean += p.values[c];
        mean /= n;
        for (const auto& p : pts) sq += (p.values[c] - mean) * (p.values[c] - mean);
        double var = sq / (n - 1);
        CHECK(std::abs(mean - x.values[c]) < 4 * sigma / std::sqrt(double(n)));
        CHECK(std::abs(var / (sigma * sigma) - 1.0) < 0.05);
    }
}

TEST_CASE("gaussian_perturb is reproducible and index-addressable") {
    InputPoint x{{0, 0, 0}};
    NoiseSpec spec{1.0, 9, 3, 0};
    auto a = gaussian_perturb(x, spec, 50);
    auto b = gaussian_perturb(x, spec, 50);
    CHECK(a == b);
    auto tail = gaussian_perturb(x, spec, 10, 40);
    for (std::size_t i = 0; i < 10; ++i) CHECK(tail[i] == a[40 + i]);
    NoiseSpec other = spec;
    other.seed = 10;
    CHECK(gaussian_perturb(x, other, 50) != a);
    other = spec;
    other.stream = 1;
    CHECK(gaussian_perturb(x, other, 50) != a);
    CHECK_THROWS_AS(gaussian_perturb(InputPoint{{0, 0}}, spec, 1), DimensionMismatch);
    CHECK_THROWS_AS(gaussian_perturb(x, {-1.0, 9, 3, 0}, 1), DomainError);
}

TEST_CASE("property: streams are uncorrelated") {
    InputPoint x{{0.0}};
    auto a = gaussian_perturb(x, {1.0, 5, 1, 0}, 100'000);
    auto b = gaussian_perturb(x, {1.0, 5, 1, 1}, 100'000);
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i].values[0] * b[i].values[0];
    CHECK(std::abs(s / a.size()) < 0.02);
}

TEST_CASE("built-in functions") {
    auto id = make_identity(2);
    std::vector<InputPoint> xs{{{1, 2}}, {{3, 4}}, {{-1, 0}}};
    auto ys = evaluate_batch(*id, xs);
    REQUIRE(ys.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::get<RealVector>(ys[i]).values == xs[i].values);
    CHECK(id->deterministic());
    CHECK(id->output_kind() == OutputKind::vector);

    auto lin = make_linear({{1, 2}, {0, -1}, {3, 0}});
    auto y = std::get<RealVector>(lin->evaluate({{1, 1}}));
    CHECK(y.values == std::vector<double>{3, -1, 3});
    CHECK_THROWS_AS(lin->evaluate({{1, 1, 1}}), DimensionMismatch);

    auto disc = make_piecewise_discrete({{{0, 0}}, {{1, 1}}}, {10, 20});
    CHECK(std::get<Label>(disc->evaluate({{0.1, 0.2}})).id == 10);
    CHECK(std::get<Label>(disc->evaluate({{0.9, 0.7}})).id == 20);
    CHECK(std::get<Label>(disc->evaluate({{0.5, 0.5}})).id == 10);

    auto c = make_constant(Box(0, 0, 1, 1), 3);
    CHECK(std::get<Box>(c->evaluate({{5, 6, 7}})) == Box(0, 0, 1, 1));
}

TEST_CASE("box emitter") {
    BoxEmitterParams params;
    params.matrix = {{1, 0}, {0, 1}, {1, 0}, {0, 1}};
    params.offset = {0, 0, 1, 2};
    auto f = make_box_emitter(params);
    auto b1 = std::get<Box>(f->evaluate({{0.5, 0.5}}));
    CHECK(b1 == Box(0.5, 0.5, 1.5, 2.5));
    CHECK(std::get<Box>(f->evaluate({{0.5, 0.5}})) == b1);
    params.detection_weights = std::vector<double>{1, 0};
    params.detection_bias = 0.0;
    auto g = make_box_emitter(params);
    CHECK(std::get<Box>(g->evaluate({{-0.1, 0.5}})).is_empty());
    CHECK_FALSE(std::get<Box>(g->evaluate({{0.1, 0.5}})).is_empty());
}

TEST_CASE("image blur") {
    auto f = make_image_blur(3, 3, 1);
    std::vector<double> px(9, 0.0);
    px[4] = 0.9;
    auto img = std::get<ImageGrid>(f->evaluate({px}));
    CHECK(img.height() == 3);
    for (double p : img.pixels()) CHECK(p == doctest::Approx(0.1));
    // clamping then blur of a constant out-of-range image
    auto sat = std::get<ImageGrid>(f->evaluate({std::vector<double>(9, 3.0)}));
    for (double p : sat.pixels()) CHECK(p == doctest::Approx(1.0));
}

TEST_CASE("mlp from file") {
    auto path = std::filesystem::temp_directory_path() / "csmooth_test_mlp.txt";
    {
        std::ofstream out(path);
        out << "csmooth-mlp 1\ninput 2\n"
            << "layer 2 2 relu\n1 -1\n0.5 0.5\n0 0\n"
            << "layer 1 2 linear\n2 1\n-1\n";
    }
    auto f = make_mlp_from_file(path);
    // h = relu([1-2, 0.5+1]) = [0, 1.5]; y = 2*0 + 1.5 - 1 = 0.5
    auto y = std::get<RealVector>(f->evaluate({{1, 2}}));
    REQUIRE(y.values.size() == 1);
    CHECK(y.values[0] == doctest::Approx(0.5));
    CHECK(f->input_dimension() == 2);
    {
        std::ofstream out(path);
        out << "csmooth-mlp 1\ninput 2\nlayer 2 3 relu\n1 2 3\n";
    }
    CHECK_THROWS_AS(make_mlp_from_file(path), DomainError);
    std::filesystem::remove(path);
    CHECK_THROWS(make_mlp_from_file(path));
}

namespace {

struct Flaky final : BaseFunction {
    OutputPoint evaluate(const InputPoint& x) const override {
        if (x.values[0] < 0) throw DomainError("negative");
        return RealVector{x.values};
    }
    OutputKind output_kind() const noexcept override { return OutputKind::vector; }
    std::optional<std::size_t> input_dimension() const noexcept override { return 1; }
};

}  // namespace

TEST_CASE("evaluate_batch keeps order across workers and reports failing index") {
    auto id = make_identity(1);
    std::vector<InputPoint> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back({{double(i)}});
    auto one = evaluate_batch(*id, xs, 1);
    auto many = evaluate_batch(*id, xs, 8);
    CHECK(one == many);

    Flaky f;
    xs[617].values[0] = -1;
    try {
        (void)evaluate_batch(f, xs, 1);
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        CHECK(e.index() == 617);
    }
}
