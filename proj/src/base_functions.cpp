#include "center_smoothing/base_functions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "center_smoothing/errors.hpp"

namespace csmooth {

namespace {

constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void require_dimension(const InputPoint& x, std::size_t k, const char* who) {
    if (x.dimension() != k) {
        throw DimensionMismatch(std::string(who) + ": expected input dimension " + std::to_string(k) +
                                ", got " + std::to_string(x.dimension()));
    }
}

class Identity final : public BaseFunction {
public:
    explicit Identity(std::size_t k) : k_(k) {}

    OutputPoint evaluate(const InputPoint& x) const override {
        require_dimension(x, k_, "identity");
        return RealVector{x.values};
    }
    OutputKind output_kind() const noexcept override { return OutputKind::vector; }
    std::optional<std::size_t> input_dimension() const noexcept override { return k_; }

private:
    std::size_t k_;
};

class Constant final : public BaseFunction {
public:
    Constant(OutputPoint value, std::optional<std::size_t> k) : value_(std::move(value)), k_(k) {}

    OutputPoint evaluate(const InputPoint& x) const override {
        if (k_) {
            require_dimension(x, *k_, "constant");
        }
        return value_;
    }
    OutputKind output_kind() const noexcept override { return kind_of(value_); }
    std::optional<std::size_t> input_dimension() const noexcept override { return k_; }

private:
    OutputPoint value_;
    std::optional<std::size_t> k_;
};

class Linear final : public BaseFunction {
public:
    explicit Linear(std::vector<std::vector<double>> matrix) : matrix_(std::move(matrix)) {
        if (matrix_.empty() || matrix_.front().empty()) {
            throw DomainError("linear: matrix must be non-empty");
        }
        for (const auto& row : matrix_) {
            if (row.size() != matrix_.front().size()) {
                throw DomainError("linear: ragged matrix");
            }
        }
    }

    OutputPoint evaluate(const InputPoint& x) const override {
        require_dimension(x, matrix_.front().size(), "linear");
        RealVector out;
        out.values.reserve(matrix_.size());
        for (const auto& row : matrix_) {
            double acc = 0.0;
            for (std::size_t j = 0; j < row.size(); ++j) {
                acc += row[j] * x.values[j];
            }
            out.values.push_back(acc);
        }
        return out;
    }
    OutputKind output_kind() const noexcept override { return OutputKind::vector; }
    std::optional<std::size_t> input_dimension() const noexcept override {
        return matrix_.front().size();
    }

private:
    std::vector<std::vector<double>> matrix_;
};

class PiecewiseDiscrete final : public BaseFunction {
public:
    PiecewiseDiscrete(std::vector<InputPoint> centers, std::vector<std::int64_t> labels)
        : centers_(std::move(centers)), labels_(std::move(labels)) {
        if (centers_.empty() || centers_.size() != labels_.size()) {
            throw DomainError("piecewise_discrete: need one label per center, at least one center");
        }
        for (const auto& c : centers_) {
            if (c.dimension() != centers_.front().dimension()) {
                throw DomainError("piecewise_discrete: centers differ in dimension");
            }
        }
    }

    OutputPoint evaluate(const InputPoint& x) const override {
        require_dimension(x, centers_.front().dimension(), "piecewise_discrete");
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < centers_.size(); ++i) {
            double d = 0.0;
            for (std::size_t j = 0; j < x.values.size(); ++j) {
                const double diff = x.values[j] - centers_[i].values[j];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return Label{labels_[best]};
    }
    OutputKind output_kind() const noexcept override { return OutputKind::label; }
    std::optional<std::size_t> input_dimension() const noexcept override {
        return centers_.front().dimension();
    }

private:
    std::vector<InputPoint> centers_;
    std::vector<std::int64_t> labels_;
};

class BoxEmitter final : public BaseFunction {
public:
    explicit BoxEmitter(BoxEmitterParams params) : p_(std::move(params)) {
        if (p_.matrix.size() != 4 || p_.offset.size() != 4) {
            throw DomainError("box_emitter: need a 4-row matrix and 4 offsets");
        }
        k_ = p_.matrix.front().size();
        for (const auto& row : p_.matrix) {
            if (row.size() != k_) {
                throw DomainError("box_emitter: ragged matrix");
            }
        }
        if (p_.detection_weights && p_.detection_weights->size() != k_) {
            throw DomainError("box_emitter: detection weights must match input dimension");
        }
    }

    OutputPoint evaluate(const InputPoint& x) const override {
        require_dimension(x, k_, "box_emitter");
        if (p_.detection_weights) {
            double score = p_.detection_bias;
            for (std::size_t j = 0; j < k_; ++j) {
                score += (*p_.detection_weights)[j] * x.values[j];
            }
            if (score < 0.0) {
                return Box::empty();
            }
        }
        double u[4];
        for (std::size_t r = 0; r < 4; ++r) {
            double acc = p_.offset[r];
            for (std::size_t j = 0; j < k_; ++j) {
                acc += p_.matrix[r][j] * x.values[j];
            }
            u[r] = acc;
        }
        return Box(std::min(u[0], u[2]), std::min(u[1], u[3]), std::max(u[0], u[2]),
                   std::max(u[1], u[3]));
    }
    OutputKind output_kind() const noexcept override { return OutputKind::box; }
    std::optional<std::size_t> input_dimension() const noexcept override { return k_; }

private:
    BoxEmitterParams p_;
    std::size_t k_ = 0;
};

class ImageBlur final : public BaseFunction {
public:
    ImageBlur(std::size_t h, std::size_t w, std::size_t c) : h_(h), w_(w), c_(c) {
        if (h == 0 || w == 0 || c == 0) {
            throw DomainError("image_blur: dimensions must be positive");
        }
    }

    OutputPoint evaluate(const InputPoint& x) const override {
        require_dimension(x, h_ * w_ * c_, "image_blur");
        auto src = [&](std::ptrdiff_t i, std::ptrdiff_t j, std::size_t ch) {
            const auto ii = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(h_) - 1));
            const auto jj = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(w_) - 1));
            return std::clamp(x.values[(ii * w_ + jj) * c_ + ch], 0.0, 1.0);
        };
        std::vector<double> out(h_ * w_ * c_);
        for (std::size_t i = 0; i < h_; ++i) {
            for (std::size_t j = 0; j < w_; ++j) {
                for (std::size_t ch = 0; ch < c_; ++ch) {
                    double acc = 0.0;
                    for (int di = -1; di <= 1; ++di) {
                        for (int dj = -1; dj <= 1; ++dj) {
                            acc += src(static_cast<std::ptrdiff_t>(i) + di,
                                       static_cast<std::ptrdiff_t>(j) + dj, ch);
                        }
                    }
                    out[(i * w_ + j) * c_ + ch] = std::clamp(acc / 9.0, 0.0, 1.0);
                }
            }
        }
        return ImageGrid(h_, w_, c_, std::move(out));
    }
    OutputKind output_kind() const noexcept override { return OutputKind::image; }
    std::optional<std::size_t> input_dimension() const noexcept override { return h_ * w_ * c_; }

private:
    std::size_t h_;
    std::size_t w_;
    std::size_t c_;
};

enum class Activation { linear, relu, tanh, sigmoid };

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation activation = Activation::linear;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> bias;
};

class Mlp final : public BaseFunction {
public:
    Mlp(std::size_t input_dim, std::vector<DenseLayer> layers)
        : input_dim_(input_dim), layers_(std::move(layers)) {}

    OutputPoint evaluate(const InputPoint& x) const override {
        require_dimension(x, input_dim_, "mlp");
        std::vector<double> act = x.values;
        for (const auto& layer : layers_) {
            std::vector<double> next(layer.out);
            for (std::size_t r = 0; r < layer.out; ++r) {
                double acc = layer.bias[r];
                for (std::size_t c = 0; c < layer.in; ++c) {
                    acc += layer.weights[r * layer.in + c] * act[c];
                }
                switch (layer.activation) {
                    case Activation::linear: break;
                    case Activation::relu: acc = std::max(0.0, acc); break;
                    case Activation::tanh: acc = std::tanh(acc); break;
                    case Activation::sigmoid: acc = 1.0 / (1.0 + std::exp(-acc)); break;
                }
                next[r] = acc;
            }
            act = std::move(next);
        }
        return RealVector{std::move(act)};
    }
    OutputKind output_kind() const noexcept override { return OutputKind::vector; }
    std::optional<std::size_t> input_dimension() const noexcept override { return input_dim_; }

private:
    std::size_t input_dim_;
    std::vector<DenseLayer> layers_;
};

Activation parse_activation(const std::string& name) {
    if (name == "linear") return Activation::linear;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw DomainError("mlp weights: unknown activation '" + name + "'");
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b) noexcept {
    std::uint64_t z = mix64(seed + golden_gamma);
    z = mix64(z ^ (tag_a + 0x632be59bd9b4e019ULL));
    return mix64(z ^ (tag_b + 0x85157af5ULL * golden_gamma));
}

SplitMix64::result_type SplitMix64::operator()() noexcept {
    state_ += golden_gamma;
    return mix64(state_);
}

void standard_normal_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                            std::span<double> out) {
    SplitMix64 engine(derive_seed(seed, stream, index));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out) {
        v = normal(engine);
    }
}

std::vector<InputPoint> gaussian_perturb(const InputPoint& x, const NoiseSpec& spec, std::size_t count,
                                         std::uint64_t first_index) {
    if (spec.dimension != x.dimension()) {
        throw DimensionMismatch("gaussian_perturb: noise dimension " + std::to_string(spec.dimension) +
                                " does not match input dimension " + std::to_string(x.dimension()));
    }
    if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) {
        throw DomainError("gaussian_perturb: sigma must be positive and finite");
    }
    std::vector<InputPoint> points(count);
    std::vector<double> noise(x.dimension());
    for (std::size_t i = 0; i < count; ++i) {
        standard_normal_sample(spec.seed, spec.stream, first_index + i, noise);
        auto& values = points[i].values;
        values.resize(x.dimension());
        for (std::size_t j = 0; j < values.size(); ++j) {
            values[j] = x.values[j] + spec.sigma * noise[j];
        }
    }
    return points;
}

std::vector<OutputPoint> BaseFunction::evaluate_batch(std::span<const InputPoint> points) const {
    std::vector<OutputPoint> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        try {
            out.push_back(evaluate(points[i]));
        } catch (const EvaluationError&) {
            throw;
        } catch (const std::exception& e) {
            throw EvaluationError("evaluation failed at index " + std::to_string(i) + ": " + e.what(),
                                  static_cast<std::int64_t>(i));
        }
    }
    return out;
}

std::vector<OutputPoint> evaluate_batch(const BaseFunction& f, std::span<const InputPoint> points,
                                        unsigned workers) {
    if (f.single_flight() || workers <= 1 || points.size() < 2 * static_cast<std::size_t>(workers)) {
        return f.evaluate_batch(points);
    }
    const std::size_t chunk = (points.size() + workers - 1) / workers;
    std::vector<std::vector<OutputPoint>> parts(workers);
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t begin = std::min(points.size(), w * chunk);
            const std::size_t end = std::min(points.size(), begin + chunk);
            threads.emplace_back([&, w, begin, end] {
                try {
                    parts[w] = f.evaluate_batch(points.subspan(begin, end - begin));
                } catch (const EvaluationError& e) {
                    errors[w] = std::make_exception_ptr(
                        EvaluationError(e.what(), e.index() + static_cast<std::int64_t>(begin)));
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }
    std::vector<OutputPoint> out;
    out.reserve(points.size());
    for (auto& part : parts) {
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

BaseFunctionPtr make_identity(std::size_t k) { return std::make_shared<Identity>(k); }

BaseFunctionPtr make_constant(OutputPoint value, std::optional<std::size_t> k) {
    return std::make_shared<Constant>(std::move(value), k);
}

BaseFunctionPtr make_linear(std::vector<std::vector<double>> matrix) {
    return std::make_shared<Linear>(std::move(matrix));
}

BaseFunctionPtr make_piecewise_discrete(std::vector<InputPoint> centers, std::vector<std::int64_t> labels) {
    return std::make_shared<PiecewiseDiscrete>(std::move(centers), std::move(labels));
}

BaseFunctionPtr make_box_emitter(BoxEmitterParams params) {
    return std::make_shared<BoxEmitter>(std::move(params));
}

BaseFunctionPtr make_image_blur(std::size_t height, std::size_t width, std::size_t channels) {
    return std::make_shared<ImageBlur>(height, width, channels);
}

BaseFunctionPtr make_mlp_from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DomainError("cannot open mlp weights file " + path.string());
    }
    auto fail = [&](const std::string& why) -> DomainError {
        return DomainError("mlp weights " + path.string() + ": " + why);
    };

    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "csmooth-mlp" || version != 1) {
        throw fail("missing 'csmooth-mlp 1' header");
    }
    std::string tag;
    std::size_t input_dim = 0;
    if (!(in >> tag >> input_dim) || tag != "input" || input_dim == 0) {
        throw fail("missing 'input <k>' line");
    }

    std::vector<DenseLayer> layers;
    std::size_t width = input_dim;
    while (in >> tag) {
        if (tag != "layer") {
            throw fail("expected 'layer', got '" + tag + "'");
        }
        DenseLayer layer;
        std::string activation;
        if (!(in >> layer.out >> layer.in >> activation) || layer.out == 0) {
            throw fail("bad layer header");
        }
        if (layer.in != width) {
            throw fail("layer input width " + std::to_string(layer.in) + " does not match previous width " +
                       std::to_string(width));
        }
        layer.activation = parse_activation(activation);
        layer.weights.resize(layer.out * layer.in);
        layer.bias.resize(layer.out);
        for (double& w : layer.weights) {
            if (!(in >> w)) throw fail("truncated weight matrix");
        }
        for (double& b : layer.bias) {
            if (!(in >> b)) throw fail("truncated bias vector");
        }
        width = layer.out;
        layers.push_back(std::move(layer));
    }
    if (layers.empty()) {
        throw fail("no layers");
    }
    return std::make_shared<Mlp>(input_dim, std::move(layers));
}

}  // namespace csmooth
