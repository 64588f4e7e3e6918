#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "center_smoothing/output_point.hpp"

namespace csmooth {

struct InputPoint {
    std::vector<double> values;

    std::size_t dimension() const noexcept { return values.size(); }
    friend bool operator==(const InputPoint&, const InputPoint&) = default;
};

/// Gaussian smoothing noise N(0, sigma^2 I). `stream` selects one of several
/// independent sequences derived from the same seed; sample i of a stream is
/// a pure function of (seed, stream, i), so batches can be generated in any
/// order or in parallel.
struct NoiseSpec {
    double sigma = 1.0;
    std::uint64_t seed = 0;
    std::size_t dimension = 0;
    std::uint64_t stream = 0;
};

/// Mixes a seed with up to two tags into a new 64-bit seed (splitmix64 chain).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b = 0) noexcept;

/// Counter-based uniform bit generator: the k-th output is splitmix64(key + k * golden).
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t key) noexcept : state_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }
    result_type operator()() noexcept;

private:
    std::uint64_t state_;
};

/// Fills `out` with i.i.d. standard normals for sample `index` of (seed, stream).
void standard_normal_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                            std::span<double> out);

/// `count` points x + delta_i, delta_i ~ N(0, sigma^2 I), for sample indices
/// first_index .. first_index + count - 1 of the spec's stream.
std::vector<InputPoint> gaussian_perturb(const InputPoint& x, const NoiseSpec& spec, std::size_t count,
                                         std::uint64_t first_index = 0);

/// A black-box map from R^k into an output space.
class BaseFunction {
public:
    virtual ~BaseFunction() = default;

    virtual OutputPoint evaluate(const InputPoint& x) const = 0;

    /// Positionally aligned outputs. The default maps evaluate() and rethrows
    /// failures as EvaluationError carrying the offending index.
    virtual std::vector<OutputPoint> evaluate_batch(std::span<const InputPoint> points) const;

    virtual OutputKind output_kind() const noexcept = 0;
    /// Expected input dimension, if fixed.
    virtual std::optional<std::size_t> input_dimension() const noexcept { return std::nullopt; }
    virtual bool deterministic() const noexcept { return true; }
    /// Single-flight functions must not be called concurrently; the engine
    /// serializes them.
    virtual bool single_flight() const noexcept { return false; }
};

using BaseFunctionPtr = std::shared_ptr<const BaseFunction>;

/// Evaluates `points`, fanning out across `workers` threads for functions
/// that allow concurrent calls. Output order matches input order regardless
/// of worker count.
std::vector<OutputPoint> evaluate_batch(const BaseFunction& f, std::span<const InputPoint> points,
                                        unsigned workers = 1);

// Built-in functions.

BaseFunctionPtr make_identity(std::size_t k);
BaseFunctionPtr make_constant(OutputPoint value, std::optional<std::size_t> k = std::nullopt);
/// x -> A x, A given row-major as rows of length k.
BaseFunctionPtr make_linear(std::vector<std::vector<double>> matrix);
/// Label of the nearest center (ℓ₂), ties to the lowest index.
BaseFunctionPtr make_piecewise_discrete(std::vector<InputPoint> centers, std::vector<std::int64_t> labels);

/// Affine box detector: u = A x + b with A 4 x k; the box spans
/// [min(u0,u2), max(u0,u2)] x [min(u1,u3), max(u1,u3)]. When a detection row
/// is supplied, the output is Empty whenever w . x + c < 0.
struct BoxEmitterParams {
    std::vector<std::vector<double>> matrix;  // 4 rows of length k
    std::vector<double> offset;               // 4 entries
    std::optional<std::vector<double>> detection_weights;
    double detection_bias = 0.0;
};
BaseFunctionPtr make_box_emitter(BoxEmitterParams params);

/// Interprets x as an h x w x channels image (channels = k / (h w)), clamps
/// to [0, 1] and applies a 3x3 box blur with edge replication.
BaseFunctionPtr make_image_blur(std::size_t height, std::size_t width, std::size_t channels = 1);

/// Dense feed-forward network loaded from the text weights format described
/// in the README. Throws DomainError for malformed files.
BaseFunctionPtr make_mlp_from_file(const std::filesystem::path& path);

}  // namespace csmooth
