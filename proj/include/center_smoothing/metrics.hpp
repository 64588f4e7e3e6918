#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "center_smoothing/output_point.hpp"

namespace csmooth {

enum class MetricKind { l2, jaccard, total_variation, angular, weighted_squared_feature, discrete, label_table };

/// What the certificate needs to know about a distance: its relaxed-triangle
/// constant gamma (d(a,c) <= gamma * (d(a,b) + d(b,c))) and whether distinct
/// points may sit at distance zero.
struct MetricDescriptor {
    MetricKind kind = MetricKind::l2;
    double gamma = 1.0;
    bool pseudometric = false;
};

std::string_view to_string(MetricKind kind) noexcept;

double l2_distance(const RealVector& a, const RealVector& b);
double jaccard_distance(const Box& a, const Box& b);
double jaccard_distance(const FiniteSet& a, const FiniteSet& b);
/// Dispatches on the variant. Throws VariantMismatch unless both operands are
/// boxes or both are sets.
double jaccard_distance(const OutputPoint& a, const OutputPoint& b);
double total_variation_distance(const ImageGrid& a, const ImageGrid& b);
double angular_distance(const RealVector& a, const RealVector& b);

/// Maps an output into the feature space of a perceptual-style distance.
using FeatureMap = std::function<RealVector(const OutputPoint&)>;

FeatureMap identity_features();

/// sum_i w_i (phi(a)_i - phi(b)_i)^2.
double weighted_squared_feature_distance(const OutputPoint& a, const OutputPoint& b,
                                         const FeatureMap& feature_map,
                                         std::span<const double> weights);

/// A distance function over OutputPoints bundled with its descriptor.
/// Cheap to copy; the callable is shared.
class Metric {
public:
    using Distance = std::function<double(const OutputPoint&, const OutputPoint&)>;

    Metric(MetricDescriptor descriptor, Distance distance);

    static Metric l2();
    static Metric jaccard();
    static Metric total_variation();
    static Metric angular();
    /// gamma = 2. Weights must be non-negative.
    static Metric weighted_squared_feature(FeatureMap feature_map, std::vector<double> weights);
    /// 0 for equal labels, 1 otherwise.
    static Metric discrete();
    /// Labels index a symmetric distance table. The table is validated for
    /// shape, symmetry, zero diagonal and non-negativity; gamma is the smallest
    /// constant satisfying the relaxed triangle inequality over the table.
    static Metric label_table(std::vector<std::vector<double>> table);

    /// Resolves a command-line metric id: l2, jaccard, tvd, angular, sqfeat, discrete.
    /// Throws DomainError for unknown ids.
    static Metric from_id(std::string_view id);

    const MetricDescriptor& descriptor() const noexcept { return descriptor_; }
    double gamma() const noexcept { return descriptor_.gamma; }

    double operator()(const OutputPoint& a, const OutputPoint& b) const { return (*distance_)(a, b); }

private:
    MetricDescriptor descriptor_;
    std::shared_ptr<const Distance> distance_;
};

}  // namespace csmooth
