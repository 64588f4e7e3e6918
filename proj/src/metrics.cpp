#include "center_smoothing/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "center_smoothing/errors.hpp"

namespace csmooth {

namespace {

void require_same_dimension(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionMismatch(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
    }
}

[[noreturn]] void variant_error(const char* metric, const OutputPoint& a, const OutputPoint& b) {
    throw VariantMismatch(std::string(metric) + " is not defined between " +
                          std::string(to_string(kind_of(a))) + " and " +
                          std::string(to_string(kind_of(b))));
}

double l2_over_reals(std::span<const double> a, std::span<const double> b) {
    require_same_dimension(a.size(), b.size(), "l2_distance");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

}  // namespace

std::string_view to_string(MetricKind kind) noexcept {
    switch (kind) {
        case MetricKind::l2: return "l2";
        case MetricKind::jaccard: return "jaccard";
        case MetricKind::total_variation: return "tvd";
        case MetricKind::angular: return "angular";
        case MetricKind::weighted_squared_feature: return "sqfeat";
        case MetricKind::discrete: return "discrete";
        case MetricKind::label_table: return "label_table";
    }
    return "unknown";
}

double l2_distance(const RealVector& a, const RealVector& b) {
    return l2_over_reals(a.values, b.values);
}

double jaccard_distance(const Box& a, const Box& b) {
    if (a.is_empty() && b.is_empty()) {
        return 0.0;
    }
    if (a.is_empty() || b.is_empty()) {
        return 1.0;
    }
    const double ix = std::max(0.0, std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min()));
    const double iy = std::max(0.0, std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min()));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) {
        // Two degenerate (zero-area) boxes: equal corners means the same set.
        return a == b ? 0.0 : 1.0;
    }
    return std::clamp(1.0 - inter / uni, 0.0, 1.0);
}

double jaccard_distance(const FiniteSet& a, const FiniteSet& b) {
    if (a.size() == 0 && b.size() == 0) {
        return 0.0;
    }
    std::size_t inter = 0;
    auto ia = a.elements().begin();
    auto ib = b.elements().begin();
    while (ia != a.elements().end() && ib != b.elements().end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++inter;
            ++ia;
            ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

double jaccard_distance(const OutputPoint& a, const OutputPoint& b) {
    if (const auto* ba = std::get_if<Box>(&a)) {
        if (const auto* bb = std::get_if<Box>(&b)) {
            return jaccard_distance(*ba, *bb);
        }
    }
    if (const auto* sa = std::get_if<FiniteSet>(&a)) {
        if (const auto* sb = std::get_if<FiniteSet>(&b)) {
            return jaccard_distance(*sa, *sb);
        }
    }
    variant_error("jaccard_distance", a, b);
}

double total_variation_distance(const ImageGrid& a, const ImageGrid& b) {
    if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels()) {
        throw DimensionMismatch("total_variation_distance: image shapes differ");
    }
    const std::size_t h = a.height();
    const std::size_t w = a.width();
    const std::size_t c = a.channels();
    auto diff = [&](std::size_t i, std::size_t j, std::size_t ch) {
        return a.at(i, j, ch) - b.at(i, j, ch);
    };

    double tv = 0.0;
    if (h == 1 || w == 1) {
        // Single row or column: consecutive-element variation along the line.
        const std::size_t len = std::max(h, w);
        for (std::size_t k = 0; k + 1 < len; ++k) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double here = h == 1 ? diff(0, k, ch) : diff(k, 0, ch);
                const double next = h == 1 ? diff(0, k + 1, ch) : diff(k + 1, 0, ch);
                tv += std::abs(here - next);
            }
        }
        return tv;
    }
    for (std::size_t i = 0; i + 1 < h; ++i) {
        for (std::size_t j = 0; j + 1 < w; ++j) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double here = diff(i, j, ch);
                tv += std::abs(here - diff(i + 1, j, ch)) + std::abs(here - diff(i, j + 1, ch));
            }
        }
    }
    return tv;
}

double angular_distance(const RealVector& a, const RealVector& b) {
    require_same_dimension(a.values.size(), b.values.size(), "angular_distance");
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw DegenerateDirection("angular_distance: zero vector has no direction");
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    // 2 atan2(|u - v|, |u + v|) on unit vectors: well conditioned near 0 and
    // pi, where acos of the cosine is not, and exactly 0 for equal directions.
    double diff = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double u = a.values[i] / na;
        const double v = b.values[i] / nb;
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum)) / std::numbers::pi;
}

FeatureMap identity_features() {
    return [](const OutputPoint& p) { return RealVector{flatten(p)}; };
}

double weighted_squared_feature_distance(const OutputPoint& a, const OutputPoint& b,
                                         const FeatureMap& feature_map,
                                         std::span<const double> weights) {
    const RealVector fa = feature_map(a);
    const RealVector fb = feature_map(b);
    require_same_dimension(fa.values.size(), weights.size(), "weighted_squared_feature_distance");
    require_same_dimension(fb.values.size(), weights.size(), "weighted_squared_feature_distance");
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double diff = fa.values[i] - fb.values[i];
        sum += weights[i] * diff * diff;
    }
    return sum;
}

Metric::Metric(MetricDescriptor descriptor, Distance distance)
    : descriptor_(descriptor), distance_(std::make_shared<const Distance>(std::move(distance))) {
    if (!(descriptor_.gamma >= 1.0)) {
        throw DomainError("metric gamma must be at least 1");
    }
}

Metric Metric::l2() {
    return Metric({MetricKind::l2, 1.0, false}, [](const OutputPoint& a, const OutputPoint& b) {
        if (const auto* va = std::get_if<RealVector>(&a)) {
            if (const auto* vb = std::get_if<RealVector>(&b)) {
                return l2_distance(*va, *vb);
            }
        }
        if (const auto* ia = std::get_if<ImageGrid>(&a)) {
            if (const auto* ib = std::get_if<ImageGrid>(&b)) {
                return l2_over_reals(ia->pixels(), ib->pixels());
            }
        }
        variant_error("l2_distance", a, b);
    });
}

Metric Metric::jaccard() {
    return Metric({MetricKind::jaccard, 1.0, false},
                  [](const OutputPoint& a, const OutputPoint& b) { return jaccard_distance(a, b); });
}

Metric Metric::total_variation() {
    return Metric({MetricKind::total_variation, 1.0, true},
                  [](const OutputPoint& a, const OutputPoint& b) {
                      const auto* ia = std::get_if<ImageGrid>(&a);
                      const auto* ib = std::get_if<ImageGrid>(&b);
                      if (!ia || !ib) {
                          variant_error("total_variation_distance", a, b);
                      }
                      return total_variation_distance(*ia, *ib);
                  });
}

Metric Metric::angular() {
    return Metric({MetricKind::angular, 1.0, true}, [](const OutputPoint& a, const OutputPoint& b) {
        const auto* va = std::get_if<RealVector>(&a);
        const auto* vb = std::get_if<RealVector>(&b);
        if (!va || !vb) {
            variant_error("angular_distance", a, b);
        }
        return angular_distance(*va, *vb);
    });
}

Metric Metric::weighted_squared_feature(FeatureMap feature_map, std::vector<double> weights) {
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw DomainError("feature weights must be finite and non-negative");
        }
    }
    return Metric({MetricKind::weighted_squared_feature, 2.0, true},
                  [map = std::move(feature_map), w = std::move(weights)](const OutputPoint& a,
                                                                          const OutputPoint& b) {
                      return weighted_squared_feature_distance(a, b, map, w);
                  });
}

Metric Metric::discrete() {
    return Metric({MetricKind::discrete, 1.0, false}, [](const OutputPoint& a, const OutputPoint& b) {
        const auto* la = std::get_if<Label>(&a);
        const auto* lb = std::get_if<Label>(&b);
        if (!la || !lb) {
            variant_error("discrete_distance", a, b);
        }
        return la->id == lb->id ? 0.0 : 1.0;
    });
}

Metric Metric::label_table(std::vector<std::vector<double>> table) {
    const std::size_t n = table.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (table[i].size() != n) {
            throw DomainError("label distance table must be square");
        }
        if (table[i][i] != 0.0) {
            throw DomainError("label distance table must have a zero diagonal");
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!(table[i][j] >= 0.0) || !std::isfinite(table[i][j]) || table[i][j] != table[j][i]) {
                throw DomainError("label distance table must be symmetric, finite, non-negative");
            }
        }
    }
    double gamma = 1.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < n; ++c) {
                const double detour = table[a][b] + table[b][c];
                if (table[a][c] == 0.0) {
                    continue;
                }
                if (detour == 0.0) {
                    throw DomainError("label distance table violates every relaxed triangle inequality");
                }
                gamma = std::max(gamma, table[a][c] / detour);
            }
        }
    }
    const bool pseudo = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j && table[i][j] == 0.0) {
                    return true;
                }
            }
        }
        return false;
    }();
    return Metric({MetricKind::label_table, gamma, pseudo},
                  [t = std::move(table)](const OutputPoint& a, const OutputPoint& b) {
                      const auto* la = std::get_if<Label>(&a);
                      const auto* lb = std::get_if<Label>(&b);
                      if (!la || !lb) {
                          variant_error("label_table distance", a, b);
                      }
                      const auto n = static_cast<std::int64_t>(t.size());
                      if (la->id < 0 || la->id >= n || lb->id < 0 || lb->id >= n) {
                          throw DomainError("label id outside the distance table");
                      }
                      return t[static_cast<std::size_t>(la->id)][static_cast<std::size_t>(lb->id)];
                  });
}

Metric Metric::from_id(std::string_view id) {
    if (id == "l2") return l2();
    if (id == "jaccard") return jaccard();
    if (id == "tvd") return total_variation();
    if (id == "angular") return angular();
    if (id == "discrete") return discrete();
    if (id == "sqfeat") {
        // Squared ℓ₂ over the flattened output; unit weights sized on first use.
        return Metric({MetricKind::weighted_squared_feature, 2.0, false},
                      [](const OutputPoint& a, const OutputPoint& b) {
                          const auto fa = flatten(a);
                          const std::vector<double> unit(fa.size(), 1.0);
                          return weighted_squared_feature_distance(a, b, identity_features(), unit);
                      });
    }
    throw DomainError("unknown metric id '" + std::string(id) + "'");
}

}  // namespace csmooth
