#include "center_smoothing/meb.hpp"

#include <algorithm>
#include <limits>
#include <thread>

#include "center_smoothing/errors.hpp"

namespace csmooth {

namespace {

// Above this many samples the full distance matrix is not materialized.
constexpr std::size_t dense_matrix_limit = 2048;

struct RowBest {
    double radius = std::numeric_limits<double>::infinity();
    std::size_t index = 0;
};

bool better(const RowBest& a, const RowBest& b) {
    return a.radius < b.radius || (a.radius == b.radius && a.index < b.index);
}

double kth_smallest(std::vector<double>& row, std::size_t k) {
    auto nth = row.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(row.begin(), nth, row.end());
    return *nth;
}

template <class Fn>
void parallel_ranges(std::size_t count, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        fn(0u, std::size_t{0}, count);
        return;
    }
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t begin = std::min(count, w * chunk);
            const std::size_t end = std::min(count, begin + chunk);
            threads.emplace_back([&, w, begin, end] {
                try {
                    fn(w, begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::size_t count_within(std::span<const double> distances, double radius) {
    return static_cast<std::size_t>(
        std::count_if(distances.begin(), distances.end(), [radius](double d) { return d <= radius; }));
}

}  // namespace

BallEstimate min_median_center(std::span<const OutputPoint> samples, const Metric& metric, unsigned workers) {
    const std::size_t n = samples.size();
    if (n == 0) {
        throw DomainError("min_median_center: no samples");
    }
    const std::size_t k = half_cover(n);
    workers = std::max(1u, workers);
    std::vector<RowBest> best(workers);
    std::vector<double> chosen_row;

    if (n <= dense_matrix_limit) {
        std::vector<double> matrix(n * n, 0.0);
        parallel_ranges(n, workers, [&](unsigned, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    matrix[i * n + j] = metric(samples[i], samples[j]);
                }
            }
        });
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                matrix[i * n + j] = matrix[j * n + i];
            }
        }
        parallel_ranges(n, workers, [&](unsigned w, std::size_t begin, std::size_t end) {
            std::vector<double> row(n);
            for (std::size_t i = begin; i < end; ++i) {
                std::copy_n(matrix.begin() + static_cast<std::ptrdiff_t>(i * n), n, row.begin());
                const RowBest cand{kth_smallest(row, k), i};
                if (better(cand, best[w])) best[w] = cand;
            }
        });
        RowBest winner = best.front();
        for (const auto& b : best) {
            if (better(b, winner)) winner = b;
        }
        chosen_row.assign(matrix.begin() + static_cast<std::ptrdiff_t>(winner.index * n),
                          matrix.begin() + static_cast<std::ptrdiff_t>((winner.index + 1) * n));
        best.front() = winner;
    } else {
        parallel_ranges(n, workers, [&](unsigned w, std::size_t begin, std::size_t end) {
            std::vector<double> row(n);
            for (std::size_t i = begin; i < end; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    row[j] = i == j ? 0.0 : metric(samples[i], samples[j]);
                }
                const RowBest cand{kth_smallest(row, k), i};
                if (better(cand, best[w])) best[w] = cand;
            }
        });
        RowBest winner = best.front();
        for (const auto& b : best) {
            if (better(b, winner)) winner = b;
        }
        chosen_row.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            chosen_row[j] = winner.index == j ? 0.0 : metric(samples[winner.index], samples[j]);
        }
        best.front() = winner;
    }

    const RowBest& winner = best.front();
    return BallEstimate{samples[winner.index], winner.radius, winner.index,
                        static_cast<double>(count_within(chosen_row, winner.radius)) / static_cast<double>(n)};
}

BallEstimate exact_meb_discrete(std::span<const OutputPoint> samples, std::span<const OutputPoint> candidates,
                                const Metric& metric) {
    if (samples.empty() || candidates.empty()) {
        throw DomainError("exact_meb_discrete: samples and candidates must be non-empty");
    }
    const std::size_t n = samples.size();
    const std::size_t need = half_cover(n);

    std::vector<std::vector<double>> table(candidates.size(), std::vector<double>(n));
    std::vector<double> radii;
    radii.reserve(candidates.size() * n);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        for (std::size_t s = 0; s < n; ++s) {
            table[c][s] = metric(candidates[c], samples[s]);
            radii.push_back(table[c][s]);
        }
    }
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

    auto first_covering = [&](double r) -> std::optional<std::size_t> {
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (count_within(table[c], r) >= need) return c;
        }
        return std::nullopt;
    };

    // Coverage is monotone in r, so binary search the smallest feasible radius.
    std::size_t lo = 0;
    std::size_t hi = radii.size() - 1;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (first_covering(radii[mid])) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    const double radius = radii[lo];
    const std::size_t c = *first_covering(radius);
    return BallEstimate{candidates[c], radius, c,
                        static_cast<double>(count_within(table[c], radius)) / static_cast<double>(n)};
}

BallEstimate candidate_center_select(std::span<const OutputPoint> candidates, const BatchSource& stream,
                                     const Metric& metric) {
    if (candidates.empty()) {
        throw DomainError("candidate_center_select: no candidates");
    }
    std::vector<std::vector<double>> distances(candidates.size());
    while (auto batch = stream()) {
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            for (const auto& z : *batch) {
                distances[c].push_back(metric(candidates[c], z));
            }
        }
    }
    const std::size_t n = distances.front().size();
    if (n == 0) {
        throw DomainError("candidate_center_select: empty sample stream");
    }
    const std::size_t k = half_cover(n);

    RowBest winner;
    std::vector<double> row;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        row = distances[c];
        const RowBest cand{kth_smallest(row, k), c};
        if (better(cand, winner)) winner = cand;
    }
    return BallEstimate{candidates[winner.index], winner.radius, winner.index,
                        static_cast<double>(count_within(distances[winner.index], winner.radius)) /
                            static_cast<double>(n)};
}

}  // namespace csmooth
