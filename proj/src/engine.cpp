#include "center_smoothing/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "center_smoothing/errors.hpp"

namespace csmooth {

namespace {

// Tracks how many output points the pipeline holds at once.
class ResidentGauge {
public:
    void acquire(std::size_t count) {
        current_ += count;
        peak_ = std::max(peak_, current_);
    }
    void release(std::size_t count) { current_ -= std::min(count, current_); }
    std::size_t peak() const noexcept { return peak_; }

private:
    std::size_t current_ = 0;
    std::size_t peak_ = 0;
};

void check_input(const BaseFunction& f, const InputPoint& x) {
    if (auto k = f.input_dimension(); k && *k != x.dimension()) {
        throw DimensionMismatch("input has dimension " + std::to_string(x.dimension()) +
                                ", function expects " + std::to_string(*k));
    }
    for (double v : x.values) {
        if (!std::isfinite(v)) {
            throw DomainError("input point has a non-finite coordinate");
        }
    }
}

NoiseSpec noise_for(const InputPoint& x, const SmoothingConfig& cfg, std::uint64_t stream) {
    return NoiseSpec{cfg.sigma, cfg.seed, x.dimension(), stream};
}

// Samples f(x + noise) for indices [first, first + count) of a stream.
std::vector<OutputPoint> sample_outputs(const BaseFunction& f, const InputPoint& x, const NoiseSpec& noise,
                                        std::size_t count, std::uint64_t first, unsigned workers) {
    const auto inputs = gaussian_perturb(x, noise, count, first);
    return evaluate_batch(f, inputs, workers);
}

// Calls visit(batch) on consecutive batches covering `total` samples.
template <class Visit>
void for_each_batch(const BaseFunction& f, const InputPoint& x, const NoiseSpec& noise, std::uint64_t total,
                    std::uint64_t batch_size, unsigned workers, ResidentGauge& gauge, Visit&& visit) {
    for (std::uint64_t first = 0; first < total; first += batch_size) {
        const auto count = static_cast<std::size_t>(std::min(batch_size, total - first));
        auto batch = sample_outputs(f, x, noise, count, first, workers);
        gauge.acquire(batch.size());
        visit(batch);
        gauge.release(batch.size());
    }
}

// Fresh-batch coverage test shared by both smoothing modes.
void finish_smoothing(const BaseFunction& f, const InputPoint& x, const Metric& metric,
                      const SmoothingConfig& cfg, ResidentGauge& gauge, SmoothResult& result) {
    std::uint64_t inside = 0;
    for_each_batch(f, x, noise_for(x, cfg, streams::fresh), cfg.n, cfg.batch_size, cfg.workers, gauge,
                   [&](const std::vector<OutputPoint>& batch) {
                       for (const auto& z : batch) {
                           if (metric(result.center, z) <= result.approx_radius) ++inside;
                       }
                   });
    result.rho = static_cast<double>(inside) / static_cast<double>(cfg.n);
    result.p_delta1 = result.rho - result.delta1;
    result.delta2 = 0.5 - result.p_delta1;
    result.abstained = cfg.delta.value() < std::max(result.delta1, result.delta2);
    result.seed_trace.streams.push_back(streams::fresh);
    result.peak_resident_outputs = gauge.peak();
}

}  // namespace

void SmoothingConfig::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw DomainError("sigma must be positive and finite");
    }
    if (n == 0 || m == 0) {
        throw DomainError("n and m must be at least 1");
    }
    ConfidenceBudget{alpha1, alpha2};
    if (n0 == 0) {
        throw DomainError("n0 must be at least 1");
    }
    if (batch_size == 0) {
        throw DomainError("batch_size must be at least 1");
    }
}

SmoothResult smooth(const BaseFunction& f, const InputPoint& x, const Metric& metric,
                    const SmoothingConfig& cfg) {
    cfg.validate();
    if (cfg.mode != SmoothingMode::standard) {
        throw DomainError("smooth: configuration selects high-dimensional mode; use smooth_hd");
    }
    check_input(f, x);

    SmoothResult result;
    result.seed_trace.seed = cfg.seed;
    result.delta1 = hoeffding_delta(cfg.n, cfg.alpha1);
    ResidentGauge gauge;
    {
        std::vector<OutputPoint> samples;
        samples.reserve(cfg.n);
        const auto noise = noise_for(x, cfg, streams::smoothing);
        for (std::uint64_t first = 0; first < cfg.n; first += cfg.batch_size) {
            const auto count = static_cast<std::size_t>(std::min(cfg.batch_size, cfg.n - first));
            auto batch = sample_outputs(f, x, noise, count, first, cfg.workers);
            gauge.acquire(batch.size());
            std::move(batch.begin(), batch.end(), std::back_inserter(samples));
        }
        const BallEstimate ball = min_median_center(samples, metric, cfg.workers);
        result.center = ball.center;
        result.approx_radius = ball.radius;
        result.center_index = ball.center_index;
        gauge.release(samples.size());
        gauge.acquire(1);  // the retained center
        result.seed_trace.streams.push_back(streams::smoothing);
    }
    finish_smoothing(f, x, metric, cfg, gauge, result);
    return result;
}

SmoothResult smooth_hd(const BaseFunction& f, const InputPoint& x, const Metric& metric,
                       const SmoothingConfig& cfg) {
    cfg.validate();
    if (cfg.mode != SmoothingMode::high_dimensional) {
        throw DomainError("smooth_hd: configuration selects standard mode; use smooth");
    }
    check_input(f, x);

    SmoothResult result;
    result.seed_trace.seed = cfg.seed;
    result.delta1 = hoeffding_delta(cfg.n, cfg.alpha1);
    ResidentGauge gauge;
    {
        std::vector<OutputPoint> candidates;
        candidates.reserve(cfg.n0);
        const auto cand_noise = noise_for(x, cfg, streams::candidates);
        for (std::uint64_t first = 0; first < cfg.n0; first += cfg.batch_size) {
            const auto count = static_cast<std::size_t>(std::min(cfg.batch_size, cfg.n0 - first));
            auto batch = sample_outputs(f, x, cand_noise, count, first, cfg.workers);
            gauge.acquire(batch.size());
            std::move(batch.begin(), batch.end(), std::back_inserter(candidates));
        }

        const auto noise = noise_for(x, cfg, streams::smoothing);
        std::uint64_t next = 0;
        std::size_t held = 0;
        const BatchSource source = [&]() -> std::optional<std::vector<OutputPoint>> {
            gauge.release(held);
            held = 0;
            if (next >= cfg.n) {
                return std::nullopt;
            }
            const auto count = static_cast<std::size_t>(std::min(cfg.batch_size, cfg.n - next));
            auto batch = sample_outputs(f, x, noise, count, next, cfg.workers);
            next += count;
            held = batch.size();
            gauge.acquire(held);
            return batch;
        };
        const BallEstimate ball = candidate_center_select(candidates, source, metric);
        result.center = ball.center;
        result.approx_radius = ball.radius;
        result.center_index = ball.center_index;
        gauge.release(candidates.size());
        gauge.acquire(1);
        result.seed_trace.streams.push_back(streams::candidates);
        result.seed_trace.streams.push_back(streams::smoothing);
    }
    finish_smoothing(f, x, metric, cfg, gauge, result);
    return result;
}

SmoothResult smooth_any(const BaseFunction& f, const InputPoint& x, const Metric& metric,
                        const SmoothingConfig& cfg) {
    return cfg.mode == SmoothingMode::standard ? smooth(f, x, metric, cfg) : smooth_hd(f, x, metric, cfg);
}

double certified_radius_factor(double gamma, SmoothingMode mode) noexcept {
    if (gamma == 1.0 && mode == SmoothingMode::standard) {
        constexpr double beta = 2.0;
        return 1.0 + beta;
    }
    return gamma * (1.0 + 2.0 * gamma);
}

Certificate certify(const BaseFunction& f, const InputPoint& x, double eps1, const Metric& metric,
                    const SmoothingConfig& cfg) {
    if (!(eps1 >= 0.0) || !std::isfinite(eps1)) {
        throw DomainError("certify: eps1 must be finite and non-negative");
    }
    Certificate cert;
    cert.eps1 = eps1;
    cert.gamma = metric.gamma();
    cert.beta = 2.0 * cert.gamma;
    cert.alpha = cfg.alpha1 + cfg.alpha2;
    cert.config = cfg;
    cfg.validate();
    // q depends only on the configuration; an infeasible level fails before
    // any sampling.
    const Probability p = required_mass(cfg.delta, eps1, cfg.sigma);
    cert.p = p.value();
    const Probability q = quantile_level(p, cfg.m, cfg.alpha2);
    cert.q = q.value();

    cert.smoothed = smooth_any(f, x, metric, cfg);
    if (cert.smoothed.abstained) {
        cert.abstained = true;
        return cert;
    }

    std::vector<double> distances;
    distances.reserve(cfg.m);
    ResidentGauge gauge;
    for_each_batch(f, x, noise_for(x, cfg, streams::certification), cfg.m, cfg.batch_size, cfg.workers, gauge,
                   [&](const std::vector<OutputPoint>& batch) {
                       for (const auto& z : batch) {
                           distances.push_back(metric(cert.smoothed.center, z));
                       }
                   });
    cert.r_hat = empirical_quantile(distances, q);
    cert.eps2 = certified_radius_factor(cert.gamma, cfg.mode) * cert.r_hat;
    return cert;
}

double smoothing_error(const BaseFunction& f, const InputPoint& x, const SmoothResult& result,
                       const Metric& metric) {
    if (result.abstained) {
        throw AbstainedError("smoothing_error: the smoothed function abstained at this input");
    }
    return metric(f.evaluate(x), result.center);
}

ValidationReport validate_certificate(const BaseFunction& f, const InputPoint& x, const Certificate& cert,
                                      const Metric& metric, std::size_t trials,
                                      std::uint64_t perturbation_seed) {
    if (cert.abstained) {
        throw AbstainedError("validate_certificate: certificate is abstained");
    }
    ValidationReport report;
    report.eps2 = cert.eps2;
    if (trials == 0) {
        return report;
    }
    const std::size_t k = x.dimension();
    const std::size_t line_probes = trials >= 2 ? std::max<std::size_t>(1, trials / 5) : 0;
    const std::size_t sphere_probes = trials - line_probes;

    std::vector<double> worst_direction;
    double worst_distance = -1.0;
    std::uint64_t probe = 0;

    auto run_probe = [&](const std::vector<double>& direction, double radius) {
        InputPoint shifted = x;
        for (std::size_t j = 0; j < k; ++j) {
            shifted.values[j] += radius * direction[j];
        }
        SmoothingConfig cfg = cert.config;
        cfg.seed = derive_seed(perturbation_seed, streams::validation_seeds, probe++);
        const SmoothResult r = smooth_any(f, shifted, metric, cfg);
        ++report.trials;
        if (r.abstained) {
            ++report.abstentions;
            return -1.0;
        }
        const double d = metric(cert.smoothed.center, r.center);
        report.max_observed_distance = std::max(report.max_observed_distance, d);
        if (d > cert.eps2) {
            ++report.violations;
        }
        return d;
    };

    std::vector<double> direction(k);
    for (std::size_t t = 0; t < sphere_probes; ++t) {
        double norm = 0.0;
        for (std::uint64_t attempt = 0; norm == 0.0; ++attempt) {
            standard_normal_sample(perturbation_seed, streams::validation_directions,
                                   derive_seed(t, attempt), direction);
            norm = 0.0;
            for (double v : direction) norm += v * v;
            norm = std::sqrt(norm);
        }
        for (double& v : direction) v /= norm;
        const double d = run_probe(direction, cert.eps1);
        if (d > worst_distance) {
            worst_distance = d;
            worst_direction = direction;
        }
    }
    if (worst_direction.empty()) {
        worst_direction.assign(k, 0.0);
        if (k > 0) worst_direction.front() = 1.0;
    }
    for (std::size_t j = 1; j <= line_probes; ++j) {
        run_probe(worst_direction, cert.eps1 * static_cast<double>(j) / static_cast<double>(line_probes));
    }
    return report;
}

double baseline_l2_bound(double f_max_norm, double f_min_norm, double eps1, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw DomainError("baseline_l2_bound: sigma must be positive and finite");
    }
    if (!(f_min_norm >= 0.0) || !(f_max_norm >= f_min_norm) || !(eps1 >= 0.0)) {
        throw DomainError("baseline_l2_bound: need f_max_norm >= f_min_norm >= 0 and eps1 >= 0");
    }
    return (f_max_norm + f_min_norm) * std::erf(eps1 / (2.0 * std::numbers::sqrt2 * sigma));
}

}  // namespace csmooth
