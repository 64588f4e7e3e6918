#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "center_smoothing/base_functions.hpp"
#include "center_smoothing/engine.hpp"
#include "center_smoothing/metrics.hpp"

namespace csmooth::cli {

/// Stable process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 1,
    exit_all_abstained = 2,
    exit_all_infeasible = 3,
    exit_validation_failed = 4,
};

/// Everything a command needs, after merging the config file, flags and
/// environment.
struct RunConfig {
    std::string task = "identity";
    std::optional<std::string> metric;
    std::optional<double> sigma;
    std::vector<double> eps1;
    std::vector<double> h;
    std::uint64_t n = 10'000;
    std::uint64_t m = 1'000'000;
    double delta = 0.05;
    double alpha1 = 0.005;
    double alpha2 = 0.005;
    std::uint64_t n0 = 30;
    std::uint64_t batch_size = 1'000;
    std::optional<std::uint64_t> seed;
    std::string mode = "standard";
    std::string out;
    std::string format = "csv";
    unsigned workers = 0;  // 0: available parallelism
    std::string bridge_cmd;
    std::string bridge_kind = "vector";
    std::uint64_t timeout_ms = 30'000;
    std::size_t trials = 50;
    double slack = 0.05;
    std::size_t dim = 2;
    std::size_t num_inputs = 1;
    std::uint64_t input_seed = 7;
    std::vector<std::string> input;
    std::size_t image_h = 8;
    std::size_t image_w = 8;

    nlohmann::json to_json() const;
};

/// Resolved task: the function plus the metric it is certified under.
struct Task {
    BaseFunctionPtr function;
    Metric metric;
    std::size_t input_dimension;
};

/// Builds the function for a task id: identity, constant, linear, box, blur,
/// discrete, mlp:<path>, bridge. Throws DomainError for unknown ids.
Task resolve_task(const RunConfig& cfg);

/// Explicit --input points, or num_inputs uniform draws from [0, 1]^dim.
std::vector<InputPoint> resolve_inputs(const RunConfig& cfg, std::size_t dimension);

SmoothingConfig to_smoothing_config(const RunConfig& cfg);

int cmd_smooth(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_certify(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& log);

/// Parses argv (subcommand first) and dispatches. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace csmooth::cli
