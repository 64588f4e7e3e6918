#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "center_smoothing/engine.hpp"

namespace csmooth {

/// Grid of (eps1, h) cells evaluated over the same inputs. Each cell uses
/// sigma = eps1 / h.
struct SweepSpec {
    std::string task;
    std::vector<double> eps1_values;
    std::vector<double> h_values;
    std::vector<InputPoint> inputs;

    void validate() const;
};

enum class RowStatus { certified, abstained, infeasible };

/// One input within one cell.
struct SweepRow {
    std::size_t input_id = 0;
    RowStatus status = RowStatus::certified;
    std::optional<double> eps2;
    std::optional<double> r_hat;
    std::optional<double> p;
    std::optional<double> q;
    std::optional<double> smoothing_error;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepRecord {
    std::string task;
    double eps1 = 0.0;
    double h = 0.0;
    double sigma = 0.0;
    std::uint64_t n = 0;
    std::uint64_t m = 0;
    double delta = 0.0;
    double alpha = 0.0;
    /// Lower medians over certified rows; empty when no row was certified.
    std::optional<double> median_eps2;
    std::optional<double> median_smoothing_error;
    std::size_t abstention_count = 0;
    std::vector<SweepRow> rows;

    friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

/// Builds a record from finished rows: fills medians and the abstention count.
SweepRecord summarize_cell(SweepRecord record);

/// Row for a finished certify call at input `input_id`.
SweepRow row_from_certificate(std::size_t input_id, const Certificate& cert, std::optional<double> smoothing_err);

using ProgressFn = std::function<void(const std::string&)>;

/// One record per (eps1, h) cell, sorted by eps1 then h, rows by input id.
/// Input i uses seed derive_seed(cfg.seed, i) in every cell, so cells share
/// their noise draws. Infeasible inputs are recorded, not thrown.
std::vector<SweepRecord> run_sweep(const BaseFunction& f, const Metric& metric, const SweepSpec& spec,
                                   const SmoothingConfig& cfg, const ProgressFn& progress = {});

enum class ReportFormat { csv, json };

ReportFormat report_format_from_string(const std::string& name);

/// Writes records; `config` is embedded verbatim (CSV: a '#' comment line).
/// Throws Error naming the path on I/O failure.
void write_report(const std::vector<SweepRecord>& records, ReportFormat format,
                  const std::filesystem::path& path, const nlohmann::json& config = nlohmann::json::object());

struct LoadedReport {
    std::vector<SweepRecord> records;
    nlohmann::json config;
};

LoadedReport read_report(const std::filesystem::path& path, ReportFormat format);

inline constexpr const char* csv_header =
    "task,eps1,h,sigma,n,m,delta,alpha,input_id,eps2,r_hat,p,q,smoothing_error,abstained";

}  // namespace csmooth
