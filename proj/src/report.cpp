#include "center_smoothing/report.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "center_smoothing/errors.hpp"

namespace csmooth {

namespace {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_real(*v) : std::string{};
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += ch;
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string quote_csv(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        else out += ch;
    }
    return out + "\"";
}

double parse_real(const std::string& s, const std::string& what) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw DomainError("report: cannot parse " + what + " from '" + s + "'");
    }
    return v;
}

std::optional<double> parse_optional(const std::string& s, const std::string& what) {
    if (s.empty()) return std::nullopt;
    return parse_real(s, what);
}

std::uint64_t parse_count(const std::string& s, const std::string& what) {
    std::size_t pos = 0;
    try {
        const auto v = std::stoull(s, &pos);
        if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw DomainError("report: cannot parse " + what + " from '" + s + "'");
}

nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

std::string_view status_name(RowStatus s) {
    switch (s) {
        case RowStatus::certified: return "certified";
        case RowStatus::abstained: return "abstained";
        case RowStatus::infeasible: return "infeasible";
    }
    return "certified";
}

RowStatus status_from_name(const std::string& s) {
    if (s == "certified") return RowStatus::certified;
    if (s == "abstained") return RowStatus::abstained;
    if (s == "infeasible") return RowStatus::infeasible;
    throw DomainError("report: unknown row status '" + s + "'");
}

void sort_canonical(std::vector<SweepRecord>& records) {
    for (auto& r : records) {
        std::sort(r.rows.begin(), r.rows.end(),
                  [](const SweepRow& a, const SweepRow& b) { return a.input_id < b.input_id; });
    }
    std::stable_sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
        return std::tie(a.eps1, a.h) < std::tie(b.eps1, b.h);
    });
}

}  // namespace

void SweepSpec::validate() const {
    if (eps1_values.empty() || h_values.empty() || inputs.empty()) {
        throw DomainError("sweep: eps1 values, h values and inputs must be non-empty");
    }
    for (double e : eps1_values) {
        if (!(e > 0.0) || !std::isfinite(e)) {
            throw DomainError("sweep: eps1 values must be positive (sigma = eps1 / h)");
        }
    }
    for (double h : h_values) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw DomainError("sweep: h values must be positive and finite");
        }
    }
}

SweepRecord summarize_cell(SweepRecord record) {
    std::vector<double> eps2s;
    std::vector<double> errors;
    record.abstention_count = 0;
    for (const auto& row : record.rows) {
        if (row.status == RowStatus::abstained) {
            ++record.abstention_count;
        }
        if (row.status == RowStatus::certified) {
            if (row.eps2) eps2s.push_back(*row.eps2);
            if (row.smoothing_error) errors.push_back(*row.smoothing_error);
        }
    }
    record.median_eps2 = eps2s.empty() ? std::nullopt : std::optional(lower_median(eps2s));
    record.median_smoothing_error = errors.empty() ? std::nullopt : std::optional(lower_median(errors));
    return record;
}

SweepRow row_from_certificate(std::size_t input_id, const Certificate& cert,
                              std::optional<double> smoothing_err) {
    SweepRow row;
    row.input_id = input_id;
    if (cert.abstained) {
        row.status = RowStatus::abstained;
        return row;
    }
    row.status = RowStatus::certified;
    row.eps2 = cert.eps2;
    row.r_hat = cert.r_hat;
    row.p = cert.p;
    row.q = cert.q;
    row.smoothing_error = smoothing_err;
    return row;
}

std::vector<SweepRecord> run_sweep(const BaseFunction& f, const Metric& metric, const SweepSpec& spec,
                                   const SmoothingConfig& cfg, const ProgressFn& progress) {
    spec.validate();
    std::vector<SweepRecord> records;
    for (double eps1 : spec.eps1_values) {
        for (double h : spec.h_values) {
            SweepRecord record;
            record.task = spec.task;
            record.eps1 = eps1;
            record.h = h;
            record.sigma = eps1 / h;
            record.n = cfg.n;
            record.m = cfg.m;
            record.delta = cfg.delta.value();
            record.alpha = cfg.alpha1 + cfg.alpha2;

            SmoothingConfig cell = cfg;
            cell.sigma = record.sigma;
            for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
                cell.seed = derive_seed(cfg.seed, i);
                try {
                    const Certificate cert = certify(f, spec.inputs[i], eps1, metric, cell);
                    std::optional<double> err;
                    if (!cert.abstained) {
                        err = smoothing_error(f, spec.inputs[i], cert.smoothed, metric);
                    }
                    record.rows.push_back(row_from_certificate(i, cert, err));
                } catch (const CertificationInfeasible& e) {
                    SweepRow row;
                    row.input_id = i;
                    row.status = RowStatus::infeasible;
                    row.p = e.p();
                    row.q = e.q();
                    record.rows.push_back(row);
                }
            }
            record = summarize_cell(std::move(record));
            if (progress) {
                char label[64];
                std::snprintf(label, sizeof label, "cell eps1=%g h=%g: ", eps1, h);
                progress(label +
                         std::to_string(record.abstention_count) + " abstained of " +
                         std::to_string(record.rows.size()));
            }
            records.push_back(std::move(record));
        }
    }
    sort_canonical(records);
    return records;
}

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    throw DomainError("unknown report format '" + name + "' (expected csv or json)");
}

void write_report(const std::vector<SweepRecord>& records, ReportFormat format, const std::filesystem::path& path,
                  const nlohmann::json& config) {
    if (records.empty()) {
        throw DomainError("write_report: no records");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("write_report: cannot open " + path.string() + ": " + std::strerror(errno));
    }

    if (format == ReportFormat::json) {
        nlohmann::json doc;
        doc["config"] = config;
        doc["median"] = "lower (ceil(k/2)-th order statistic over certified rows)";
        auto& arr = doc["records"] = nlohmann::json::array();
        for (const auto& r : records) {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& row : r.rows) {
                rows.push_back({{"input_id", row.input_id},
                                {"status", status_name(row.status)},
                                {"abstained", row.status == RowStatus::abstained},
                                {"eps2", optional_json(row.eps2)},
                                {"r_hat", optional_json(row.r_hat)},
                                {"p", optional_json(row.p)},
                                {"q", optional_json(row.q)},
                                {"smoothing_error", optional_json(row.smoothing_error)}});
            }
            arr.push_back({{"task", r.task},
                           {"eps1", r.eps1},
                           {"h", r.h},
                           {"sigma", r.sigma},
                           {"n", r.n},
                           {"m", r.m},
                           {"delta", r.delta},
                           {"alpha", r.alpha},
                           {"median_eps2", optional_json(r.median_eps2)},
                           {"median_smoothing_error", optional_json(r.median_smoothing_error)},
                           {"abstention_count", r.abstention_count},
                           {"rows", std::move(rows)}});
        }
        out << doc.dump(2) << '\n';
    } else {
        out << "# medians: lower median (ceil(k/2)-th order statistic) over certified rows;"
               " empty eps2 with abstained=0 marks q >= 1\n";
        out << "# config: " << config.dump() << '\n';
        out << csv_header << '\n';
        for (const auto& r : records) {
            for (const auto& row : r.rows) {
                out << quote_csv(r.task) << ',' << format_real(r.eps1) << ',' << format_real(r.h) << ','
                    << format_real(r.sigma) << ',' << r.n << ',' << r.m << ',' << format_real(r.delta) << ','
                    << format_real(r.alpha) << ',' << row.input_id << ',' << format_optional(row.eps2) << ','
                    << format_optional(row.r_hat) << ',' << format_optional(row.p) << ','
                    << format_optional(row.q) << ',' << format_optional(row.smoothing_error) << ','
                    << (row.status == RowStatus::abstained ? 1 : 0) << '\n';
            }
        }
    }
    out.flush();
    if (!out) {
        throw Error("write_report: write to " + path.string() + " failed");
    }
}

LoadedReport read_report(const std::filesystem::path& path, ReportFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("read_report: cannot open " + path.string() + ": " + std::strerror(errno));
    }
    LoadedReport loaded;
    if (format == ReportFormat::json) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
            loaded.config = doc.value("config", nlohmann::json::object());
            for (const auto& jr : doc.at("records")) {
                SweepRecord r;
                r.task = jr.at("task").get<std::string>();
                r.eps1 = jr.at("eps1").get<double>();
                r.h = jr.at("h").get<double>();
                r.sigma = jr.at("sigma").get<double>();
                r.n = jr.at("n").get<std::uint64_t>();
                r.m = jr.at("m").get<std::uint64_t>();
                r.delta = jr.at("delta").get<double>();
                r.alpha = jr.at("alpha").get<double>();
                r.median_eps2 = optional_from_json(jr.at("median_eps2"));
                r.median_smoothing_error = optional_from_json(jr.at("median_smoothing_error"));
                r.abstention_count = jr.at("abstention_count").get<std::size_t>();
                for (const auto& jrow : jr.at("rows")) {
                    SweepRow row;
                    row.input_id = jrow.at("input_id").get<std::size_t>();
                    row.status = status_from_name(jrow.at("status").get<std::string>());
                    row.eps2 = optional_from_json(jrow.at("eps2"));
                    row.r_hat = optional_from_json(jrow.at("r_hat"));
                    row.p = optional_from_json(jrow.at("p"));
                    row.q = optional_from_json(jrow.at("q"));
                    row.smoothing_error = optional_from_json(jrow.at("smoothing_error"));
                    r.rows.push_back(row);
                }
                loaded.records.push_back(std::move(r));
            }
        } catch (const nlohmann::json::exception& e) {
            throw DomainError("read_report: malformed JSON in " + path.string() + ": " + e.what());
        }
        return loaded;
    }

    std::string line;
    bool header_seen = false;
    std::map<std::tuple<double, double, std::string>, SweepRecord> cells;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string prefix = "# config: ";
            if (line.rfind(prefix, 0) == 0) {
                loaded.config = nlohmann::json::parse(line.substr(prefix.size()), nullptr, false);
            }
            continue;
        }
        if (!header_seen) {
            if (line != csv_header) {
                throw DomainError("read_report: unexpected CSV header in " + path.string());
            }
            header_seen = true;
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 15) {
            throw DomainError("read_report: expected 15 fields, got " + std::to_string(f.size()));
        }
        SweepRecord proto;
        proto.task = f[0];
        proto.eps1 = parse_real(f[1], "eps1");
        proto.h = parse_real(f[2], "h");
        auto& cell = cells.try_emplace({proto.eps1, proto.h, proto.task}, proto).first->second;
        cell.sigma = parse_real(f[3], "sigma");
        cell.n = parse_count(f[4], "n");
        cell.m = parse_count(f[5], "m");
        cell.delta = parse_real(f[6], "delta");
        cell.alpha = parse_real(f[7], "alpha");

        SweepRow row;
        row.input_id = parse_count(f[8], "input_id");
        row.eps2 = parse_optional(f[9], "eps2");
        row.r_hat = parse_optional(f[10], "r_hat");
        row.p = parse_optional(f[11], "p");
        row.q = parse_optional(f[12], "q");
        row.smoothing_error = parse_optional(f[13], "smoothing_error");
        if (f[14] == "1") {
            row.status = RowStatus::abstained;
        } else if (f[14] == "0") {
            row.status = row.eps2 ? RowStatus::certified : RowStatus::infeasible;
        } else {
            throw DomainError("read_report: abstained must be 0 or 1");
        }
        cell.rows.push_back(row);
    }
    for (auto& [key, record] : cells) {
        loaded.records.push_back(summarize_cell(std::move(record)));
    }
    sort_canonical(loaded.records);
    return loaded;
}

}  // namespace csmooth
