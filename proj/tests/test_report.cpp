#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "center_smoothing/errors.hpp"
#include "center_smoothing/report.hpp"

using namespace csmooth;

namespace {

std::filesystem::path tmp(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("csmooth_report_" + name);
}

SmoothingConfig cfg_small() {
    SmoothingConfig cfg;
    cfg.n = 5000;
    cfg.m = 20000;
    cfg.seed = 31;
    return cfg;
}

std::vector<SweepRecord> sample_records() {
    SweepRecord r;
    r.task = "identity";
    r.eps1 = 0.5;
    r.h = 2;
    r.sigma = 0.25;
    r.n = 5000;
    r.m = 20000;
    r.delta = 0.05;
    r.alpha = 0.01;
    r.rows.push_back({0, RowStatus::certified, 1.0 / 3.0, 1.0 / 9.0, 0.8123456789012345, 0.83, 0.0123});
    r.rows.push_back({1, RowStatus::abstained, std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt});
    r.rows.push_back({2, RowStatus::infeasible, std::nullopt, std::nullopt, 0.99, std::nullopt, std::nullopt});
    return {summarize_cell(r)};
}

}  // namespace

TEST_CASE("summarize_cell uses the lower median over certified rows") {
    SweepRecord r;
    for (std::size_t i = 0; i < 4; ++i) r.rows.push_back({i, RowStatus::certified, double(4 - i), 1.0, 0.9, 0.91, double(i)});
    r.rows.push_back({4, RowStatus::abstained, std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt});
    auto s = summarize_cell(r);
    CHECK(s.median_eps2 == 2.0);
    CHECK(s.median_smoothing_error == 1.0);
    CHECK(s.abstention_count == 1);
    SweepRecord none;
    none.rows.push_back({0, RowStatus::abstained, std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt});
    CHECK_FALSE(summarize_cell(none).median_eps2.has_value());
}

TEST_CASE("CSV and JSON round-trip") {
    auto records = sample_records();
    nlohmann::json config = {{"task", "identity"}, {"seed", 31}};
    for (auto fmt : {ReportFormat::csv, ReportFormat::json}) {
        auto path = tmp(fmt == ReportFormat::csv ? "rt.csv" : "rt.json");
        write_report(records, fmt, path, config);
        auto loaded = read_report(path, fmt);
        CHECK(loaded.records == records);
        CHECK(loaded.config == config);
        std::filesystem::remove(path);
    }
}

TEST_CASE("CSV layout: header, sentinels, one line per row") {
    auto records = sample_records();
    records[0].rows.resize(1);
    records[0] = summarize_cell(records[0]);
    auto path = tmp("layout.csv");
    write_report(records, ReportFormat::csv, path);
    std::ifstream in(path);
    std::vector<std::string> data;
    std::string line, header;
    while (std::getline(in, line)) {
        if (line.starts_with("#")) continue;
        if (header.empty()) header = line; else data.push_back(line);
    }
    CHECK(header == csv_header);
    CHECK(data.size() == 1);

    auto abst = sample_records();
    write_report(abst, ReportFormat::csv, path);
    std::ifstream in2(path);
    bool saw_abstained = false;
    while (std::getline(in2, line)) {
        if (line.ends_with(",1")) {
            saw_abstained = true;
            // eps2 is the 10th column and must be empty
            std::size_t pos = 0;
            for (int i = 0; i < 9; ++i) pos = line.find(',', pos) + 1;
            CHECK(line[pos] == ',');
        }
    }
    CHECK(saw_abstained);
    auto jpath = tmp("layout.json");
    write_report(abst, ReportFormat::json, jpath);
    auto j = nlohmann::json::parse(std::ifstream(jpath));
    CHECK(j["records"][0]["rows"][1]["eps2"].is_null());
    std::filesystem::remove(path);
    std::filesystem::remove(jpath);
}

TEST_CASE("write_report names the path on failure") {
    try {
        write_report(sample_records(), ReportFormat::csv, "/nonexistent-dir/x.csv");
        FAIL("expected Error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("/nonexistent-dir/x.csv") != std::string::npos);
    }
    CHECK_THROWS_AS(report_format_from_string("xml"), DomainError);
}

TEST_CASE("run_sweep on a constant function") {
    auto f = make_constant(RealVector{{1.0}}, 2);
    SweepSpec spec{"constant", {0.5, 0.25}, {2.0, 1.0}, {{{0, 0}}, {{1, 1}}}};
    auto recs = run_sweep(*f, Metric::l2(), spec, cfg_small());
    REQUIRE(recs.size() == 4);
    CHECK(recs[0].eps1 == 0.25);
    CHECK(recs[0].h == 1.0);
    CHECK(recs[1].h == 2.0);
    for (const auto& r : recs) {
        CHECK(r.median_eps2 == 0.0);
        CHECK(r.sigma == doctest::Approx(r.eps1 / r.h));
        CHECK(r.rows.size() == 2);
    }
}

TEST_CASE("run_sweep: single cell equals the lone certificate") {
    auto f = make_identity(2);
    auto cfg = cfg_small();
    SweepSpec spec{"identity", {0.5}, {2.0}, {{{0.2, 0.3}}}};
    auto recs = run_sweep(*f, Metric::l2(), spec, cfg);
    REQUIRE(recs.size() == 1);
    auto c = cfg;
    c.sigma = 0.25;
    c.seed = derive_seed(cfg.seed, 0);
    auto cert = certify(*f, spec.inputs[0], 0.5, Metric::l2(), c);
    CHECK(recs[0].rows[0] == row_from_certificate(0, cert, recs[0].rows[0].smoothing_error));
    if (cert.abstained) CHECK_FALSE(recs[0].median_eps2.has_value());
    else CHECK(recs[0].median_eps2 == cert.eps2);
}

TEST_CASE("run_sweep: identity eps2 nondecreasing in eps1; infeasible recorded") {
    auto f = make_identity(2);
    SweepSpec spec{"identity", {0.2, 0.4, 0.6, 0.8, 1.0}, {2.0}, {{{0.1, 0.1}}, {{0.5, 0.2}}, {{0.9, 0.4}}}};
    auto recs = run_sweep(*f, Metric::l2(), spec, cfg_small());
    REQUIRE(recs.size() == 5);
    for (std::size_t i = 1; i < recs.size(); ++i) CHECK(*recs[i].median_eps2 >= *recs[i - 1].median_eps2);

    SweepSpec bad{"identity", {0.5}, {10.0}, {{{0, 0}}}};
    auto b = run_sweep(*f, Metric::l2(), bad, cfg_small());
    CHECK(b[0].rows[0].status == RowStatus::infeasible);
    SweepSpec invalid{"identity", {0.5}, {-1.0}, {{{0, 0}}}};
    CHECK_THROWS_AS(invalid.validate(), DomainError);
}
