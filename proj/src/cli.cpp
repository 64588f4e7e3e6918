#include "center_smoothing/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "center_smoothing/bridge.hpp"
#include "center_smoothing/errors.hpp"
#include "center_smoothing/report.hpp"

namespace csmooth::cli {

namespace {

unsigned effective_workers(const RunConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> parse_point(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            values.push_back(std::stod(item, &pos));
            if (item.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw DomainError("cannot parse input coordinate '" + item + "'");
        }
    }
    if (values.empty()) {
        throw DomainError("empty --input point");
    }
    return values;
}

BoxEmitterParams box_params(std::size_t k) {
    // Box centred on (x0, x1) whose width grows with the remaining coordinates.
    BoxEmitterParams p;
    p.matrix.assign(4, std::vector<double>(k, 0.0));
    const std::size_t ix = 0;
    const std::size_t iy = k > 1 ? 1 : 0;
    p.matrix[0][ix] = 1.0;
    p.matrix[1][iy] = 1.0;
    p.matrix[2][ix] = 1.0;
    p.matrix[3][iy] = 1.0;
    for (std::size_t j = 2; j < k; ++j) {
        p.matrix[2][j] = 0.1;
        p.matrix[3][j] = 0.1;
    }
    p.offset = {-0.25, -0.25, 0.25, 0.25};
    return p;
}

std::string default_metric_for(const std::string& task) {
    if (task == "box") return "jaccard";
    if (task == "blur") return "tvd";
    if (task == "discrete") return "discrete";
    return "l2";
}

int exit_for(std::size_t certified, std::size_t abstained, std::size_t infeasible) {
    if (certified > 0) return exit_ok;
    if (infeasible > 0 && abstained == 0) return exit_all_infeasible;
    return exit_all_abstained;
}

OutputKind kind_from_name(const std::string& name) {
    for (auto k : {OutputKind::vector, OutputKind::box, OutputKind::set, OutputKind::image, OutputKind::label}) {
        if (to_string(k) == name) return k;
    }
    throw DomainError("unknown bridge output kind '" + name + "'");
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j = {{"task", task},
                        {"metric", metric.value_or(default_metric_for(task))},
                        {"sigma", sigma ? nlohmann::json(*sigma) : nlohmann::json(nullptr)},
                        {"eps1", eps1},
                        {"h", h},
                        {"n", n},
                        {"m", m},
                        {"delta", delta},
                        {"alpha1", alpha1},
                        {"alpha2", alpha2},
                        {"n0", n0},
                        {"batch_size", batch_size},
                        {"seed", seed.value_or(0)},
                        {"mode", mode},
                        {"format", format},
                        {"workers", workers},
                        {"trials", trials},
                        {"slack", slack},
                        {"dim", dim},
                        {"num_inputs", num_inputs},
                        {"input_seed", input_seed},
                        {"input", input}};
    if (task == "blur") {
        j["image_h"] = image_h;
        j["image_w"] = image_w;
    }
    if (task == "bridge") {
        j["bridge_cmd"] = bridge_cmd;
        j["bridge_kind"] = bridge_kind;
        j["timeout_ms"] = timeout_ms;
    }
    return j;
}

Task resolve_task(const RunConfig& cfg) {
    const Metric metric = Metric::from_id(cfg.metric.value_or(default_metric_for(cfg.task)));
    const std::size_t k = cfg.dim;
    if (k == 0) {
        throw DomainError("dim must be at least 1");
    }
    if (cfg.task == "identity") {
        return {make_identity(k), metric, k};
    }
    if (cfg.task == "constant") {
        return {make_constant(RealVector{std::vector<double>(k, 0.5)}, k), metric, k};
    }
    if (cfg.task == "linear") {
        std::vector<std::vector<double>> a(k, std::vector<double>(k, 0.25));
        for (std::size_t i = 0; i < k; ++i) a[i][i] = 1.0;
        return {make_linear(std::move(a)), metric, k};
    }
    if (cfg.task == "box") {
        return {make_box_emitter(box_params(k)), metric, k};
    }
    if (cfg.task == "blur") {
        return {make_image_blur(cfg.image_h, cfg.image_w), metric, cfg.image_h * cfg.image_w};
    }
    if (cfg.task == "discrete") {
        std::vector<InputPoint> centers;
        for (double c : {0.2, 0.5, 0.8}) centers.push_back(InputPoint{std::vector<double>(k, c)});
        return {make_piecewise_discrete(std::move(centers), {0, 1, 2}), metric, k};
    }
    if (cfg.task.rfind("mlp:", 0) == 0) {
        auto f = make_mlp_from_file(cfg.task.substr(4));
        return {f, metric, f->input_dimension().value_or(k)};
    }
    if (cfg.task == "bridge") {
        if (cfg.bridge_cmd.empty()) {
            throw DomainError("task 'bridge' needs --bridge-cmd");
        }
        BridgeSpec spec;
        spec.argv = {"/bin/sh", "-c", cfg.bridge_cmd};
        spec.timeout = std::chrono::milliseconds(cfg.timeout_ms);
        spec.output_kind = kind_from_name(cfg.bridge_kind);
        spec.input_dimension = k;
        return {bridge_function(spec), metric, k};
    }
    throw DomainError("unknown task '" + cfg.task + "'");
}

std::vector<InputPoint> resolve_inputs(const RunConfig& cfg, std::size_t dimension) {
    std::vector<InputPoint> inputs;
    if (!cfg.input.empty()) {
        for (const auto& text : cfg.input) {
            InputPoint p{parse_point(text)};
            if (p.dimension() != dimension) {
                throw DomainError("--input point has dimension " + std::to_string(p.dimension()) + ", task needs " +
                                  std::to_string(dimension));
            }
            inputs.push_back(std::move(p));
        }
        return inputs;
    }
    if (cfg.num_inputs == 0) {
        throw DomainError("num_inputs must be at least 1");
    }
    std::mt19937_64 rng(cfg.input_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < cfg.num_inputs; ++i) {
        InputPoint p;
        p.values.resize(dimension);
        for (double& v : p.values) v = unit(rng);
        inputs.push_back(std::move(p));
    }
    return inputs;
}

SmoothingConfig to_smoothing_config(const RunConfig& cfg) {
    SmoothingConfig s;
    s.sigma = cfg.sigma.value_or(s.sigma);
    s.n = cfg.n;
    s.m = cfg.m;
    s.delta = MassMargin(cfg.delta);
    s.alpha1 = cfg.alpha1;
    s.alpha2 = cfg.alpha2;
    s.n0 = cfg.n0;
    s.batch_size = cfg.batch_size;
    s.seed = cfg.seed.value_or(0);
    if (cfg.mode == "standard") {
        s.mode = SmoothingMode::standard;
    } else if (cfg.mode == "hd") {
        s.mode = SmoothingMode::high_dimensional;
    } else {
        throw DomainError("mode must be 'standard' or 'hd'");
    }
    s.workers = effective_workers(cfg);
    s.validate();
    return s;
}

namespace {

double resolve_sigma(const RunConfig& cfg, std::optional<double> eps1) {
    if (cfg.sigma) return *cfg.sigma;
    if (eps1 && !cfg.h.empty()) return *eps1 / cfg.h.front();
    return SmoothingConfig{}.sigma;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

// Expands `--config <path>` into flags. File lines are `key = value` with the
// option name as key ('_' and '-' interchangeable); '#' starts a comment.
// Flags given on the command line take precedence over file entries.
std::vector<std::string> merge_config_file(std::vector<std::string> args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (!path) {
        return args;
    }
    std::ifstream in(*path);
    if (!in) {
        throw Error("cannot open config file " + *path);
    }
    auto given = [&](const std::string& key) {
        std::string dashed = key;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        std::string underscored = key;
        std::replace(underscored.begin(), underscored.end(), '-', '_');
        for (const auto& a : args) {
            for (const auto& name : {dashed, underscored}) {
                if (a == "--" + name || a.rfind("--" + name + "=", 0) == 0) return true;
            }
        }
        return false;
    };

    std::vector<std::string> extra;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(*path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        std::erase_if(value, [](char c) { return c == '"' || c == '[' || c == ']' || c == ' '; });
        if (key.empty() || key == "config") {
            throw Error(*path + ":" + std::to_string(lineno) + ": invalid key");
        }
        if (given(key)) continue;
        std::replace(key.begin(), key.end(), '_', '-');
        extra.push_back("--" + key);
        extra.push_back(value);
    }
    // Subcommand stays first; file values follow it.
    if (!args.empty()) {
        args.insert(args.begin() + 1, extra.begin(), extra.end());
    }
    return args;
}

}  // namespace

int cmd_smooth(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    const Task task = resolve_task(cfg);
    SmoothingConfig scfg = to_smoothing_config(cfg);
    scfg.sigma = resolve_sigma(cfg, cfg.eps1.empty() ? std::nullopt : std::optional(cfg.eps1.front()));
    scfg.validate();
    const auto inputs = resolve_inputs(cfg, task.input_dimension);

    nlohmann::json rows = nlohmann::json::array();
    std::size_t abstained = 0;
    out << "input_id,radius,rho,delta1,delta2,p_delta1,abstained\n";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        SmoothingConfig icfg = scfg;
        icfg.seed = derive_seed(scfg.seed, i);
        const SmoothResult r = smooth_any(*task.function, inputs[i], task.metric, icfg);
        abstained += r.abstained ? 1 : 0;
        out << i << ',' << r.approx_radius << ',' << r.rho << ',' << r.delta1 << ',' << r.delta2 << ','
            << r.p_delta1 << ',' << (r.abstained ? 1 : 0) << '\n';
        rows.push_back({{"input_id", i},
                        {"center", output_to_json(r.center)},
                        {"radius", r.approx_radius},
                        {"rho", r.rho},
                        {"delta1", r.delta1},
                        {"delta2", r.delta2},
                        {"p_delta1", r.p_delta1},
                        {"abstained", r.abstained}});
        log << "smoothed input " << i + 1 << "/" << inputs.size() << (r.abstained ? " (abstained)" : "") << '\n';
    }
    if (!cfg.out.empty()) {
        std::ofstream f(cfg.out);
        if (!f) throw Error("cannot write " + cfg.out);
        f << nlohmann::json{{"config", cfg.to_json()}, {"results", rows}}.dump(2) << '\n';
    }
    return abstained == inputs.size() ? exit_all_abstained : exit_ok;
}

int cmd_certify(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    const Task task = resolve_task(cfg);
    SmoothingConfig scfg = to_smoothing_config(cfg);
    const auto inputs = resolve_inputs(cfg, task.input_dimension);
    const std::vector<double> eps1_values = cfg.eps1.empty() ? std::vector<double>{0.5} : cfg.eps1;
    if (cfg.out.empty()) {
        throw DomainError("certify needs --out");
    }

    std::vector<SweepRecord> records;
    std::size_t certified = 0, abstained = 0, infeasible = 0;
    for (double eps1 : eps1_values) {
        SmoothingConfig cell = scfg;
        cell.sigma = resolve_sigma(cfg, eps1);
        cell.validate();
        SweepRecord record;
        record.task = cfg.task;
        record.eps1 = eps1;
        record.sigma = cell.sigma;
        record.h = eps1 / cell.sigma;
        record.n = cell.n;
        record.m = cell.m;
        record.delta = cell.delta.value();
        record.alpha = cell.alpha1 + cell.alpha2;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            cell.seed = derive_seed(scfg.seed, i);
            try {
                const Certificate cert = certify(*task.function, inputs[i], eps1, task.metric, cell);
                std::optional<double> err;
                if (!cert.abstained) {
                    err = smoothing_error(*task.function, inputs[i], cert.smoothed, task.metric);
                    ++certified;
                } else {
                    ++abstained;
                }
                record.rows.push_back(row_from_certificate(i, cert, err));
            } catch (const CertificationInfeasible& e) {
                ++infeasible;
                SweepRow row;
                row.input_id = i;
                row.status = RowStatus::infeasible;
                row.p = e.p();
                row.q = e.q();
                record.rows.push_back(row);
                log << "input " << i << ": " << e.what() << '\n';
            }
        }
        records.push_back(summarize_cell(std::move(record)));
        log << "certified eps1=" << eps1 << '\n';
    }
    write_report(records, report_format_from_string(cfg.format), cfg.out, cfg.to_json());
    out << "certified " << certified << ", abstained " << abstained << ", infeasible " << infeasible << '\n';
    return exit_for(certified, abstained, infeasible);
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    const Task task = resolve_task(cfg);
    const SmoothingConfig scfg = to_smoothing_config(cfg);
    if (cfg.out.empty()) {
        throw DomainError("sweep needs --out");
    }
    SweepSpec spec;
    spec.task = cfg.task;
    spec.eps1_values = cfg.eps1;
    spec.h_values = cfg.h;
    spec.inputs = resolve_inputs(cfg, task.input_dimension);
    spec.validate();

    const auto records = run_sweep(*task.function, task.metric, spec, scfg,
                                   [&](const std::string& msg) { log << msg << '\n'; });
    write_report(records, report_format_from_string(cfg.format), cfg.out, cfg.to_json());

    std::size_t certified = 0, abstained = 0, infeasible = 0;
    for (const auto& r : records) {
        for (const auto& row : r.rows) {
            switch (row.status) {
                case RowStatus::certified: ++certified; break;
                case RowStatus::abstained: ++abstained; break;
                case RowStatus::infeasible: ++infeasible; break;
            }
        }
        out << "eps1=" << r.eps1 << " h=" << r.h << " median_eps2="
            << (r.median_eps2 ? std::to_string(*r.median_eps2) : "null") << '\n';
    }
    return exit_for(certified, abstained, infeasible);
}

int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    const Task task = resolve_task(cfg);
    SmoothingConfig scfg = to_smoothing_config(cfg);
    const double eps1 = cfg.eps1.empty() ? 0.5 : cfg.eps1.front();
    scfg.sigma = resolve_sigma(cfg, eps1);
    scfg.validate();
    const auto inputs = resolve_inputs(cfg, task.input_dimension);

    std::size_t certified = 0, abstained = 0, infeasible = 0;
    std::size_t trials = 0, violations = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        SmoothingConfig icfg = scfg;
        icfg.seed = derive_seed(scfg.seed, i);
        try {
            const Certificate cert = certify(*task.function, inputs[i], eps1, task.metric, icfg);
            if (cert.abstained) {
                ++abstained;
                continue;
            }
            ++certified;
            const auto rep = validate_certificate(*task.function, inputs[i], cert, task.metric, cfg.trials,
                                                  derive_seed(scfg.seed, streams::validation_directions, i));
            trials += rep.trials;
            violations += rep.violations;
            rows.push_back({{"input_id", i},
                            {"eps2", cert.eps2},
                            {"trials", rep.trials},
                            {"violations", rep.violations},
                            {"abstentions", rep.abstentions},
                            {"max_observed_distance", rep.max_observed_distance}});
            log << "validated input " << i << ": " << rep.violations << "/" << rep.trials << " violations\n";
        } catch (const CertificationInfeasible& e) {
            ++infeasible;
            log << "input " << i << ": " << e.what() << '\n';
        }
    }
    if (certified == 0) {
        return exit_for(certified, abstained, infeasible);
    }
    const double fraction = trials == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(trials);
    const double limit = scfg.alpha1 + scfg.alpha2 + cfg.slack;
    const bool pass = fraction <= limit;
    out << "violations " << violations << "/" << trials << " (fraction " << fraction << ", limit " << limit
        << "): " << (pass ? "pass" : "FAIL") << '\n';
    if (!cfg.out.empty()) {
        std::ofstream f(cfg.out);
        if (!f) throw Error("cannot write " + cfg.out);
        f << nlohmann::json{{"config", cfg.to_json()},
                            {"violation_fraction", fraction},
                            {"limit", limit},
                            {"pass", pass},
                            {"inputs", rows}}
                 .dump(2)
          << '\n';
    }
    return pass ? exit_ok : exit_validation_failed;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
    CLI::App app{"Center smoothing: smoothed functions and certified output radii"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    RunConfig cfg;
    std::optional<std::uint64_t> seed_flag;
    std::string config_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Flat key = value file; keys are option names");
        sub->add_option("--task", cfg.task, "identity|constant|linear|box|blur|discrete|mlp:<path>|bridge");
        sub->add_option("--metric", cfg.metric, "l2|jaccard|tvd|angular|sqfeat|discrete");
        sub->add_option("--sigma", cfg.sigma, "Smoothing noise standard deviation");
        sub->add_option("--eps1", cfg.eps1, "Input perturbation radii")->delimiter(',');
        sub->add_option("--h", cfg.h, "Ratios eps1 / sigma")->delimiter(',');
        sub->add_option("--n", cfg.n, "Smoothing samples");
        sub->add_option("--m", cfg.m, "Certification samples");
        sub->add_option("--delta", cfg.delta, "Mass margin");
        sub->add_option("--alpha1", cfg.alpha1);
        sub->add_option("--alpha2", cfg.alpha2);
        sub->add_option("--n0", cfg.n0, "Candidate centers (hd mode)");
        sub->add_option("--batch-size,--batch_size", cfg.batch_size);
        sub->add_option("--seed", seed_flag, "Master seed (fallback: CENTER_SMOOTH_SEED)");
        sub->add_option("--mode", cfg.mode)->check(CLI::IsMember({"standard", "hd"}));
        sub->add_option("--out", cfg.out, "Output path");
        sub->add_option("--format", cfg.format)->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--workers", cfg.workers, "Worker threads (0: available parallelism)");
        sub->add_option("--bridge-cmd,--bridge_cmd", cfg.bridge_cmd, "Shell command of a bridged model");
        sub->add_option("--bridge-kind,--bridge_kind", cfg.bridge_kind, "Output kind of the bridged model");
        sub->add_option("--timeout-ms,--timeout_ms", cfg.timeout_ms, "Bridge per-request timeout");
        sub->add_option("--trials", cfg.trials, "Validation probes per input");
        sub->add_option("--slack", cfg.slack, "Allowed violation fraction above alpha");
        sub->add_option("--dim", cfg.dim, "Input dimension");
        sub->add_option("--num-inputs,--num_inputs", cfg.num_inputs, "Random inputs in [0,1]^dim");
        sub->add_option("--input-seed,--input_seed", cfg.input_seed);
        sub->add_option("--input", cfg.input, "Explicit input point, comma separated (repeatable)");
        sub->add_option("--image-h,--image_h", cfg.image_h);
        sub->add_option("--image-w,--image_w", cfg.image_w);
    };

    auto* smooth_cmd = app.add_subcommand("smooth", "Smooth each input and print the result");
    auto* certify_cmd = app.add_subcommand("certify", "Certify each input and write a report");
    auto* sweep_cmd = app.add_subcommand("sweep", "Certify over an (eps1, h) grid");
    auto* validate_cmd = app.add_subcommand("validate", "Certify, then probe the certificate by Monte Carlo");
    for (auto* sub : {smooth_cmd, certify_cmd, sweep_cmd, validate_cmd}) {
        add_common(sub);
    }

    std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
    try {
        args = merge_config_file(std::move(args));
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_config_error;
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        log << "error: " << e.what() << '\n';
        return exit_config_error;
    }

    cfg.seed = seed_flag;
    if (!cfg.seed) {
        if (const char* env = std::getenv("CENTER_SMOOTH_SEED")) {
            try {
                cfg.seed = std::stoull(env);
            } catch (const std::exception&) {
                log << "error: CENTER_SMOOTH_SEED is not an unsigned integer\n";
                return exit_config_error;
            }
        }
    }

    try {
        if (smooth_cmd->parsed()) return cmd_smooth(cfg, out, log);
        if (certify_cmd->parsed()) return cmd_certify(cfg, out, log);
        if (sweep_cmd->parsed()) return cmd_sweep(cfg, out, log);
        return cmd_validate(cfg, out, log);
    } catch (const DomainError& e) {
        log << "error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return exit_config_error;
    }
}

}  // namespace csmooth::cli
