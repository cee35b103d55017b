#include "egle/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "egle/io.hpp"
#include "egle/report_json.hpp"
#include "egle/rng.hpp"

namespace egle::harness {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Built-in four-component demo noise: means (-0.002, 0, 0.005, 0.008),
// std 0.001 each, weights (0.1, 0.2, 0.5, 0.2).
const gmm::GmmSpec kBicDemoSpec{{0.1, 0.2, 0.5, 0.2},
                                {-0.002, 0.0, 0.005, 0.008},
                                {1e-6, 1e-6, 1e-6, 1e-6}};

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string format = "json";
};

ToolConfig resolve_config(const GlobalOptions& opts) {
    ToolConfig cfg = opts.config_path.empty() ? default_config() : load_config_file(opts.config_path);
    if (opts.seed) {
        cfg.mc.scenario.seed = *opts.seed;
        cfg.mc.base_seed = *opts.seed;
    }
    return cfg;
}

fs::path prepare_out_dir(const GlobalOptions& opts) {
    fs::path dir(opts.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json truth_json(const tlpe::ScenarioConfig& scenario) {
    const auto y = tlpe::line_params_to_y(scenario.true_params);
    return json{{"schema_version", kReportSchemaVersion},
                {"kind", "ground_truth"},
                {"line_params",
                 {{"r", scenario.true_params.r},
                  {"x", scenario.true_params.x},
                  {"b", scenario.true_params.b}}},
                {"y", {y.y1, y.y2, y.y3, y.y4}},
                {"noise_c", spec_json(scenario.noise_c)},
                {"noise_D", spec_json(scenario.noise_D)},
                {"seed", scenario.seed},
                {"s", scenario.s}};
}

std::optional<tlpe::LineParameters> load_truth(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j;
    try {
        in >> j;
        tlpe::LineParameters p;
        p.r = j.at("line_params").at("r").get<double>();
        p.x = j.at("line_params").at("x").get<double>();
        p.b = j.at("line_params").at("b").get<double>();
        return p;
    } catch (const json::exception& e) {
        throw ParseError("truth file '" + path.string() + "': " + e.what());
    }
}

int run_generate(const GlobalOptions& opts, const ToolConfig& cfg) {
    const fs::path dir = prepare_out_dir(opts);
    const auto& scenario = cfg.mc.scenario;
    const auto clean = tlpe::simulate_measurements(scenario);
    const auto noisy = tlpe::inject_noise(clean, scenario.noise_c, scenario.noise_D,
                                          derive_seed(scenario.seed, 0xC0));
    write_measurements_csv((dir / "measurements.csv").string(), noisy.records);
    write_measurements_csv((dir / "measurements_clean.csv").string(), noisy.clean_records);
    write_json(dir / "truth.json", truth_json(scenario));
    std::cout << "wrote " << (dir / "measurements.csv").string() << " (" << scenario.s
              << " instants), measurements_clean.csv, truth.json\n";
    return 0;
}

struct EstimateInputs {
    estimators::RegressionSystem sys;
    std::vector<tlpe::PhasorRecord> records;
    std::optional<tlpe::LineParameters> truth;
    Eigen::VectorXd x0;  // empty when unavailable
};

int run_estimate(const GlobalOptions& opts, ToolConfig& cfg, const std::string& data_path,
                 const std::string& method_name_arg, const std::string& truth_path,
                 std::vector<double> x0_values) {
    const fs::path dir = prepare_out_dir(opts);
    const auto method = method_from_name(method_name_arg);
    if (!method) {
        std::cerr << "unknown method '" << method_name_arg << "'\n";
        return 1;
    }

    EstimateInputs in;
    in.records = read_measurements_csv(data_path);
    in.sys = tlpe::build_system(in.records);
    const fs::path truth_file = truth_path.empty() ? dir / "truth.json" : fs::path(truth_path);
    in.truth = load_truth(truth_file);
    if (!truth_path.empty() && !in.truth) throw ParseError("cannot open truth file '" + truth_path + "'");

    if (!x0_values.empty()) {
        if (x0_values.size() != 4) throw ParseError("--x0 needs exactly 4 values");
        in.x0 = Eigen::Map<const Eigen::VectorXd>(x0_values.data(), 4);
    } else if (cfg.mc.egle.x0.size() == 4) {
        in.x0 = cfg.mc.egle.x0;
    } else if (in.truth) {
        in.x0 = tlpe::line_params_to_y(*in.truth).as_vector();
    }

    const bool needs_x0 = !(*method == Method::Ls || *method == Method::Tls ||
                            *method == Method::DenoiseLs);
    if (needs_x0 && in.x0.size() == 0) {
        std::cerr << "method '" << method_name_arg
                  << "' needs an initial guess: pass --x0, set [egle] x0 in the config, or "
                     "provide --truth\n";
        return 1;
    }

    Eigen::VectorXd y;
    std::optional<EstimationReport> report;
    bool converged = true;
    switch (*method) {
        case Method::Ls: y = estimators::ls_estimate(in.sys); break;
        case Method::Tls: y = estimators::tls_estimate(in.sys); break;
        case Method::Cls: y = estimators::constrained_ls(in.sys, in.x0).x; break;
        case Method::Ctls: y = estimators::constrained_tls(in.sys, in.x0).x; break;
        case Method::EgleDep: {
            EgleConfig ec = cfg.mc.egle;
            ec.x0 = in.x0;
            report = egle_dependent(in.sys, ec);
            y = report->x_hat;
            converged = report->converged;
            break;
        }
        case Method::EgleFull: {
            EgleConfig ec = cfg.mc.egle;
            ec.x0 = in.x0;
            report = egle_full(in.sys, ec);
            y = report->x_hat;
            converged = report->converged;
            break;
        }
        case Method::Mtee: {
            const auto res = baselines::mtee_estimate(in.sys, in.x0, cfg.mc.mtee);
            y = res.x;
            converged = res.converged;
            break;
        }
        case Method::DenoiseLs: y = baselines::denoise_then_ls(in.records, cfg.mc.mad); break;
    }

    const json result = estimate_result_json(harness::method_name(*method), y, report, in.truth,
                                             config_echo_json(cfg.mc), converged);
    write_json(dir / ("estimate_" + harness::method_name(*method) + ".json"), result);
    if (opts.format == "csv") {
        const auto params = tlpe::recover_line_params(tlpe::YVector::from_vector(y));
        std::cout << "parameter,estimate" << (in.truth ? ",are" : "") << "\n";
        const auto row = [&](const char* name, double value, double truth_value) {
            std::cout << name << ',' << value;
            if (in.truth) std::cout << ',' << are(value, truth_value);
            std::cout << "\n";
        };
        const auto t = in.truth.value_or(tlpe::LineParameters{1, 1, 1});
        row("r", params.r, t.r);
        row("x", params.x, t.x);
        row("b", params.b, t.b);
    } else {
        std::cout << result.dump(2) << "\n";
    }
    return 0;
}

int run_mc_command(const GlobalOptions& opts, ToolConfig& cfg) {
    const fs::path dir = prepare_out_dir(opts);
    const auto report = monte_carlo_run(cfg.mc);
    const json j = mc_report_json(report, config_echo_json(cfg.mc));
    write_json(dir / "mc_report.json", j);
    const std::string summary = mc_summary_csv(report);
    write_text(dir / "mc_summary.csv", summary);
    std::cout << (opts.format == "csv" ? summary : j.dump(2) + "\n");
    return 0;
}

int run_sweep_noise(const GlobalOptions& opts, ToolConfig& cfg, const std::vector<double>& scales) {
    const fs::path dir = prepare_out_dir(opts);
    const auto sweep = sensitivity_noise_levels(cfg.mc, scales);
    const json j = noise_sweep_json(sweep, config_echo_json(cfg.mc));
    write_json(dir / "sweep_noise_report.json", j);
    if (opts.format == "csv") {
        std::cout << "scale,method,parameter,mare\n";
        for (std::size_t i = 0; i < sweep.scales.size(); ++i) {
            const auto& rep = sweep.reports[i];
            for (std::size_t mi = 0; mi < rep.methods.size(); ++mi) {
                const auto& m = rep.metrics[mi];
                const std::string name = harness::method_name(rep.methods[mi]);
                std::cout << sweep.scales[i] << ',' << name << ",r," << m.mare.r << "\n";
                std::cout << sweep.scales[i] << ',' << name << ",x," << m.mare.x << "\n";
                std::cout << sweep.scales[i] << ',' << name << ",b," << m.mare.b << "\n";
            }
        }
    } else {
        std::cout << j.dump(2) << "\n";
    }
    return 0;
}

int run_sweep_init(const GlobalOptions& opts, ToolConfig& cfg, const std::vector<std::string>& bin_args) {
    const fs::path dir = prepare_out_dir(opts);
    std::vector<RiBin> bins;
    for (const auto& arg : bin_args) {
        const auto colon = arg.find(':');
        if (colon == std::string::npos) throw ParseError("--ri-bins entries must look like lo:hi");
        try {
            bins.push_back({std::stod(arg.substr(0, colon)), std::stod(arg.substr(colon + 1))});
        } catch (const std::exception&) {
            throw ParseError("bad RI bin '" + arg + "'");
        }
    }
    const auto sweep = sensitivity_initialization(cfg.mc, bins);
    const json j = init_sweep_json(sweep, config_echo_json(cfg.mc));
    write_json(dir / "sweep_init_report.json", j);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_bic_demo(const GlobalOptions& opts, ToolConfig& cfg, int samples, int m_max, int trials) {
    const fs::path dir = prepare_out_dir(opts);
    json trials_json = json::array();
    std::map<int, int> chosen_counts;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t seed = derive_seed(cfg.mc.base_seed, static_cast<std::uint64_t>(t));
        const auto noise = gmm::gmm_sample(kBicDemoSpec, static_cast<std::size_t>(samples), seed);
        json curve = json::array();
        int m_star = 1;
        double best = std::numeric_limits<double>::infinity();
        for (int m = 1; m <= m_max; ++m) {
            double value = std::numeric_limits<double>::infinity();
            try {
                const auto fit = gmm::em_fit(noise, m, cfg.mc.egle.em);
                value = gmm::bic(fit.loglik, m, static_cast<std::size_t>(samples));
            } catch (const EstimationError&) {
            }
            curve.push_back({{"m", m}, {"bic", std::isfinite(value) ? json(value) : json()}});
            if (value < best) {
                best = value;
                m_star = m;
            }
        }
        ++chosen_counts[m_star];
        trials_json.push_back({{"seed", seed}, {"bic_trace", curve}, {"m_star", m_star}});
        std::cout << "trial " << t << ": selected m = " << m_star << "\n";
    }
    json counts = json::object();
    for (const auto& [m, count] : chosen_counts) counts[std::to_string(m)] = count;
    const json j{{"schema_version", kReportSchemaVersion},
                 {"kind", "bic_demo"},
                 {"samples", samples},
                 {"m_max", m_max},
                 {"noise_spec", spec_json(kBicDemoSpec)},
                 {"trials", trials_json},
                 {"chosen_counts", counts}};
    write_json(dir / "bic_demo.json", j);
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    GlobalOptions opts;
    CLI::App app{"Transmission-line parameter estimation under Gaussian-mixture measurement noise"};
    app.require_subcommand(1);
    app.add_option("--config", opts.config_path, "TOML config file");
    app.add_option("--seed", opts.seed, "override scenario seed and MC base seed");
    app.add_option("--out-dir", opts.out_dir, "output directory")->capture_default_str();
    app.add_option("--format", opts.format, "stdout format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    auto* generate = app.add_subcommand("generate", "simulate a scenario and write noisy measurements");
    generate->fallthrough();
    int gen_s = 0;
    generate->add_option("--s", gen_s, "override the number of time instants");

    auto* estimate = app.add_subcommand("estimate", "estimate line parameters from a measurement CSV");
    estimate->fallthrough();
    std::string data_path, method_arg, truth_path;
    std::vector<double> x0_values;
    estimate->add_option("--data", data_path, "measurement CSV")->required();
    estimate->add_option("--method", method_arg,
                         "ls|tls|cls|ctls|egle|egle_dep|mtee|denoise_ls")->required();
    estimate->add_option("--truth", truth_path, "ground-truth JSON (enables ARE output)");
    estimate->add_option("--x0", x0_values, "initial Y guess (4 values)")->expected(0, 4);

    auto* mc = app.add_subcommand("mc", "paired Monte-Carlo comparison of methods");
    mc->fallthrough();
    int mc_runs = 0;
    std::vector<std::string> mc_methods;
    mc->add_option("--runs", mc_runs, "number of MC runs");
    mc->add_option("--methods", mc_methods, "comma-separated method list")->delimiter(',');

    auto* sweep_noise = app.add_subcommand("sweep-noise", "MC sweep over noise scale factors");
    sweep_noise->fallthrough();
    std::vector<double> scales{1.0, 2.0, 5.0, 10.0};
    int sn_runs = 0;
    std::vector<std::string> sn_methods;
    sweep_noise->add_option("--scales", scales, "noise scale factors")->delimiter(',');
    sweep_noise->add_option("--runs", sn_runs, "number of MC runs per scale");
    sweep_noise->add_option("--methods", sn_methods, "comma-separated method list")->delimiter(',');

    auto* sweep_init = app.add_subcommand("sweep-init", "MC sweep over initialization distance bins");
    sweep_init->fallthrough();
    std::vector<std::string> bins{"0:0.1", "0.1:0.2", "0.2:0.3"};
    int si_runs = 0;
    std::vector<std::string> si_methods;
    sweep_init->add_option("--ri-bins", bins, "RI bins as lo:hi")->delimiter(',');
    sweep_init->add_option("--runs", si_runs, "number of MC runs per bin");
    sweep_init->add_option("--methods", si_methods, "comma-separated method list")->delimiter(',');

    auto* bic_demo = app.add_subcommand("bic-demo", "BIC order selection on four-component noise");
    bic_demo->fallthrough();
    int samples = 5000, demo_m_max = 10, trials = 1;
    bic_demo->add_option("--samples", samples, "noise sample count")->capture_default_str();
    bic_demo->add_option("--m-max", demo_m_max, "largest component count")->capture_default_str();
    bic_demo->add_option("--trials", trials, "seeded repetitions")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        ToolConfig cfg = resolve_config(opts);
        if (*generate) {
            if (gen_s > 0) cfg.mc.scenario.s = gen_s;
            return run_generate(opts, cfg);
        }
        if (*estimate) return run_estimate(opts, cfg, data_path, method_arg, truth_path, x0_values);
        if (*mc) {
            if (mc_runs > 0) cfg.mc.runs = mc_runs;
            if (!mc_methods.empty()) {
                cfg.mc.methods.clear();
                for (const auto& name : mc_methods) {
                    const auto method = method_from_name(name);
                    if (!method) throw ParseError("unknown method '" + name + "'");
                    cfg.mc.methods.push_back(*method);
                }
            }
            return run_mc_command(opts, cfg);
        }
        if (*sweep_noise) {
            if (sn_runs > 0) cfg.mc.runs = sn_runs;
            if (!sn_methods.empty()) {
                cfg.mc.methods.clear();
                for (const auto& name : sn_methods) {
                    const auto method = method_from_name(name);
                    if (!method) throw ParseError("unknown method '" + name + "'");
                    cfg.mc.methods.push_back(*method);
                }
            }
            return run_sweep_noise(opts, cfg, scales);
        }
        if (*sweep_init) {
            if (si_runs > 0) cfg.mc.runs = si_runs;
            if (!si_methods.empty()) {
                cfg.mc.methods.clear();
                for (const auto& name : si_methods) {
                    const auto method = method_from_name(name);
                    if (!method) throw ParseError("unknown method '" + name + "'");
                    cfg.mc.methods.push_back(*method);
                }
            }
            return run_sweep_init(opts, cfg, bins);
        }
        if (*bic_demo) return run_bic_demo(opts, cfg, samples, demo_m_max, trials);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const EstimationError& e) {
        std::cerr << "estimation failed: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace egle::harness
