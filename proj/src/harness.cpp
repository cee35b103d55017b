#include "egle/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "egle/rng.hpp"

namespace egle::harness {

namespace {

using estimators::RegressionSystem;

Eigen::VectorXd jitter_x0(const Eigen::VectorXd& truth, double jitter, std::uint64_t seed) {
    auto eng = make_engine(seed);
    std::uniform_real_distribution<double> u(-jitter, jitter);
    Eigen::VectorXd x0 = truth;
    for (Eigen::Index j = 0; j < x0.size(); ++j) x0(j) *= 1.0 + u(eng);
    return x0;
}

Eigen::VectorXd binned_x0(const Eigen::VectorXd& truth, const RiBin& bin, std::uint64_t seed) {
    auto eng = make_engine(seed);
    std::uniform_real_distribution<double> dist(bin.lo, bin.hi);
    std::bernoulli_distribution sign(0.5);
    Eigen::VectorXd x0 = truth;
    for (Eigen::Index j = 0; j < x0.size(); ++j) {
        const double d = dist(eng);
        x0(j) *= sign(eng) ? 1.0 + d : 1.0 - d;
    }
    return x0;
}

RunRecord estimate_one(Method method, const RegressionSystem& sys,
                       const std::vector<tlpe::PhasorRecord>& noisy_records,
                       const Eigen::VectorXd& x0, const tlpe::LineParameters& truth,
                       const McConfig& cfg) {
    RunRecord rec;
    try {
        Eigen::VectorXd y;
        switch (method) {
            case Method::Ls:
                y = estimators::ls_estimate(sys);
                break;
            case Method::Tls:
                y = estimators::tls_estimate(sys);
                break;
            case Method::Cls:
                y = estimators::constrained_ls(sys, x0).x;
                break;
            case Method::Ctls:
                y = estimators::constrained_tls(sys, x0).x;
                break;
            case Method::EgleDep: {
                EgleConfig ec = cfg.egle;
                ec.x0 = x0;
                auto report = egle_dependent(sys, ec);
                rec.converged = report.converged;
                y = report.x_hat;
                break;
            }
            case Method::EgleFull: {
                EgleConfig ec = cfg.egle;
                ec.x0 = x0;
                auto report = egle_full(sys, ec);
                rec.converged = report.converged;
                y = report.x_hat;
                break;
            }
            case Method::Mtee: {
                auto res = baselines::mtee_estimate(sys, x0, cfg.mtee);
                rec.converged = res.converged;
                y = res.x;
                break;
            }
            case Method::DenoiseLs:
                y = baselines::denoise_then_ls(noisy_records, cfg.mad);
                break;
        }
        const auto est = tlpe::recover_line_params(tlpe::YVector::from_vector(y));
        rec.are = line_param_are(est, truth);
        rec.ok = true;
    } catch (const EstimationError& e) {
        rec.failure = e.what();
    }
    return rec;
}

MethodMetrics aggregate(const std::vector<RunRecord>& runs) {
    MethodMetrics out;
    std::vector<double> net;
    std::vector<ParamAre> ok;
    for (const auto& r : runs) {
        if (!r.ok) {
            ++out.failures;
            ++out.divergence_flags;
            continue;
        }
        if (!r.converged) ++out.divergence_flags;
        ok.push_back(r.are);
        net.push_back(r.are.net());
    }
    if (ok.empty()) return out;
    const double n = static_cast<double>(ok.size());
    for (const auto& a : ok) {
        out.mare.r += a.r / n;
        out.mare.x += a.x / n;
        out.mare.b += a.b / n;
        out.mare_net += a.net() / n;
    }
    for (const auto& a : ok) {
        out.sdare.r += (a.r - out.mare.r) * (a.r - out.mare.r) / n;
        out.sdare.x += (a.x - out.mare.x) * (a.x - out.mare.x) / n;
        out.sdare.b += (a.b - out.mare.b) * (a.b - out.mare.b) / n;
        out.sdare_net += (a.net() - out.mare_net) * (a.net() - out.mare_net) / n;
    }
    out.sdare.r = std::sqrt(out.sdare.r);
    out.sdare.x = std::sqrt(out.sdare.x);
    out.sdare.b = std::sqrt(out.sdare.b);
    out.sdare_net = std::sqrt(out.sdare_net);
    out.se_net = out.sdare_net / std::sqrt(n);
    std::sort(net.begin(), net.end());
    out.median_net = net.size() % 2 == 1
                         ? net[net.size() / 2]
                         : 0.5 * (net[net.size() / 2 - 1] + net[net.size() / 2]);
    return out;
}

// Runs the per-run body over [0, runs) on a small thread pool; results land
// in index order so the outcome is independent of scheduling.
template <typename Body>
void parallel_runs(int runs, int threads, Body&& body) {
    int hw = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    hw = std::max(1, std::min(hw, runs));
    if (hw == 1) {
        for (int run = 0; run < runs; ++run) body(run);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < hw; ++t) {
        pool.emplace_back([&]() {
            for (int run = next.fetch_add(1); run < runs; run = next.fetch_add(1)) body(run);
        });
    }
    for (auto& th : pool) th.join();
}

McReport run_mc(const McConfig& cfg, const std::vector<tlpe::PhasorRecord>& clean,
                const std::function<Eigen::VectorXd(std::uint64_t run_seed)>& draw_x0) {
    McReport report;
    report.runs = cfg.runs;
    report.base_seed = cfg.base_seed;
    report.truth = cfg.scenario.true_params;
    report.methods = cfg.methods;
    report.results.assign(cfg.methods.size(), std::vector<RunRecord>(static_cast<std::size_t>(cfg.runs)));

    parallel_runs(cfg.runs, cfg.threads, [&](int run) {
        const std::uint64_t run_seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(run));
        const auto noisy = tlpe::inject_noise(clean, cfg.scenario.noise_c, cfg.scenario.noise_D,
                                              derive_seed(run_seed, 0));
        const RegressionSystem sys = tlpe::build_system(noisy.records);
        const Eigen::VectorXd x0 = draw_x0(run_seed);
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            report.results[mi][static_cast<std::size_t>(run)] = estimate_one(
                cfg.methods[mi], sys, noisy.records, x0, cfg.scenario.true_params, cfg);
        }
    });

    for (const auto& rows : report.results) report.metrics.push_back(aggregate(rows));
    return report;
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::Ls: return "ls";
        case Method::Tls: return "tls";
        case Method::Cls: return "cls";
        case Method::Ctls: return "ctls";
        case Method::EgleDep: return "egle_dep";
        case Method::EgleFull: return "egle";
        case Method::Mtee: return "mtee";
        case Method::DenoiseLs: return "denoise_ls";
    }
    return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
    static const std::map<std::string, Method> lookup = {
        {"ls", Method::Ls},          {"tls", Method::Tls},
        {"cls", Method::Cls},        {"ctls", Method::Ctls},
        {"egle_dep", Method::EgleDep}, {"egle-dep", Method::EgleDep},
        {"egle", Method::EgleFull},  {"egle_full", Method::EgleFull},
        {"mtee", Method::Mtee},      {"denoise_ls", Method::DenoiseLs},
        {"denoise-ls", Method::DenoiseLs},
    };
    const auto it = lookup.find(name);
    if (it == lookup.end()) return std::nullopt;
    return it->second;
}

double are(double x_est, double x_true) {
    if (x_true == 0.0) throw ZeroTruth("are: true value is zero");
    return std::abs(x_est - x_true) / std::abs(x_true);
}

ParamAre line_param_are(const tlpe::LineParameters& est, const tlpe::LineParameters& truth) {
    return {are(est.r, truth.r), are(est.x, truth.x), are(est.b, truth.b)};
}

Eigen::VectorXd ri_index(const Eigen::VectorXd& x0, const Eigen::VectorXd& x_true) {
    Eigen::VectorXd out(x0.size());
    for (Eigen::Index j = 0; j < x0.size(); ++j) out(j) = are(x0(j), x_true(j));
    return out;
}

McReport monte_carlo_run(const McConfig& cfg) {
    if (cfg.runs < 1) throw InvalidSample("monte_carlo_run: runs >= 1 required");
    const auto clean = tlpe::simulate_measurements(cfg.scenario);
    const Eigen::VectorXd y_true =
        tlpe::line_params_to_y(cfg.scenario.true_params).as_vector();
    return run_mc(cfg, clean, [&](std::uint64_t run_seed) {
        return jitter_x0(y_true, cfg.init_jitter, derive_seed(run_seed, 1));
    });
}

NoiseSweepReport sensitivity_noise_levels(const McConfig& cfg, const std::vector<double>& scales) {
    NoiseSweepReport sweep;
    sweep.scales = scales;
    for (double scale : scales) {
        if (!(scale > 0.0)) throw InvalidSample("sensitivity_noise_levels: scales must be positive");
        McConfig scaled = cfg;
        for (auto* spec : {&scaled.scenario.noise_c, &scaled.scenario.noise_D}) {
            for (auto& mu : spec->means) mu *= scale;
            for (auto& var : spec->variances) var *= scale * scale;
        }
        sweep.reports.push_back(monte_carlo_run(scaled));
    }
    return sweep;
}

InitSweepReport sensitivity_initialization(const McConfig& cfg, const std::vector<RiBin>& bins) {
    InitSweepReport sweep;
    sweep.bins = bins;
    const auto clean = tlpe::simulate_measurements(cfg.scenario);
    const Eigen::VectorXd y_true =
        tlpe::line_params_to_y(cfg.scenario.true_params).as_vector();
    for (std::size_t bi = 0; bi < bins.size(); ++bi) {
        const RiBin& bin = bins[bi];
        if (bin.lo < 0.0 || bin.hi < bin.lo) {
            throw InvalidSample("sensitivity_initialization: invalid RI bin");
        }
        // Noise streams depend only on the run seed, so bins are paired.
        sweep.reports.push_back(run_mc(cfg, clean, [&, bi](std::uint64_t run_seed) {
            return binned_x0(y_true, bin, derive_seed(run_seed, 100 + bi));
        }));
    }
    return sweep;
}

}  // namespace egle::harness
