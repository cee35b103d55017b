#include "egle/egle.hpp"

#include <chrono>
#include <cmath>

namespace egle {

namespace {

using estimators::ClusteredSystem;
using estimators::RegressionSystem;
using gmm::GmmSpec;

struct PerM {
    Eigen::VectorXd x;
    GmmSpec noise_c;
    GmmSpec noise_D;
    gmm::ClusterAssignment assign;
    int outer_iterations = 0;
    bool converged = false;
    bool newton_converged = true;
    std::vector<double> dx_trace;
};

void check_config(const RegressionSystem& sys, const EgleConfig& cfg) {
    sys.validate();
    if (cfg.m_max < 1) throw InvalidSample("EgleConfig: m_max >= 1 required");
    if (cfg.i_max < 1) throw InvalidSample("EgleConfig: i_max >= 1 required");
    if (!(cfg.eps1 > 0.0)) throw InvalidSample("EgleConfig: eps1 > 0 required");
    if (cfg.x0.size() != sys.p()) throw InvalidSample("EgleConfig: x0 must have p entries");
}

// Shared sweep/selection scaffolding; `run_one_m` does the per-m work.
template <typename RunOneM>
EstimationReport sweep(const RegressionSystem& sys, const EgleConfig& cfg, RunOneM&& run_one_m) {
    const auto start = std::chrono::steady_clock::now();
    EstimationReport report;
    report.per_m_estimates.resize(static_cast<std::size_t>(cfg.m_max));
    std::vector<PerM> states(static_cast<std::size_t>(cfg.m_max));

    for (int m = 1; m <= cfg.m_max; ++m) {
        BicEntry entry;
        entry.m = m;
        const auto mi = static_cast<std::size_t>(m - 1);
        try {
            double bic_value = 0.0;
            states[mi] = run_one_m(m, bic_value);
            entry.bic = bic_value;
            report.per_m_estimates[mi] = states[mi].x;
        } catch (const EstimationError& e) {
            entry.failed = true;
            entry.failure = e.what();
        }
        report.bic_trace.push_back(std::move(entry));
    }

    int best = -1;
    for (int m = 0; m < cfg.m_max; ++m) {
        const auto& entry = report.bic_trace[static_cast<std::size_t>(m)];
        if (entry.failed) continue;
        if (best < 0 || entry.bic < report.bic_trace[static_cast<std::size_t>(best)].bic) best = m;
    }
    if (best < 0) {
        throw EstimationError("egle: every m in 1.." + std::to_string(cfg.m_max) + " failed: " +
                              report.bic_trace.front().failure);
    }

    const PerM& chosen = states[static_cast<std::size_t>(best)];
    report.m_star = best + 1;
    report.x_hat = chosen.x;
    report.noise_c = chosen.noise_c;
    report.noise_D = chosen.noise_D;
    report.outer_iterations = chosen.outer_iterations;
    report.converged = chosen.converged;
    report.newton_converged = chosen.newton_converged;
    report.dx_trace = chosen.dx_trace;

    // Noise estimates consistent with the selected parameters.
    GmmSpec noise_D = chosen.noise_D.m() > 0
                          ? chosen.noise_D
                          : GmmSpec::flat(chosen.noise_c.m(), 0.0);
    ClusteredSystem cs =
        ClusteredSystem::from_assignment(sys, chosen.assign, chosen.noise_c, noise_D);
    const auto resid = estimators::eiv_residual(report.x_hat, cs);
    report.noise_estimates = estimators::recover_noise(report.x_hat, resid.lambdas, cs);

    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace

EstimationReport egle_dependent(const RegressionSystem& sys, const EgleConfig& cfg) {
    check_config(sys, cfg);
    const auto n = static_cast<std::size_t>(sys.n());

    return sweep(sys, cfg, [&](int m, double& bic_value) {
        PerM state;
        Eigen::VectorXd x = cfg.x0;
        Eigen::VectorXd c_e = sys.c - sys.D * x;
        gmm::EmFitResult fit;
        bool have_fit = false;
        for (int i = 0; i < cfg.i_max; ++i) {
            fit = (have_fit && !cfg.em_cold_start) ? gmm::em_fit_from(c_e, fit.spec, cfg.em)
                                                   : gmm::em_fit(c_e, m, cfg.em);
            have_fit = true;
            state.assign = gmm::cluster_assign(fit.resp);
            ClusteredSystem cs = ClusteredSystem::from_assignment(
                sys, state.assign, fit.spec, GmmSpec::flat(m, 0.0));
            const Eigen::VectorXd x_new = estimators::gmm_dep_estimate(cs);
            c_e = sys.c - sys.D * x_new;
            const double dx = (x_new - x).norm();
            state.dx_trace.push_back(dx);
            x = x_new;
            state.outer_iterations = i + 1;
            if (dx < cfg.eps1) {
                state.converged = true;
                break;
            }
        }
        state.x = x;
        state.noise_c = fit.spec;
        bic_value = gmm::bic(fit.loglik, m, n);
        return state;
    });
}

EstimationReport egle_full(const RegressionSystem& sys, const EgleConfig& cfg) {
    check_config(sys, cfg);
    const auto n = static_cast<std::size_t>(sys.n());
    const auto np = n * static_cast<std::size_t>(sys.p());

    const Eigen::VectorXd r0 = sys.c - sys.D * cfg.x0;
    const double var0 =
        std::max((r0.array() - r0.mean()).square().sum() / static_cast<double>(r0.size()),
                 cfg.em.variance_floor);

    return sweep(sys, cfg, [&](int m, double& bic_value) {
        PerM state;
        Eigen::VectorXd x = cfg.x0;

        gmm::EmFitResult fit_c = gmm::em_fit(r0, m, cfg.em);
        state.assign = gmm::cluster_assign(fit_c.resp);
        // Zero-mean Gaussian initial guess for the D noise; replaced by a real
        // EM fit after the first recovery pass.
        GmmSpec spec_D = GmmSpec::flat(m, var0);
        gmm::EmFitResult fit_D;
        bool have_fit_D = false;

        ClusteredSystem cs = ClusteredSystem::from_assignment(sys, state.assign, fit_c.spec, spec_D);
        for (int i = 0; i < cfg.i_max; ++i) {
            const auto resid = estimators::eiv_residual(x, cs);
            const auto noise = estimators::recover_noise(x, resid.lambdas, cs);

            fit_c = cfg.em_cold_start ? gmm::em_fit(noise.c_e_hat, m, cfg.em)
                                      : gmm::em_fit_from(noise.c_e_hat, fit_c.spec, cfg.em);
            const Eigen::VectorXd d_e_flat =
                Eigen::Map<const Eigen::VectorXd>(noise.D_e_hat.data(), noise.D_e_hat.size());
            fit_D = (have_fit_D && !cfg.em_cold_start)
                        ? gmm::em_fit_from(d_e_flat, fit_D.spec, cfg.em)
                        : gmm::em_fit(d_e_flat, m, cfg.em);
            have_fit_D = true;

            state.assign = gmm::cluster_assign(fit_c.resp);
            cs = ClusteredSystem::from_assignment(sys, state.assign, fit_c.spec, fit_D.spec);

            const auto newton = estimators::eiv_newton_solve(cs, x, cfg.newton);
            state.newton_converged = newton.converged;
            const double dx = (newton.x - x).norm();
            state.dx_trace.push_back(dx);
            x = newton.x;
            state.outer_iterations = i + 1;
            if (dx < cfg.eps1) {
                state.converged = true;
                break;
            }
        }
        state.x = x;
        state.noise_c = fit_c.spec;
        state.noise_D = have_fit_D ? fit_D.spec : spec_D;
        bic_value = gmm::bic(fit_c.loglik, m, n) +
                    (have_fit_D ? gmm::bic(fit_D.loglik, m, np) : 0.0);
        return state;
    });
}

}  // namespace egle
