#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "egle/estimators.hpp"
#include "egle/gmm.hpp"

namespace egle {

struct EgleConfig {
    int m_max = 10;
    int i_max = 50;             // outer (joint noise/parameter) iterations
    double eps0 = 1e-6;         // declared by the algorithm interface but unused by it; kept for compatibility
    double eps1 = 1e-9;         // outer ||x_{i+1} - x_i||_2 tolerance
    estimators::NewtonConfig newton{};  // eps2 lives in newton.tol_x
    gmm::EmConfig em{};
    Eigen::VectorXd x0;         // initial parameter guess, required
    bool em_cold_start = false; // re-initialize EM each middle-loop pass instead of warm-starting
};

struct BicEntry {
    int m = 0;
    double bic = std::numeric_limits<double>::infinity();
    bool failed = false;
    std::string failure;
};

struct EstimationReport {
    Eigen::VectorXd x_hat;
    int m_star = 0;
    std::vector<BicEntry> bic_trace;                // m = 1..m_max
    std::vector<Eigen::VectorXd> per_m_estimates;   // empty vector for failed m
    gmm::GmmSpec noise_c;
    gmm::GmmSpec noise_D;                           // empty (m()==0) in the dependent-only mode
    estimators::NoiseEstimates noise_estimates;
    int outer_iterations = 0;                       // at m_star
    bool converged = false;                         // outer loop at m_star
    bool newton_converged = true;                   // last inner solve at m_star
    std::vector<double> dx_trace;                   // ||x_{i+1} - x_i|| per outer pass at m_star
    double seconds = 0.0;
};

/// Joint noise/parameter estimation with noise in the dependent variable only.
/// For each m: c_e is initialized from the x0 residual, then EM fit, cluster,
/// closed-form re-estimate and residual refresh are iterated until
/// ||dx|| < eps1; BIC of the final noise fit selects m*.
EstimationReport egle_dependent(const estimators::RegressionSystem& sys, const EgleConfig& cfg);

/// Full errors-in-variables loop: outer sweep over m, middle joint noise
/// estimation (Eq.-36-style recovery followed by EM refits of both noise
/// mixtures), inner damped-Newton parameter solve. BIC(m) combines both noise
/// fits; m* and x_hat are taken at its minimum.
EstimationReport egle_full(const estimators::RegressionSystem& sys, const EgleConfig& cfg);

}  // namespace egle
