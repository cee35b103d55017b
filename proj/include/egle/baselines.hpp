#pragma once

#include <Eigen/Core>
#include <vector>

#include "egle/estimators.hpp"
#include "egle/tlpe.hpp"

namespace egle::baselines {

struct MteeConfig {
    double kernel_sigma = 0.0;  // 0: Silverman's rule on the initial total error
    double step_size = 0.0;     // 0: auto-scaled on the first iteration
    int max_iter = 200;
    double tol = 1e-6;          // ||dx||_2 stopping threshold
    bool backtracking = true;   // pure fixed-step descent when false
};

struct MadConfig {
    int window = 600;
    double threshold = 3.0;     // MAD multiples
    enum class Replacement { Median, Interpolate } replacement = Replacement::Median;
};

struct MteeResult {
    Eigen::VectorXd x;
    std::vector<double> entropy_trace;
    int iterations = 0;
    bool converged = false;
};

struct MadResult {
    Eigen::VectorXd cleaned;
    std::vector<bool> flags;
};

/// e_tot = (c - D x) / sqrt(x'x + 1).
Eigen::VectorXd total_error(const estimators::RegressionSystem& sys, const Eigen::VectorXd& x);

/// Quadratic Renyi entropy via the Parzen window:
///   H2 = -log( (1/N^2) sum_i sum_j G_{sigma sqrt 2}(e_j - e_i) ).
/// The O(N^2) double sum is evaluated directly.
double renyi_entropy(const Eigen::VectorXd& errors, double sigma);

/// Analytic gradient of H2(total_error(x)) with respect to x.
Eigen::VectorXd renyi_entropy_gradient(const estimators::RegressionSystem& sys,
                                       const Eigen::VectorXd& x, double sigma);

/// Steepest-descent minimization of the total-error entropy, with step
/// halving when the entropy would increase (unless backtracking is off).
MteeResult mtee_estimate(const estimators::RegressionSystem& sys, const Eigen::VectorXd& x0,
                         const MteeConfig& cfg = {});

/// Moving-window MAD filter: flag |s - median| > threshold * MAD (MAD scaled
/// by 1.4826), replace per config. Edge windows are truncated.
MadResult mad_denoise(const Eigen::VectorXd& series, const MadConfig& cfg = {});

/// MAD-filter every voltage and current channel over time, rebuild the
/// regression system from the cleaned records, and solve by ordinary LS.
Eigen::VectorXd denoise_then_ls(const std::vector<tlpe::PhasorRecord>& records,
                                const MadConfig& cfg = {});

}  // namespace egle::baselines
