#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "egle/errors.hpp"
#include "egle/gmm.hpp"

namespace egle::estimators {

// Linear model c = D x. For the line-parameter front-end, n = 4s and p = 4.
struct RegressionSystem {
    Eigen::MatrixXd D;
    Eigen::VectorXd c;

    Eigen::Index n() const { return D.rows(); }
    Eigen::Index p() const { return D.cols(); }
    void validate() const;
};

// A regression system partitioned into the m Gaussian components of the
// dependent-noise fit. Component g of the D-noise spec is paired with
// component g of the c-noise spec on the same rows.
struct ClusteredSystem {
    Eigen::MatrixXd D;
    Eigen::VectorXd c;
    std::vector<std::vector<int>> row_sets;  // rho_g per component
    gmm::GmmSpec noise_c;                    // m components (mu_cg, sigma2_cg, w_g)
    gmm::GmmSpec noise_D;                    // m components; all-zero when D is noise-free

    int m() const { return static_cast<int>(row_sets.size()); }
    Eigen::Index n() const { return D.rows(); }
    Eigen::Index p() const { return D.cols(); }

    Eigen::MatrixXd rows_D(int g) const;
    Eigen::VectorXd rows_c(int g) const;

    // Single cluster holding every row; D treated as noise-free.
    static ClusteredSystem single(const RegressionSystem& sys, double mean_c, double var_c);
    static ClusteredSystem from_assignment(const RegressionSystem& sys,
                                           const gmm::ClusterAssignment& assign,
                                           gmm::GmmSpec noise_c, gmm::GmmSpec noise_D);
};

struct NewtonConfig {
    int k_max = 50;
    double tol_x = 1e-12;  // ||x_{k+1} - x_k||_2 threshold (epsilon_2)
    enum class Jacobian { Analytic, FiniteDifference } jacobian_mode = Jacobian::Analytic;
    double fd_step = 1e-6;  // relative central-difference step
};

struct NewtonResult {
    Eigen::VectorXd x;
    int iterations = 0;
    bool converged = false;
};

struct NoiseEstimates {
    Eigen::VectorXd c_e_hat;                // n
    Eigen::MatrixXd D_e_hat;                // n x p
    std::vector<Eigen::VectorXd> lambdas;   // per component, length n_g
};

struct ConstrainedResult {
    Eigen::VectorXd x;
    bool box_active = false;  // a posteriori +/-30% box had to clip the estimate
};

/// Ordinary least squares via column-pivoted QR. Throws IllConditioned when
/// cond(D) exceeds `condition_cap`.
Eigen::VectorXd ls_estimate(const RegressionSystem& sys, double condition_cap = 1e12);

/// Total least squares from the SVD of [D c]: x = -v_{1:p,q} / v_{q,q}.
/// Throws NonGenericTls when |v_qq| <= 1e-12 and DegenerateSvd when the two
/// smallest singular values coincide within tolerance.
Eigen::VectorXd tls_estimate(const RegressionSystem& sys);

/// LS with the equality Y1 + Y3 = 0 enforced exactly by eliminating Y3, plus
/// an a-posteriori box of +/-box_fraction around x0 (projected and flagged if
/// violated). `x0` may be empty to skip the box check.
ConstrainedResult constrained_ls(const RegressionSystem& sys, const Eigen::VectorXd& x0,
                                 double box_fraction = 0.30);

/// TLS counterpart: TLS on the eliminated (reduced) system, expanded back.
ConstrainedResult constrained_tls(const RegressionSystem& sys, const Eigen::VectorXd& x0,
                                  double box_fraction = 0.30);

/// Closed-form estimate under per-component dependent noise:
/// x = (sum_g D_g' D_g / s2_g)^{-1} (sum_g D_g' (c_g - mu_g) / s2_g),
/// computed as one weighted QR solve over the mean-corrected rows.
Eigen::VectorXd gmm_dep_estimate(const ClusteredSystem& clustered, double condition_cap = 1e12);

struct EivResidual {
    Eigen::VectorXd f;                     // p
    std::vector<Eigen::VectorXd> lambdas;  // per component
};

/// Stationarity residual of the EIV objective at x:
///   mu_net,g  = mu_cg - mu_Dg * sum_j x_j
///   S_net,g   = s2_cg + s2_Dg * sum_j x_j^2
///   lambda_g  = (c_g - D_g x - mu_net,g) / S_net,g
///   f(x)      = sum_g (D_g - D_e_hat_g(x))' lambda_g
/// with D_e_hat_g evaluated inline at the current x. Throws DegenerateVariance
/// when any S_net,g <= 0.
EivResidual eiv_residual(const Eigen::VectorXd& x, const ClusteredSystem& clustered);

/// Analytic Jacobian of f at x (same variance handling as eiv_residual):
///   J = sum_g [ s2_Dg ||lambda_g||^2 I - B_g' B_g / S_net,g ],
///   B_g = D_g + 2 s2_Dg lambda_g x' - mu_Dg 1 1'.
Eigen::MatrixXd eiv_jacobian(const Eigen::VectorXd& x, const ClusteredSystem& clustered);

/// Damped Newton iteration on f(x) = 0. The step is halved (up to 20 times)
/// whenever ||f|| would increase. Hitting k_max returns the best iterate with
/// converged = false; a singular Jacobian throws.
NewtonResult eiv_newton_solve(const ClusteredSystem& clustered, const Eigen::VectorXd& x0,
                              const NewtonConfig& cfg = {});

/// Optimal noise estimates at x_hat:
///   c_e_hat_g   = s2_cg lambda_g + mu_cg
///   D_e_hat_jg  = -x_j s2_Dg lambda_g + mu_Dg
/// reassembled into full-length arrays via the component index sets. The
/// reconstruction identity c_g - (D_g - D_e_hat_g) x - c_e_hat_g = 0 holds to
/// rounding by construction.
NoiseEstimates recover_noise(const Eigen::VectorXd& x_hat,
                             const std::vector<Eigen::VectorXd>& lambdas,
                             const ClusteredSystem& clustered);

}  // namespace egle::estimators
