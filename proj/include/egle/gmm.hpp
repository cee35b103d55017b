#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "egle/errors.hpp"

namespace egle::gmm {

// Scalar Gaussian mixture: weights sum to 1, variances kept above a floor.
struct GmmSpec {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> variances;

    int m() const { return static_cast<int>(weights.size()); }

    // Single zero-mean Gaussian N(0, variance).
    static GmmSpec gaussian(double variance) { return GmmSpec{{1.0}, {0.0}, {variance}}; }

    // m identical zero-mean components; used as the initial EIV noise guess.
    static GmmSpec flat(int m, double variance);

    double mixture_mean() const;
    double mixture_variance() const;

    // Throws if weights/means/variances are inconsistent, weights do not sum
    // to 1 within 1e-12, any weight is negative, or any variance < floor.
    void validate(double variance_floor = 1e-12) const;

    // Reorder components by ascending mean. Gives the spec a canonical form
    // so cross-fit component pairing is deterministic.
    void sort_by_mean();
};

// n x m row-stochastic matrix of posterior component memberships.
using Responsibilities = Eigen::MatrixXd;

struct ClusterAssignment {
    std::vector<int> labels;                  // per-row hard membership
    std::vector<std::vector<int>> index_sets; // rho_g
    std::vector<int> counts;                  // n_g
};

enum class EmInit { QuantileSplit, RandomSeeded };

struct EmConfig {
    int max_iter = 200;
    double tol = 1e-8;            // |delta loglik| stopping threshold, nats
    double variance_floor = 1e-12;
    EmInit init = EmInit::QuantileSplit;
    std::uint64_t seed = 0;       // used by RandomSeeded init only
};

struct EmFitResult {
    GmmSpec spec;
    Responsibilities resp;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Posterior responsibilities gamma_ig for each sample under `spec`.
/// Densities are evaluated in log space (log-sum-exp), so tiny variances do
/// not underflow. Throws InvalidSample on NaN input.
Responsibilities e_step(const Eigen::VectorXd& samples, const GmmSpec& spec);

/// Weighted-moment parameter update from responsibilities. Variances are
/// clamped to `variance_floor`. Throws EmptyComponent when a responsibility
/// column sums below 1e-300.
GmmSpec m_step(const Eigen::VectorXd& samples, const Responsibilities& resp,
               double variance_floor = 1e-12);

/// Hard memberships: row-wise argmax, ties broken toward the lowest index.
ClusterAssignment cluster_assign(const Responsibilities& resp);

/// sum_i log sum_g w_g N(s_i; mu_g, sigma2_g), evaluated in log space.
double log_likelihood(const Eigen::VectorXd& samples, const GmmSpec& spec);

/// BIC = k ln(n) - 2 loglik with k = 3m - 1 free parameters for a scalar
/// m-component mixture.
double bic(double loglik, int m, std::size_t n);

/// Fit an m-component mixture by EM. Components of the returned spec are
/// sorted by ascending mean. Throws InsufficientSamples when n < m and
/// DegenerateData when all samples are identical with m > 1.
EmFitResult em_fit(const Eigen::VectorXd& samples, int m, const EmConfig& config = {});

/// Same EM loop, but started from `init` instead of a fresh initialization
/// (warm start for the joint estimation loops).
EmFitResult em_fit_from(const Eigen::VectorXd& samples, const GmmSpec& init,
                        const EmConfig& config = {});

/// Draw n samples: component per weights, then Gaussian. Deterministic per seed.
Eigen::VectorXd gmm_sample(const GmmSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace egle::gmm
