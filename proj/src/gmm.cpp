#include "egle/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "egle/rng.hpp"

namespace egle::gmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// log N(s; mu, s2) for one component across all samples.
Eigen::VectorXd log_normal(const Eigen::VectorXd& s, double mu, double s2) {
    const double log_norm = -0.5 * (kLog2Pi + std::log(s2));
    return (-(s.array() - mu).square() / (2.0 * s2) + log_norm).matrix();
}

// n x m matrix of log(w_g) + log N(s_i; mu_g, s2_g).
Eigen::MatrixXd log_weighted_densities(const Eigen::VectorXd& s, const GmmSpec& spec) {
    const int m = spec.m();
    Eigen::MatrixXd lw(s.size(), m);
    for (int g = 0; g < m; ++g) {
        const double logw = spec.weights[g] > 0.0 ? std::log(spec.weights[g])
                                                  : -std::numeric_limits<double>::infinity();
        lw.col(g) = log_normal(s, spec.means[g], spec.variances[g]).array() + logw;
    }
    return lw;
}

Eigen::VectorXd row_logsumexp(const Eigen::MatrixXd& lw) {
    const Eigen::VectorXd mx = lw.rowwise().maxCoeff();
    const Eigen::ArrayXd sums = (lw.colwise() - mx).array().exp().rowwise().sum();
    return mx.array() + sums.log();
}

void check_finite(const Eigen::VectorXd& samples) {
    if (!samples.allFinite()) {
        throw InvalidSample("gmm: samples contain NaN or infinity");
    }
}

GmmSpec quantile_split_init(const Eigen::VectorXd& samples, int m, double variance_floor) {
    std::vector<double> sorted(samples.data(), samples.data() + samples.size());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    GmmSpec spec;
    std::size_t start = 0;
    for (int g = 0; g < m; ++g) {
        const std::size_t stop = n * (g + 1) / m;
        const std::size_t count = stop - start;
        double mean = 0.0;
        for (std::size_t i = start; i < stop; ++i) mean += sorted[i];
        mean /= static_cast<double>(count);
        double var = 0.0;
        for (std::size_t i = start; i < stop; ++i) var += (sorted[i] - mean) * (sorted[i] - mean);
        var /= static_cast<double>(count);
        spec.weights.push_back(static_cast<double>(count) / static_cast<double>(n));
        spec.means.push_back(mean);
        spec.variances.push_back(std::max(var, variance_floor));
        start = stop;
    }
    return spec;
}

GmmSpec random_seeded_init(const Eigen::VectorXd& samples, int m, double variance_floor,
                           std::uint64_t seed) {
    auto eng = make_engine(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, samples.size() - 1);
    const double mean = samples.mean();
    const double var =
        std::max((samples.array() - mean).square().sum() / static_cast<double>(samples.size()),
                 variance_floor);
    GmmSpec spec;
    for (int g = 0; g < m; ++g) {
        spec.weights.push_back(1.0 / m);
        spec.means.push_back(samples(pick(eng)));
        spec.variances.push_back(var);
    }
    return spec;
}

// One fused EM pass: evaluates the weighted log densities once and reuses
// them for the responsibilities, the parameter update, and the log-likelihood
// of the *incoming* spec.
double em_iteration(const Eigen::VectorXd& samples, GmmSpec& spec, Eigen::MatrixXd& resp,
                    double variance_floor) {
    const Eigen::MatrixXd lw = log_weighted_densities(samples, spec);
    const Eigen::VectorXd lse = row_logsumexp(lw);
    resp = (lw.colwise() - lse).array().exp();
    spec = m_step(samples, resp, variance_floor);
    return lse.sum();
}

EmFitResult run_em(const Eigen::VectorXd& samples, GmmSpec spec, const EmConfig& config) {
    EmFitResult res;
    Eigen::MatrixXd resp;
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < config.max_iter; ++it) {
        // em_iteration returns the log-likelihood of the spec it was given,
        // i.e. the value reached by the previous update.
        const double ll = em_iteration(samples, spec, resp, config.variance_floor);
        res.iterations = it + 1;
        if (std::abs(ll - prev_ll) < config.tol && it > 0) {
            prev_ll = ll;
            res.converged = true;
            break;
        }
        prev_ll = ll;
    }
    // Responsibilities and reported likelihood consistent with the final spec.
    const Eigen::MatrixXd lw = log_weighted_densities(samples, spec);
    const Eigen::VectorXd lse = row_logsumexp(lw);
    resp = (lw.colwise() - lse).array().exp();
    res.spec = std::move(spec);
    res.loglik = lse.sum();

    // Canonical component order; permute responsibility columns to match.
    std::vector<int> order(res.spec.m());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return res.spec.means[a] < res.spec.means[b]; });
    res.spec.sort_by_mean();
    Responsibilities sorted(resp.rows(), resp.cols());
    for (int g = 0; g < static_cast<int>(order.size()); ++g) sorted.col(g) = resp.col(order[g]);
    res.resp = std::move(sorted);
    return res;
}

}  // namespace

GmmSpec GmmSpec::flat(int m, double variance) {
    GmmSpec spec;
    for (int g = 0; g < m; ++g) {
        spec.weights.push_back(1.0 / m);
        spec.means.push_back(0.0);
        spec.variances.push_back(variance);
    }
    return spec;
}

double GmmSpec::mixture_mean() const {
    double mu = 0.0;
    for (int g = 0; g < m(); ++g) mu += weights[g] * means[g];
    return mu;
}

double GmmSpec::mixture_variance() const {
    const double mu = mixture_mean();
    double v = 0.0;
    for (int g = 0; g < m(); ++g) {
        v += weights[g] * (variances[g] + (means[g] - mu) * (means[g] - mu));
    }
    return v;
}

void GmmSpec::validate(double variance_floor) const {
    if (m() < 1) throw InvalidSample("GmmSpec: at least one component required");
    if (means.size() != weights.size() || variances.size() != weights.size()) {
        throw InvalidSample("GmmSpec: weights/means/variances size mismatch");
    }
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw InvalidSample("GmmSpec: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw InvalidSample("GmmSpec: weights do not sum to 1");
    for (double v : variances) {
        if (!(v >= variance_floor)) throw InvalidSample("GmmSpec: variance below floor");
    }
}

void GmmSpec::sort_by_mean() {
    std::vector<int> order(m());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return means[a] < means[b]; });
    GmmSpec sorted;
    for (int idx : order) {
        sorted.weights.push_back(weights[idx]);
        sorted.means.push_back(means[idx]);
        sorted.variances.push_back(variances[idx]);
    }
    *this = std::move(sorted);
}

Responsibilities e_step(const Eigen::VectorXd& samples, const GmmSpec& spec) {
    check_finite(samples);
    Eigen::MatrixXd lw = log_weighted_densities(samples, spec);
    Eigen::VectorXd lse = row_logsumexp(lw);
    return ((lw.colwise() - lse).array().exp()).matrix();
}

GmmSpec m_step(const Eigen::VectorXd& samples, const Responsibilities& resp,
               double variance_floor) {
    const auto n = static_cast<double>(samples.size());
    const int m = static_cast<int>(resp.cols());
    GmmSpec spec;
    for (int g = 0; g < m; ++g) {
        const double ng = resp.col(g).sum();
        if (ng < 1e-300) {
            throw EmptyComponent("m_step: component " + std::to_string(g) +
                                 " has vanishing responsibility mass");
        }
        const double mu = resp.col(g).dot(samples) / ng;
        const double var = resp.col(g).dot((samples.array() - mu).square().matrix()) / ng;
        spec.weights.push_back(ng / n);
        spec.means.push_back(mu);
        spec.variances.push_back(std::max(var, variance_floor));
    }
    return spec;
}

ClusterAssignment cluster_assign(const Responsibilities& resp) {
    ClusterAssignment assign;
    const int m = static_cast<int>(resp.cols());
    assign.index_sets.resize(m);
    assign.counts.assign(m, 0);
    assign.labels.resize(resp.rows());
    for (Eigen::Index i = 0; i < resp.rows(); ++i) {
        int best = 0;
        for (int g = 1; g < m; ++g) {
            if (resp(i, g) > resp(i, best)) best = g;  // strict: ties keep the lowest index
        }
        assign.labels[i] = best;
        assign.index_sets[best].push_back(static_cast<int>(i));
        ++assign.counts[best];
    }
    return assign;
}

double log_likelihood(const Eigen::VectorXd& samples, const GmmSpec& spec) {
    check_finite(samples);
    return row_logsumexp(log_weighted_densities(samples, spec)).sum();
}

double bic(double loglik, int m, std::size_t n) {
    const double k = 3.0 * m - 1.0;
    return k * std::log(static_cast<double>(n)) - 2.0 * loglik;
}

EmFitResult em_fit(const Eigen::VectorXd& samples, int m, const EmConfig& config) {
    check_finite(samples);
    if (samples.size() < m) {
        throw InsufficientSamples("em_fit: " + std::to_string(samples.size()) +
                                  " samples for " + std::to_string(m) + " components");
    }
    if (m > 1 && samples.minCoeff() == samples.maxCoeff()) {
        throw DegenerateData("em_fit: all samples identical, cannot separate " +
                             std::to_string(m) + " components");
    }
    GmmSpec init = (config.init == EmInit::QuantileSplit)
                       ? quantile_split_init(samples, m, config.variance_floor)
                       : random_seeded_init(samples, m, config.variance_floor, config.seed);
    return run_em(samples, std::move(init), config);
}

EmFitResult em_fit_from(const Eigen::VectorXd& samples, const GmmSpec& init,
                        const EmConfig& config) {
    check_finite(samples);
    if (samples.size() < init.m()) {
        throw InsufficientSamples("em_fit_from: fewer samples than components");
    }
    if (init.m() > 1 && samples.minCoeff() == samples.maxCoeff()) {
        throw DegenerateData("em_fit_from: all samples identical");
    }
    return run_em(samples, init, config);
}

Eigen::VectorXd gmm_sample(const GmmSpec& spec, std::size_t n, std::uint64_t seed) {
    auto eng = make_engine(seed);
    std::discrete_distribution<int> component(spec.weights.begin(), spec.weights.end());
    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const int g = component(eng);
        const double sd = std::sqrt(std::max(spec.variances[g], 1e-12));
        std::normal_distribution<double> normal(spec.means[g], sd);
        out(static_cast<Eigen::Index>(i)) = normal(eng);
    }
    return out;
}

}  // namespace egle::gmm
