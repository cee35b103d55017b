// Independent oracle implementations used by the tests. Everything here takes
// a deliberately different algebraic route from the library code it checks.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace oracles {

// Textbook normal equations with an explicit inverse.
inline Eigen::VectorXd normal_equations_ls(const Eigen::MatrixXd& D, const Eigen::VectorXd& c) {
    return (D.transpose() * D).inverse() * (D.transpose() * c);
}

// TLS from the eigen-decomposition of the augmented Gram matrix [D c]'[D c]:
// the smallest eigenvector is the smallest right singular vector of [D c].
inline Eigen::VectorXd gram_tls(const Eigen::MatrixXd& D, const Eigen::VectorXd& c) {
    const Eigen::Index p = D.cols();
    Eigen::MatrixXd aug(D.rows(), p + 1);
    aug << D, c;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(aug.transpose() * aug);
    const Eigen::VectorXd v = eig.eigenvectors().col(0);  // ascending eigenvalues
    return -v.head(p) / v(p);
}

// Equality-constrained least squares min ||Dx - c||^2 s.t. a'x = 0 via the
// KKT system [2D'D a; a' 0] [x; nu] = [2D'c; 0].
inline Eigen::VectorXd kkt_constrained_ls(const Eigen::MatrixXd& D, const Eigen::VectorXd& c,
                                          const Eigen::VectorXd& a) {
    const Eigen::Index p = D.cols();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(p + 1, p + 1);
    K.topLeftCorner(p, p) = 2.0 * D.transpose() * D;
    K.topRightCorner(p, 1) = a;
    K.bottomLeftCorner(1, p) = a.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
    rhs.head(p) = 2.0 * D.transpose() * c;
    return K.fullPivLu().solve(rhs).head(p);
}

// Mixture log-likelihood via naive direct-space summation.
inline double direct_loglik(const std::vector<double>& samples, const std::vector<double>& w,
                            const std::vector<double>& mu, const std::vector<double>& var) {
    double total = 0.0;
    for (double s : samples) {
        double density = 0.0;
        for (std::size_t g = 0; g < w.size(); ++g) {
            density += w[g] / std::sqrt(2.0 * M_PI * var[g]) *
                       std::exp(-(s - mu[g]) * (s - mu[g]) / (2.0 * var[g]));
        }
        total += std::log(density);
    }
    return total;
}

// Derivative-free Nelder-Mead; enough iterations to polish to ~1e-8 on the
// small problems the tests use.
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x0, double scale = 0.1,
                                   int max_iter = 20000) {
    const Eigen::Index n = x0.size();
    std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n) + 1, x0);
    for (Eigen::Index i = 0; i < n; ++i) {
        simplex[static_cast<std::size_t>(i) + 1](i) += scale * std::max(1.0, std::abs(x0(i)));
    }
    std::vector<double> values;
    for (const auto& v : simplex) values.push_back(f(v));

    for (int it = 0; it < max_iter; ++it) {
        std::vector<std::size_t> order(simplex.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        if (values[order.back()] - values[order.front()] < 1e-14) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += simplex[order[i]];
        centroid /= static_cast<double>(n);

        const std::size_t worst = order.back();
        const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
        const double fr = f(reflected);
        if (fr < values[order.front()]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = f(expanded);
            simplex[worst] = fe < fr ? expanded : reflected;
            values[worst] = std::min(fe, fr);
        } else if (fr < values[order[order.size() - 2]]) {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            const Eigen::VectorXd contracted = centroid + 0.5 * (simplex[worst] - centroid);
            const double fc = f(contracted);
            if (fc < values[worst]) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                for (std::size_t i = 1; i < order.size(); ++i) {
                    simplex[order[i]] =
                        simplex[order[0]] + 0.5 * (simplex[order[i]] - simplex[order[0]]);
                    values[order[i]] = f(simplex[order[i]]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[best]) best = i;
    }
    return simplex[best];
}

}  // namespace oracles
