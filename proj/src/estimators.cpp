#include "egle/estimators.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace egle::estimators {

namespace {

// Columns of the reduced system after eliminating Y3 = -Y1.
Eigen::MatrixXd eliminate_equality(const Eigen::MatrixXd& D) {
    Eigen::MatrixXd reduced(D.rows(), 3);
    reduced.col(0) = D.col(0) - D.col(2);
    reduced.col(1) = D.col(1);
    reduced.col(2) = D.col(3);
    return reduced;
}

Eigen::VectorXd expand_equality(const Eigen::VectorXd& reduced) {
    Eigen::VectorXd x(4);
    x << reduced(0), reduced(1), -reduced(0), reduced(2);
    return x;
}

// A posteriori +/-box check around x0; clamps and flags when violated.
// The equality Y1 + Y3 = 0 is restored after clamping.
void apply_box(ConstrainedResult& res, const Eigen::VectorXd& x0, double box_fraction) {
    if (x0.size() == 0 || box_fraction <= 0.0) return;
    for (Eigen::Index j = 0; j < res.x.size(); ++j) {
        const double half = box_fraction * std::abs(x0(j));
        const double lo = x0(j) - half;
        const double hi = x0(j) + half;
        if (res.x(j) < lo || res.x(j) > hi) {
            res.x(j) = std::clamp(res.x(j), lo, hi);
            res.box_active = true;
        }
    }
    if (res.box_active) {
        const double y1 = 0.5 * (res.x(0) - res.x(2));
        res.x(0) = y1;
        res.x(2) = -y1;
    }
}

double condition_number(const Eigen::MatrixXd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / sv(sv.size() - 1);
}

Eigen::VectorXd qr_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         double condition_cap, const char* who) {
    if (condition_number(A) > condition_cap) {
        throw IllConditioned(std::string(who) + ": condition number exceeds cap");
    }
    return A.colPivHouseholderQr().solve(b);
}

Eigen::VectorXd tls_core(const Eigen::MatrixXd& D, const Eigen::VectorXd& c) {
    const Eigen::Index p = D.cols();
    Eigen::MatrixXd aug(D.rows(), p + 1);
    aug << D, c;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(aug, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double scale = std::max(1.0, sv(0));
    if (sv.size() >= 2 && sv(p) > 0.0 && sv(p - 1) - sv(p) <= 1e-12 * scale) {
        throw DegenerateSvd("tls_estimate: repeated smallest singular value");
    }
    const Eigen::VectorXd v = svd.matrixV().col(p);
    const double vqq = v(p);
    if (std::abs(vqq) <= 1e-12) {
        throw NonGenericTls("tls_estimate: last entry of the smallest right singular vector ~ 0");
    }
    return -v.head(p) / vqq;
}

}  // namespace

void RegressionSystem::validate() const {
    if (D.rows() != c.size()) throw InvalidSample("RegressionSystem: D/c row mismatch");
    if (D.rows() < D.cols()) throw InsufficientSamples("RegressionSystem: n < p");
    if (!D.allFinite() || !c.allFinite()) throw InvalidSample("RegressionSystem: non-finite entries");
}

Eigen::MatrixXd ClusteredSystem::rows_D(int g) const {
    const auto& idx = row_sets[static_cast<std::size_t>(g)];
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), D.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = D.row(idx[i]);
    return out;
}

Eigen::VectorXd ClusteredSystem::rows_c(int g) const {
    const auto& idx = row_sets[static_cast<std::size_t>(g)];
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = c(idx[i]);
    return out;
}

ClusteredSystem ClusteredSystem::single(const RegressionSystem& sys, double mean_c, double var_c) {
    ClusteredSystem cs;
    cs.D = sys.D;
    cs.c = sys.c;
    cs.row_sets.resize(1);
    cs.row_sets[0].resize(static_cast<std::size_t>(sys.n()));
    for (Eigen::Index i = 0; i < sys.n(); ++i) cs.row_sets[0][static_cast<std::size_t>(i)] = static_cast<int>(i);
    cs.noise_c = gmm::GmmSpec{{1.0}, {mean_c}, {var_c}};
    cs.noise_D = gmm::GmmSpec{{1.0}, {0.0}, {0.0}};
    return cs;
}

ClusteredSystem ClusteredSystem::from_assignment(const RegressionSystem& sys,
                                                 const gmm::ClusterAssignment& assign,
                                                 gmm::GmmSpec noise_c, gmm::GmmSpec noise_D) {
    ClusteredSystem cs;
    cs.D = sys.D;
    cs.c = sys.c;
    cs.row_sets = assign.index_sets;
    cs.noise_c = std::move(noise_c);
    cs.noise_D = std::move(noise_D);
    return cs;
}

Eigen::VectorXd ls_estimate(const RegressionSystem& sys, double condition_cap) {
    sys.validate();
    return qr_solve(sys.D, sys.c, condition_cap, "ls_estimate");
}

Eigen::VectorXd tls_estimate(const RegressionSystem& sys) {
    sys.validate();
    return tls_core(sys.D, sys.c);
}

ConstrainedResult constrained_ls(const RegressionSystem& sys, const Eigen::VectorXd& x0,
                                 double box_fraction) {
    sys.validate();
    const Eigen::MatrixXd reduced = eliminate_equality(sys.D);
    ConstrainedResult res;
    try {
        res.x = expand_equality(qr_solve(reduced, sys.c, 1e12, "constrained_ls"));
    } catch (const IllConditioned& e) {
        throw Infeasible(e.what());
    }
    apply_box(res, x0, box_fraction);
    return res;
}

ConstrainedResult constrained_tls(const RegressionSystem& sys, const Eigen::VectorXd& x0,
                                  double box_fraction) {
    sys.validate();
    ConstrainedResult res;
    res.x = expand_equality(tls_core(eliminate_equality(sys.D), sys.c));
    apply_box(res, x0, box_fraction);
    return res;
}

Eigen::VectorXd gmm_dep_estimate(const ClusteredSystem& clustered, double condition_cap) {
    // Stack 1/sigma_g-scaled, mean-corrected rows and solve one QR problem;
    // algebraically identical to the closed-form normal-equation expression.
    Eigen::MatrixXd Dw(clustered.n(), clustered.p());
    Eigen::VectorXd cw(clustered.n());
    Eigen::Index row = 0;
    for (int g = 0; g < clustered.m(); ++g) {
        const double var = clustered.noise_c.variances[static_cast<std::size_t>(g)];
        if (!(var > 0.0)) throw DegenerateVariance("gmm_dep_estimate: component variance <= 0");
        const double inv_sd = 1.0 / std::sqrt(var);
        const double mu = clustered.noise_c.means[static_cast<std::size_t>(g)];
        for (int idx : clustered.row_sets[static_cast<std::size_t>(g)]) {
            Dw.row(row) = clustered.D.row(idx) * inv_sd;
            cw(row) = (clustered.c(idx) - mu) * inv_sd;
            ++row;
        }
    }
    return qr_solve(Dw.topRows(row), cw.head(row), condition_cap, "gmm_dep_estimate");
}

namespace {

struct ComponentState {
    double mu_net = 0.0;
    double sigma_net = 0.0;
    Eigen::VectorXd lambda;
};

ComponentState component_state(const Eigen::VectorXd& x, const ClusteredSystem& cs, int g) {
    const auto gi = static_cast<std::size_t>(g);
    ComponentState st;
    st.mu_net = cs.noise_c.means[gi] - cs.noise_D.means[gi] * x.sum();
    st.sigma_net = cs.noise_c.variances[gi] + cs.noise_D.variances[gi] * x.squaredNorm();
    if (!(st.sigma_net > 0.0)) {
        throw DegenerateVariance("eiv: net variance <= 0 for component " + std::to_string(g));
    }
    st.lambda = (cs.rows_c(g) - cs.rows_D(g) * x).array() - st.mu_net;
    st.lambda /= st.sigma_net;
    return st;
}

}  // namespace

EivResidual eiv_residual(const Eigen::VectorXd& x, const ClusteredSystem& clustered) {
    EivResidual res;
    res.f = Eigen::VectorXd::Zero(clustered.p());
    res.lambdas.resize(static_cast<std::size_t>(clustered.m()));
    for (int g = 0; g < clustered.m(); ++g) {
        const auto gi = static_cast<std::size_t>(g);
        ComponentState st = component_state(x, clustered, g);
        const double s2d = clustered.noise_D.variances[gi];
        const double mud = clustered.noise_D.means[gi];
        // (D_g - D_e_hat_g)' lambda with D_e_hat_jg = -x_j s2d lambda + mud
        const Eigen::MatrixXd Dg = clustered.rows_D(g);
        const double lam_sum = st.lambda.sum();
        const double lam_sq = st.lambda.squaredNorm();
        res.f += Dg.transpose() * st.lambda - mud * lam_sum * Eigen::VectorXd::Ones(clustered.p()) +
                 s2d * lam_sq * x;
        res.lambdas[gi] = std::move(st.lambda);
    }
    return res;
}

Eigen::MatrixXd eiv_jacobian(const Eigen::VectorXd& x, const ClusteredSystem& clustered) {
    const Eigen::Index p = clustered.p();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(p, p);
    for (int g = 0; g < clustered.m(); ++g) {
        const auto gi = static_cast<std::size_t>(g);
        ComponentState st = component_state(x, clustered, g);
        const double s2d = clustered.noise_D.variances[gi];
        const double mud = clustered.noise_D.means[gi];
        const Eigen::MatrixXd Dg = clustered.rows_D(g);
        Eigen::MatrixXd B = Dg;
        B.array() -= mud;
        B += 2.0 * s2d * st.lambda * x.transpose();
        J += s2d * st.lambda.squaredNorm() * Eigen::MatrixXd::Identity(p, p) -
             B.transpose() * B / st.sigma_net;
    }
    return J;
}

namespace {

Eigen::MatrixXd fd_jacobian(const Eigen::VectorXd& x, const ClusteredSystem& cs, double rel_step) {
    const Eigen::Index p = x.size();
    Eigen::MatrixXd J(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const double h = rel_step * std::max(1.0, std::abs(x(k)));
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        J.col(k) = (eiv_residual(xp, cs).f - eiv_residual(xm, cs).f) / (2.0 * h);
    }
    return J;
}

}  // namespace

NewtonResult eiv_newton_solve(const ClusteredSystem& clustered, const Eigen::VectorXd& x0,
                              const NewtonConfig& cfg) {
    NewtonResult res;
    res.x = x0;
    double fnorm = eiv_residual(res.x, clustered).f.norm();
    Eigen::VectorXd best_x = res.x;
    double best_f = fnorm;
    for (int k = 0; k < cfg.k_max; ++k) {
        const Eigen::MatrixXd J = (cfg.jacobian_mode == NewtonConfig::Jacobian::Analytic)
                                      ? eiv_jacobian(res.x, clustered)
                                      : fd_jacobian(res.x, clustered, cfg.fd_step);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) {
            throw SingularJacobian("eiv_newton_solve: singular Jacobian at iteration " +
                                   std::to_string(k));
        }
        const Eigen::VectorXd f = eiv_residual(res.x, clustered).f;
        Eigen::VectorXd step = lu.solve(f);
        Eigen::VectorXd x_new = res.x - step;
        double f_new = eiv_residual(x_new, clustered).f.norm();
        for (int h = 0; h < 20 && f_new > fnorm; ++h) {
            step *= 0.5;
            x_new = res.x - step;
            f_new = eiv_residual(x_new, clustered).f.norm();
        }
        const double dx = (x_new - res.x).norm();
        res.x = x_new;
        fnorm = f_new;
        if (fnorm <= best_f) {
            best_f = fnorm;
            best_x = res.x;
        }
        res.iterations = k + 1;
        if (dx < cfg.tol_x) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) res.x = best_x;
    return res;
}

NoiseEstimates recover_noise(const Eigen::VectorXd& x_hat,
                             const std::vector<Eigen::VectorXd>& lambdas,
                             const ClusteredSystem& clustered) {
    NoiseEstimates est;
    est.c_e_hat = Eigen::VectorXd::Zero(clustered.n());
    est.D_e_hat = Eigen::MatrixXd::Zero(clustered.n(), clustered.p());
    est.lambdas = lambdas;
    for (int g = 0; g < clustered.m(); ++g) {
        const auto gi = static_cast<std::size_t>(g);
        const double s2c = clustered.noise_c.variances[gi];
        const double muc = clustered.noise_c.means[gi];
        const double s2d = clustered.noise_D.variances[gi];
        const double mud = clustered.noise_D.means[gi];
        const auto& idx = clustered.row_sets[gi];
        const Eigen::VectorXd& lam = lambdas[gi];
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const auto li = static_cast<Eigen::Index>(i);
            est.c_e_hat(idx[i]) = s2c * lam(li) + muc;
            for (Eigen::Index j = 0; j < clustered.p(); ++j) {
                est.D_e_hat(idx[i], j) = -x_hat(j) * s2d * lam(li) + mud;
            }
        }
    }
    return est;
}

}  // namespace egle::estimators
