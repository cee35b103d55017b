#include "egle/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace egle::baselines {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
    return 0.5 * (hi + v[mid - 1]);
}

// Silverman bandwidth on the error sample; floor keeps the kernel usable on
// near-constant inputs.
double silverman_sigma(const Eigen::VectorXd& e) {
    const double n = static_cast<double>(e.size());
    const double mean = e.mean();
    const double sd = std::sqrt((e.array() - mean).square().sum() / n);
    std::vector<double> v(e.data(), e.data() + e.size());
    std::sort(v.begin(), v.end());
    const auto q = [&](double f) { return v[static_cast<std::size_t>(f * (n - 1))]; };
    const double iqr = q(0.75) - q(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    const double h = 0.9 * spread * std::pow(n, -0.2);
    return h > 0.0 ? h : 1e-6;
}

}  // namespace

Eigen::VectorXd total_error(const estimators::RegressionSystem& sys, const Eigen::VectorXd& x) {
    if (!x.allFinite()) throw InvalidSample("total_error: non-finite x");
    return (sys.c - sys.D * x) / std::sqrt(x.squaredNorm() + 1.0);
}

double renyi_entropy(const Eigen::VectorXd& errors, double sigma) {
    const Eigen::Index n = errors.size();
    const double s = sigma * std::numbers::sqrt2;  // kernel size sigma*sqrt(2)
    const double norm = 1.0 / (kSqrt2Pi * s);
    const double inv_2s2 = 1.0 / (2.0 * s * s);
    double sum = static_cast<double>(n) * norm;  // i == j diagonal
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = errors(j) - errors(i);
            sum += 2.0 * norm * std::exp(-d * d * inv_2s2);
        }
    }
    return -std::log(sum / (static_cast<double>(n) * static_cast<double>(n)));
}

Eigen::VectorXd renyi_entropy_gradient(const estimators::RegressionSystem& sys,
                                       const Eigen::VectorXd& x, double sigma) {
    const Eigen::Index n = sys.n();
    const Eigen::Index p = sys.p();
    const double u = std::sqrt(x.squaredNorm() + 1.0);
    const Eigen::VectorXd r = sys.c - sys.D * x;
    const Eigen::VectorXd e = r / u;

    const double s = sigma * std::numbers::sqrt2;
    const double norm = 1.0 / (kSqrt2Pi * s);
    const double inv_s2 = 1.0 / (s * s);
    const double inv_2s2 = 0.5 * inv_s2;

    // de_i/dx = -D_i/u - e_i x / u^2  (rows of the error Jacobian)
    double V = static_cast<double>(n) * norm;
    Eigen::VectorXd gradV = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = e(j) - e(i);
            const double g = norm * std::exp(-d * d * inv_2s2);
            V += 2.0 * g;
            // d(d_ji)/dx = -(D_j - D_i)/u - d_ji x / u^2
            const double w = 2.0 * g * (-d * inv_s2);
            gradV += w * (-(sys.D.row(j) - sys.D.row(i)).transpose() / u - d * x / (u * u));
        }
    }
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    V /= n2;
    gradV /= n2;
    return -gradV / V;
}

MteeResult mtee_estimate(const estimators::RegressionSystem& sys, const Eigen::VectorXd& x0,
                         const MteeConfig& cfg) {
    sys.validate();
    if (x0.size() != sys.p()) throw InvalidSample("mtee_estimate: x0 must have p entries");

    const double sigma =
        cfg.kernel_sigma > 0.0 ? cfg.kernel_sigma : silverman_sigma(total_error(sys, x0));

    MteeResult res;
    res.x = x0;
    double entropy = renyi_entropy(total_error(sys, res.x), sigma);
    res.entropy_trace.push_back(entropy);
    double step = cfg.step_size;
    for (int it = 0; it < cfg.max_iter; ++it) {
        const Eigen::VectorXd grad = renyi_entropy_gradient(sys, res.x, sigma);
        const double gnorm = grad.norm();
        if (gnorm == 0.0) {
            res.converged = true;
            break;
        }
        if (step <= 0.0) step = 0.01 * std::max(res.x.norm(), 1.0) / gnorm;

        Eigen::VectorXd x_new = res.x - step * grad;
        double h_new = renyi_entropy(total_error(sys, x_new), sigma);
        if (cfg.backtracking) {
            double local = step;
            for (int h = 0; h < 20 && h_new > entropy; ++h) {
                local *= 0.5;
                x_new = res.x - local * grad;
                h_new = renyi_entropy(total_error(sys, x_new), sigma);
            }
        }
        const double dx = (x_new - res.x).norm();
        res.x = x_new;
        entropy = h_new;
        res.entropy_trace.push_back(entropy);
        res.iterations = it + 1;
        if (dx < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

MadResult mad_denoise(const Eigen::VectorXd& series, const MadConfig& cfg) {
    const Eigen::Index n = series.size();
    if (cfg.window < 3) throw InvalidSample("mad_denoise: window >= 3 required");
    if (n < cfg.window) throw InsufficientSamples("mad_denoise: series shorter than window");

    MadResult res;
    res.cleaned = series;
    res.flags.assign(static_cast<std::size_t>(n), false);
    std::vector<double> medians(static_cast<std::size_t>(n));

    const Eigen::Index half = cfg.window / 2;
    std::vector<double> window, dev;
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, t - half);
        const Eigen::Index hi = std::min(n - 1, t + half);
        window.assign(series.data() + lo, series.data() + hi + 1);
        const double med = median_of(window);
        dev.resize(window.size());
        for (std::size_t i = 0; i < window.size(); ++i) dev[i] = std::abs(window[i] - med);
        const double mad = 1.4826 * median_of(dev);
        medians[static_cast<std::size_t>(t)] = med;
        if (std::abs(series(t) - med) > cfg.threshold * mad) {
            res.flags[static_cast<std::size_t>(t)] = true;
        }
    }

    if (cfg.replacement == MadConfig::Replacement::Median) {
        for (Eigen::Index t = 0; t < n; ++t) {
            if (res.flags[static_cast<std::size_t>(t)]) res.cleaned(t) = medians[static_cast<std::size_t>(t)];
        }
    } else {
        for (Eigen::Index t = 0; t < n; ++t) {
            if (!res.flags[static_cast<std::size_t>(t)]) continue;
            Eigen::Index prev = t - 1;
            while (prev >= 0 && res.flags[static_cast<std::size_t>(prev)]) --prev;
            Eigen::Index next = t + 1;
            while (next < n && res.flags[static_cast<std::size_t>(next)]) ++next;
            if (prev >= 0 && next < n) {
                const double w = static_cast<double>(t - prev) / static_cast<double>(next - prev);
                res.cleaned(t) = (1.0 - w) * series(prev) + w * series(next);
            } else if (prev >= 0) {
                res.cleaned(t) = series(prev);
            } else if (next < n) {
                res.cleaned(t) = series(next);
            } else {
                res.cleaned(t) = medians[static_cast<std::size_t>(t)];
            }
        }
    }
    return res;
}

Eigen::VectorXd denoise_then_ls(const std::vector<tlpe::PhasorRecord>& records,
                                const MadConfig& cfg) {
    const auto s = static_cast<Eigen::Index>(records.size());
    // Channel layout: Vp_r, Vp_i, Vq_r, Vq_i, Ip_r, Ip_i, Iq_r, Iq_i.
    Eigen::MatrixXd channels(s, 8);
    for (Eigen::Index i = 0; i < s; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        channels.row(i) << r.vp.real(), r.vp.imag(), r.vq.real(), r.vq.imag(), r.ip.real(),
            r.ip.imag(), r.iq.real(), r.iq.imag();
    }
    for (Eigen::Index ch = 0; ch < 8; ++ch) {
        channels.col(ch) = mad_denoise(channels.col(ch), cfg).cleaned;
    }
    std::vector<tlpe::PhasorRecord> cleaned(records.size());
    for (Eigen::Index i = 0; i < s; ++i) {
        auto& r = cleaned[static_cast<std::size_t>(i)];
        r.t = records[static_cast<std::size_t>(i)].t;
        r.vp = {channels(i, 0), channels(i, 1)};
        r.vq = {channels(i, 2), channels(i, 3)};
        r.ip = {channels(i, 4), channels(i, 5)};
        r.iq = {channels(i, 6), channels(i, 7)};
    }
    return estimators::ls_estimate(tlpe::build_system(cleaned));
}

}  // namespace egle::baselines
