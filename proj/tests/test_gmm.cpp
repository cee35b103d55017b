#include <doctest.h>

#include <cmath>
#include <random>

#include "egle/gmm.hpp"
#include "egle/rng.hpp"
#include "oracles.hpp"

using namespace egle;
using gmm::GmmSpec;

namespace {

// Two-component current-noise mixture used across the suite.
const GmmSpec kTwoComp{{0.3, 0.7}, {0.0, 0.005}, {2.25e-6, 2.25e-6}};

Eigen::VectorXd to_vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

}  // namespace

TEST_CASE("em_fit single component reduces to sample moments") {
    const auto fit = gmm::em_fit(to_vec({1, 2, 3}), 1);
    CHECK(fit.spec.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.spec.means[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.spec.variances[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("em_fit recovers the two-component generator") {
    const auto samples = gmm::gmm_sample(kTwoComp, 20000, 42);
    const auto fit = gmm::em_fit(samples, 2);
    // Components come back sorted by mean.
    CHECK(fit.spec.weights[0] == doctest::Approx(0.3).epsilon(0.05));
    CHECK(fit.spec.weights[1] == doctest::Approx(0.7).epsilon(0.05));
    CHECK(std::abs(fit.spec.means[0]) < 0.05 * 0.005);  // absolute, truth is 0
    CHECK(fit.spec.means[1] == doctest::Approx(0.005).epsilon(0.05));
    CHECK(fit.spec.variances[0] == doctest::Approx(2.25e-6).epsilon(0.10));
    CHECK(fit.spec.variances[1] == doctest::Approx(2.25e-6).epsilon(0.10));
}

TEST_CASE("em_fit degenerate and undersized inputs") {
    CHECK_THROWS_AS(gmm::em_fit(Eigen::VectorXd::Constant(10, 0.5), 2), DegenerateData);
    CHECK_THROWS_AS(gmm::em_fit(to_vec({1.0, 2.0}), 3), InsufficientSamples);
    CHECK_THROWS_AS(gmm::em_fit(to_vec({1.0, std::nan("")}), 1), InvalidSample);
}

TEST_CASE("e_step basics") {
    SUBCASE("single component gives all ones") {
        const auto resp = gmm::e_step(to_vec({-3, 0, 7}), GmmSpec::gaussian(1.0));
        CHECK(resp.minCoeff() == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("symmetric components split evenly at the midpoint") {
        const GmmSpec spec{{0.5, 0.5}, {-1.0, 1.0}, {1.0, 1.0}};
        const auto resp = gmm::e_step(to_vec({0.0}), spec);
        CHECK(resp(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(resp(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("matches a direct density-ratio evaluation") {
        const double s = 0.005;
        auto dens = [](double x, double mu, double var) {
            return std::exp(-(x - mu) * (x - mu) / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
        };
        const double d0 = 0.3 * dens(s, 0.0, 2.25e-6);
        const double d1 = 0.7 * dens(s, 0.005, 2.25e-6);
        const auto resp = gmm::e_step(to_vec({s}), kTwoComp);
        CHECK(resp(0, 0) == doctest::Approx(d0 / (d0 + d1)).epsilon(1e-12));
        CHECK(resp(0, 1) == doctest::Approx(d1 / (d0 + d1)).epsilon(1e-12));
    }
    SUBCASE("NaN sample is rejected") {
        CHECK_THROWS_AS(gmm::e_step(to_vec({std::nan("")}), kTwoComp), InvalidSample);
    }
    SUBCASE("rows stay stochastic under extreme separation") {
        const GmmSpec spec{{0.5, 0.5}, {0.0, 1.0}, {1e-12, 1e-12}};
        const auto resp = gmm::e_step(to_vec({0.0, 1.0, 0.4}), spec);
        for (Eigen::Index i = 0; i < resp.rows(); ++i) {
            CHECK(resp.row(i).sum() == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("m_step moments") {
    SUBCASE("all-ones responsibilities give plain moments") {
        const auto spec = gmm::m_step(to_vec({2, 4}), Eigen::MatrixXd::Ones(2, 1));
        CHECK(spec.weights[0] == doctest::Approx(1.0));
        CHECK(spec.means[0] == doctest::Approx(3.0));
        CHECK(spec.variances[0] == doctest::Approx(1.0));
    }
    SUBCASE("hard assignments equal per-cluster moments") {
        const auto samples = to_vec({1, 2, 10, 14});
        Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(4, 2);
        resp(0, 0) = resp(1, 0) = 1.0;
        resp(2, 1) = resp(3, 1) = 1.0;
        const auto spec = gmm::m_step(samples, resp);
        CHECK(spec.means[0] == doctest::Approx(1.5));
        CHECK(spec.variances[0] == doctest::Approx(0.25));
        CHECK(spec.means[1] == doctest::Approx(12.0));
        CHECK(spec.variances[1] == doctest::Approx(4.0));
        CHECK(spec.weights[0] == doctest::Approx(0.5));
    }
    SUBCASE("random responsibilities match the weighted-moment oracle") {
        std::mt19937_64 eng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const auto samples = to_vec({0.3, -1.2, 2.5, 0.9, -0.4});
        Eigen::MatrixXd resp(5, 2);
        for (Eigen::Index i = 0; i < 5; ++i) {
            const double g0 = u(eng);
            resp(i, 0) = g0;
            resp(i, 1) = 1.0 - g0;
        }
        const auto spec = gmm::m_step(samples, resp);
        for (int g = 0; g < 2; ++g) {
            double ng = 0.0, mu = 0.0;
            for (Eigen::Index i = 0; i < 5; ++i) ng += resp(i, g);
            for (Eigen::Index i = 0; i < 5; ++i) mu += resp(i, g) * samples(i);
            mu /= ng;
            double var = 0.0;
            for (Eigen::Index i = 0; i < 5; ++i) {
                var += resp(i, g) * (samples(i) - mu) * (samples(i) - mu);
            }
            var /= ng;
            CHECK(spec.weights[g] == doctest::Approx(ng / 5.0).epsilon(1e-12));
            CHECK(spec.means[g] == doctest::Approx(mu).epsilon(1e-12));
            CHECK(spec.variances[g] == doctest::Approx(var).epsilon(1e-12));
        }
    }
    SUBCASE("empty component throws") {
        Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(3, 2);
        resp.col(0).setOnes();
        CHECK_THROWS_AS(gmm::m_step(to_vec({1, 2, 3}), resp), EmptyComponent);
    }
}

TEST_CASE("cluster_assign argmax and tie-break") {
    Eigen::MatrixXd resp(3, 2);
    resp << 0.9, 0.1, 0.5, 0.5, 0.2, 0.8;
    const auto assign = gmm::cluster_assign(resp);
    CHECK(assign.labels[0] == 0);
    CHECK(assign.labels[1] == 0);  // tie goes to the lowest index
    CHECK(assign.labels[2] == 1);
    CHECK(assign.counts[0] == 2);
    CHECK(assign.counts[1] == 1);
}

TEST_CASE("cluster_assign partitions the rows") {
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd resp(40, 3);
    for (Eigen::Index i = 0; i < resp.rows(); ++i) {
        double total = 0.0;
        for (Eigen::Index g = 0; g < 3; ++g) total += (resp(i, g) = u(eng));
        resp.row(i) /= total;
    }
    const auto assign = gmm::cluster_assign(resp);
    std::vector<int> seen(40, 0);
    int total = 0;
    for (int g = 0; g < 3; ++g) {
        total += assign.counts[g];
        for (int idx : assign.index_sets[g]) ++seen[static_cast<std::size_t>(idx)];
    }
    CHECK(total == 40);
    for (int count : seen) CHECK(count == 1);
}

TEST_CASE("log_likelihood closed form and oracle") {
    SUBCASE("standard normal at its mean") {
        const double ll = gmm::log_likelihood(to_vec({0.0}), GmmSpec::gaussian(1.0));
        CHECK(ll == doctest::Approx(-0.9189385332046727).epsilon(1e-12));
    }
    SUBCASE("duplicated components collapse to one") {
        const GmmSpec two{{0.5, 0.5}, {0.3, 0.3}, {0.7, 0.7}};
        const GmmSpec one{{1.0}, {0.3}, {0.7}};
        const auto samples = to_vec({-1, 0.2, 0.5, 2.0});
        CHECK(gmm::log_likelihood(samples, two) ==
              doctest::Approx(gmm::log_likelihood(samples, one)).epsilon(1e-14));
    }
    SUBCASE("matches naive direct-space summation") {
        const auto samples = gmm::gmm_sample(kTwoComp, 100, 5);
        const std::vector<double> raw(samples.data(), samples.data() + samples.size());
        const double naive =
            oracles::direct_loglik(raw, kTwoComp.weights, kTwoComp.means, kTwoComp.variances);
        CHECK(gmm::log_likelihood(samples, kTwoComp) == doctest::Approx(naive).epsilon(1e-9));
    }
}

TEST_CASE("bic formula and monotone penalty") {
    CHECK(gmm::bic(-500.0, 1, 100) == doctest::Approx(2.0 * std::log(100.0) + 1000.0).epsilon(1e-12));
    double prev = gmm::bic(-500.0, 1, 100);
    for (int m = 2; m <= 6; ++m) {
        const double next = gmm::bic(-500.0, m, 100);
        CHECK(next > prev);
        prev = next;
    }
}

TEST_CASE("bic selects the four-component order") {
    const GmmSpec four{{0.1, 0.2, 0.5, 0.2},
                       {-0.002, 0.0, 0.005, 0.008},
                       {1e-6, 1e-6, 1e-6, 1e-6}};
    const auto samples = gmm::gmm_sample(four, 5000, 21);
    int best_m = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= 10; ++m) {
        try {
            const auto fit = gmm::em_fit(samples, m);
            const double score = gmm::bic(fit.loglik, m, 5000);
            if (score < best) {
                best = score;
                best_m = m;
            }
        } catch (const EstimationError&) {
        }
    }
    CHECK(best_m == 4);
}

TEST_CASE("gmm_sample determinism and distribution") {
    SUBCASE("same seed reproduces bitwise") {
        const auto a = gmm::gmm_sample(kTwoComp, 512, 99);
        const auto b = gmm::gmm_sample(kTwoComp, 512, 99);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zero-variance component collapses to its mean") {
        const GmmSpec point{{1.0}, {0.42}, {0.0}};
        const auto samples = gmm::gmm_sample(point, 100, 3);
        CHECK((samples.array() - 0.42).abs().maxCoeff() < 1e-4);
    }
    SUBCASE("well-separated component proportions match the weights") {
        const GmmSpec split{{0.3, 0.7}, {0.0, 100.0}, {1.0, 1.0}};
        const auto samples = gmm::gmm_sample(split, 1000000, 17);
        const double frac_low =
            static_cast<double>((samples.array() < 50.0).count()) / samples.size();
        CHECK(frac_low == doctest::Approx(0.3).epsilon(0.01));
    }
    SUBCASE("overlapping mixture matches its theoretical tail mass") {
        const auto samples = gmm::gmm_sample(kTwoComp, 1000000, 17);
        // P(X > 0.0025) under the generator, via the normal CDF.
        auto tail = [](double mu) { return 0.5 * std::erfc((0.0025 - mu) / (0.0015 * std::sqrt(2.0))); };
        const double expected = 0.3 * tail(0.0) + 0.7 * tail(0.005);
        const double frac =
            static_cast<double>((samples.array() > 0.0025).count()) / samples.size();
        CHECK(frac == doctest::Approx(expected).epsilon(0.01));
        CHECK(samples.mean() == doctest::Approx(kTwoComp.mixture_mean()).epsilon(0.01));
    }
}

TEST_CASE("EM log-likelihood is monotone across iterations") {
    std::mt19937_64 eng(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 1 + static_cast<int>(3 * u(eng));
        GmmSpec truth;
        for (int g = 0; g < m; ++g) {
            truth.weights.push_back(1.0);
            truth.means.push_back(4.0 * u(eng) - 2.0);
            truth.variances.push_back(0.05 + u(eng));
        }
        for (auto& w : truth.weights) w /= m;
        const auto samples = gmm::gmm_sample(truth, 300, splitmix64(trial));

        GmmSpec spec = gmm::em_fit(samples, m, {.max_iter = 1}).spec;
        double prev = gmm::log_likelihood(samples, spec);
        for (int it = 0; it < 25; ++it) {
            spec = gmm::m_step(samples, gmm::e_step(samples, spec));
            const double ll = gmm::log_likelihood(samples, spec);
            CHECK(ll >= prev - 1e-9);
            prev = ll;
        }
    }
}

TEST_CASE("sample then fit round-trip recovers separated means") {
    const GmmSpec truth{{0.4, 0.6}, {-1.0, 1.0}, {0.04, 0.04}};  // 10 sigma apart
    const auto samples = gmm::gmm_sample(truth, 20000, 31);
    const auto fit = gmm::em_fit(samples, 2);
    CHECK(fit.spec.means[0] == doctest::Approx(-1.0).epsilon(0.05));
    CHECK(fit.spec.means[1] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("em_fit_from warm start keeps improving the likelihood") {
    const auto samples = gmm::gmm_sample(kTwoComp, 2000, 8);
    const auto cold = gmm::em_fit(samples, 2, {.max_iter = 3});
    const auto warm = gmm::em_fit_from(samples, cold.spec, {.max_iter = 100});
    CHECK(warm.loglik >= cold.loglik - 1e-9);
    CHECK(warm.converged);
}
