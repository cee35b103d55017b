#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "egle/baselines.hpp"
#include "egle/egle.hpp"
#include "egle/estimators.hpp"
#include "egle/gmm.hpp"
#include "egle/harness.hpp"
#include "egle/tlpe.hpp"

namespace py = pybind11;
using namespace egle;

namespace {

estimators::RegressionSystem make_system(const Eigen::MatrixXd& D, const Eigen::VectorXd& c) {
    estimators::RegressionSystem sys{D, c};
    sys.validate();
    return sys;
}

EgleConfig make_egle_config(const Eigen::VectorXd& x0, int m_max, int i_max, double eps1,
                            double eps2, int k_max, int em_max_iter, double em_tol) {
    EgleConfig cfg;
    cfg.x0 = x0;
    cfg.m_max = m_max;
    cfg.i_max = i_max;
    cfg.eps1 = eps1;
    cfg.newton.tol_x = eps2;
    cfg.newton.k_max = k_max;
    cfg.em.max_iter = em_max_iter;
    cfg.em.tol = em_tol;
    return cfg;
}

py::dict report_dict(const EstimationReport& rep) {
    py::dict d;
    d["x_hat"] = rep.x_hat;
    d["m_star"] = rep.m_star;
    py::list trace;
    for (const auto& e : rep.bic_trace) {
        py::dict entry;
        entry["m"] = e.m;
        entry["bic"] = e.bic;
        entry["failed"] = e.failed;
        trace.append(entry);
    }
    d["bic_trace"] = trace;
    py::dict noise_c;
    noise_c["weights"] = rep.noise_c.weights;
    noise_c["means"] = rep.noise_c.means;
    noise_c["variances"] = rep.noise_c.variances;
    d["noise_c"] = noise_c;
    if (rep.noise_D.m() > 0) {
        py::dict noise_D;
        noise_D["weights"] = rep.noise_D.weights;
        noise_D["means"] = rep.noise_D.means;
        noise_D["variances"] = rep.noise_D.variances;
        d["noise_D"] = noise_D;
    }
    d["outer_iterations"] = rep.outer_iterations;
    d["converged"] = rep.converged;
    d["newton_converged"] = rep.newton_converged;
    d["c_e_hat"] = rep.noise_estimates.c_e_hat;
    d["D_e_hat"] = rep.noise_estimates.D_e_hat;
    return d;
}

}  // namespace

PYBIND11_MODULE(pyegle, m) {
    m.doc() = "Joint noise and parameter estimation for linear regression under "
              "Gaussian-mixture noise, with a transmission-line front-end";

    py::register_exception<EstimationError>(m, "EstimationError");

    py::class_<gmm::GmmSpec>(m, "GmmSpec")
        .def(py::init([](std::vector<double> weights, std::vector<double> means,
                         std::vector<double> variances) {
                 return gmm::GmmSpec{std::move(weights), std::move(means), std::move(variances)};
             }),
             py::arg("weights"), py::arg("means"), py::arg("variances"))
        .def_readwrite("weights", &gmm::GmmSpec::weights)
        .def_readwrite("means", &gmm::GmmSpec::means)
        .def_readwrite("variances", &gmm::GmmSpec::variances)
        .def_property_readonly("m", &gmm::GmmSpec::m)
        .def("mixture_mean", &gmm::GmmSpec::mixture_mean)
        .def("mixture_variance", &gmm::GmmSpec::mixture_variance)
        .def("__repr__", [](const gmm::GmmSpec& s) {
            return "<pyegle.GmmSpec m=" + std::to_string(s.m()) + ">";
        });

    m.def(
        "em_fit",
        [](const Eigen::VectorXd& samples, int m, int max_iter, double tol, std::uint64_t seed) {
            gmm::EmConfig cfg;
            cfg.max_iter = max_iter;
            cfg.tol = tol;
            cfg.seed = seed;
            const auto fit = gmm::em_fit(samples, m, cfg);
            return py::make_tuple(fit.spec, fit.resp, fit.loglik);
        },
        py::arg("samples"), py::arg("m"), py::arg("max_iter") = 200, py::arg("tol") = 1e-8,
        py::arg("seed") = 0,
        "Fit a scalar Gaussian mixture by EM; returns (spec, responsibilities, loglik)");
    m.def("log_likelihood", &gmm::log_likelihood, py::arg("samples"), py::arg("spec"));
    m.def("bic", &gmm::bic, py::arg("loglik"), py::arg("m"), py::arg("n"));
    m.def("gmm_sample", &gmm::gmm_sample, py::arg("spec"), py::arg("n"), py::arg("seed"));

    m.def(
        "ls_estimate",
        [](const Eigen::MatrixXd& D, const Eigen::VectorXd& c) {
            return estimators::ls_estimate(make_system(D, c));
        },
        py::arg("D"), py::arg("c"));
    m.def(
        "tls_estimate",
        [](const Eigen::MatrixXd& D, const Eigen::VectorXd& c) {
            return estimators::tls_estimate(make_system(D, c));
        },
        py::arg("D"), py::arg("c"));

    m.def(
        "egle_dependent",
        [](const Eigen::MatrixXd& D, const Eigen::VectorXd& c, const Eigen::VectorXd& x0,
           int m_max, int i_max, double eps1, double eps2, int k_max, int em_max_iter,
           double em_tol) {
            const auto rep = egle_dependent(
                make_system(D, c),
                make_egle_config(x0, m_max, i_max, eps1, eps2, k_max, em_max_iter, em_tol));
            return report_dict(rep);
        },
        py::arg("D"), py::arg("c"), py::arg("x0"), py::arg("m_max") = 4, py::arg("i_max") = 50,
        py::arg("eps1") = 1e-9, py::arg("eps2") = 1e-12, py::arg("k_max") = 50,
        py::arg("em_max_iter") = 200, py::arg("em_tol") = 1e-8,
        "Joint estimation with noise in the dependent variable only");
    m.def(
        "egle_full",
        [](const Eigen::MatrixXd& D, const Eigen::VectorXd& c, const Eigen::VectorXd& x0,
           int m_max, int i_max, double eps1, double eps2, int k_max, int em_max_iter,
           double em_tol) {
            const auto rep =
                egle_full(make_system(D, c),
                          make_egle_config(x0, m_max, i_max, eps1, eps2, k_max, em_max_iter, em_tol));
            return report_dict(rep);
        },
        py::arg("D"), py::arg("c"), py::arg("x0"), py::arg("m_max") = 4, py::arg("i_max") = 50,
        py::arg("eps1") = 1e-9, py::arg("eps2") = 1e-12, py::arg("k_max") = 50,
        py::arg("em_max_iter") = 200, py::arg("em_tol") = 1e-8,
        "Full errors-in-variables joint noise and parameter estimation");

    m.def(
        "mtee_estimate",
        [](const Eigen::MatrixXd& D, const Eigen::VectorXd& c, const Eigen::VectorXd& x0,
           double kernel_sigma, double step_size, int max_iter, double tol) {
            baselines::MteeConfig cfg;
            cfg.kernel_sigma = kernel_sigma;
            cfg.step_size = step_size;
            cfg.max_iter = max_iter;
            cfg.tol = tol;
            const auto res = baselines::mtee_estimate(make_system(D, c), x0, cfg);
            return py::make_tuple(res.x, res.entropy_trace, res.converged);
        },
        py::arg("D"), py::arg("c"), py::arg("x0"), py::arg("kernel_sigma") = 0.0,
        py::arg("step_size") = 0.0, py::arg("max_iter") = 200, py::arg("tol") = 1e-6);
    m.def(
        "mad_denoise",
        [](const Eigen::VectorXd& series, int window, double threshold) {
            baselines::MadConfig cfg;
            cfg.window = window;
            cfg.threshold = threshold;
            const auto res = baselines::mad_denoise(series, cfg);
            return py::make_tuple(res.cleaned, res.flags);
        },
        py::arg("series"), py::arg("window") = 600, py::arg("threshold") = 3.0);

    py::class_<tlpe::LineParameters>(m, "LineParameters")
        .def(py::init([](double r, double x, double b) {
                 return tlpe::LineParameters{r, x, b};
             }),
             py::arg("r"), py::arg("x"), py::arg("b"))
        .def_readwrite("r", &tlpe::LineParameters::r)
        .def_readwrite("x", &tlpe::LineParameters::x)
        .def_readwrite("b", &tlpe::LineParameters::b)
        .def("__repr__", [](const tlpe::LineParameters& p) {
            return "<pyegle.LineParameters r=" + std::to_string(p.r) +
                   " x=" + std::to_string(p.x) + " b=" + std::to_string(p.b) + ">";
        });

    m.def(
        "line_params_to_y",
        [](const tlpe::LineParameters& p) { return tlpe::line_params_to_y(p).as_vector(); },
        py::arg("params"));
    m.def(
        "recover_line_params",
        [](const Eigen::Vector4d& y) {
            return tlpe::recover_line_params(tlpe::YVector::from_vector(y));
        },
        py::arg("y"));

    m.def(
        "simulate_system",
        [](const tlpe::LineParameters& params, int s, double loading_variation,
           const gmm::GmmSpec& noise_c, const gmm::GmmSpec& noise_D, std::uint64_t seed) {
            tlpe::ScenarioConfig cfg;
            cfg.true_params = params;
            cfg.s = s;
            cfg.loading_variation = loading_variation;
            cfg.noise_c = noise_c;
            cfg.noise_D = noise_D;
            cfg.seed = seed;
            const auto clean = tlpe::simulate_measurements(cfg);
            const auto noisy = tlpe::inject_noise(clean, noise_c, noise_D, seed);
            const auto sys = tlpe::build_system(noisy.records);
            const auto clean_sys = tlpe::build_system(clean);
            return py::make_tuple(sys.D, sys.c, clean_sys.D, clean_sys.c);
        },
        py::arg("params"), py::arg("s"), py::arg("loading_variation"), py::arg("noise_c"),
        py::arg("noise_D"), py::arg("seed"),
        "Simulate a scenario; returns (D_noisy, c_noisy, D_clean, c_clean)");

    m.def("are", &harness::are, py::arg("x_est"), py::arg("x_true"));
}
