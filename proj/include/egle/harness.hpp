#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "egle/baselines.hpp"
#include "egle/egle.hpp"
#include "egle/tlpe.hpp"

namespace egle::harness {

enum class Method { Ls, Tls, Cls, Ctls, EgleDep, EgleFull, Mtee, DenoiseLs };

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

/// |x_est - x_true| / |x_true|; throws ZeroTruth when x_true == 0.
double are(double x_est, double x_true);

// Per-line-parameter absolute relative errors of one estimate.
struct ParamAre {
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;
    double net() const { return r + x + b; }
};

ParamAre line_param_are(const tlpe::LineParameters& est, const tlpe::LineParameters& truth);

/// Relative initialization distance |x0_j - x*_j| / |x*_j| per parameter.
Eigen::VectorXd ri_index(const Eigen::VectorXd& x0, const Eigen::VectorXd& x_true);

struct RunRecord {
    bool ok = false;
    bool converged = true;  // iterative methods only; LS/TLS stay true
    ParamAre are;
    std::string failure;
};

struct MethodMetrics {
    ParamAre mare;       // mean ARE per parameter over successful runs
    ParamAre sdare;      // standard deviation of ARE per parameter
    double mare_net = 0.0;    // mean over runs of the per-run summed ARE
    double sdare_net = 0.0;
    double median_net = 0.0;  // median of the per-run summed ARE
    double se_net = 0.0;      // MC standard error of mare_net
    int failures = 0;
    int divergence_flags = 0; // non-converged iterative runs
};

struct McConfig {
    int runs = 100;
    tlpe::ScenarioConfig scenario;
    std::vector<Method> methods{Method::Ls, Method::Tls, Method::EgleFull};
    double init_jitter = 0.30;  // x0 drawn within +/-30% of truth
    std::uint64_t base_seed = 1;
    EgleConfig egle;            // x0 is filled per run
    baselines::MteeConfig mtee;
    baselines::MadConfig mad;
    int threads = 0;            // 0: hardware concurrency
};

struct McReport {
    int runs = 0;
    std::uint64_t base_seed = 0;
    tlpe::LineParameters truth;
    std::vector<Method> methods;
    std::vector<std::vector<RunRecord>> results;  // [method][run]; paired per run
    std::vector<MethodMetrics> metrics;           // aligned with methods
};

/// Paired Monte-Carlo protocol: the clean records are generated once from the
/// scenario seed; each run derives its own noise and x0-jitter streams from
/// base_seed ^ run index, and every method sees the identical noisy system.
/// Run failures are recorded per method, never fatal. Deterministic for a
/// fixed config, independent of thread count.
McReport monte_carlo_run(const McConfig& cfg);

struct NoiseSweepReport {
    std::vector<double> scales;
    std::vector<McReport> reports;  // one per scale
};

/// Repeats the MC experiment with the mixture means and standard deviations
/// of both noise specs multiplied by each scale factor.
NoiseSweepReport sensitivity_noise_levels(const McConfig& cfg, const std::vector<double>& scales);

struct RiBin {
    double lo = 0.0;
    double hi = 0.0;
};

struct InitSweepReport {
    std::vector<RiBin> bins;
    std::vector<McReport> reports;  // one per bin; noise paired across bins
};

/// Per bin, x0 components are placed at an RI distance drawn uniformly from
/// the bin, with a random sign per parameter. Noise seeds are shared across
/// bins so differences are attributable to initialization alone.
InitSweepReport sensitivity_initialization(const McConfig& cfg, const std::vector<RiBin>& bins);

}  // namespace egle::harness
