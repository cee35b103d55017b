#include "egle/report_json.hpp"

#include <sstream>

namespace egle::harness {

using nlohmann::json;

json spec_json(const gmm::GmmSpec& spec) {
    return json{{"m", spec.m()},
                {"weights", spec.weights},
                {"means", spec.means},
                {"variances", spec.variances}};
}

namespace {

json vector_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

json line_params_json(const tlpe::LineParameters& p) {
    return json{{"r", p.r}, {"x", p.x}, {"b", p.b}};
}

json are_json(const ParamAre& a) {
    return json{{"r", a.r}, {"x", a.x}, {"b", a.b}};
}

json metrics_json(const MethodMetrics& m) {
    return json{{"mare", are_json(m.mare)},
                {"sdare", are_json(m.sdare)},
                {"mare_net", m.mare_net},
                {"sdare_net", m.sdare_net},
                {"median_net", m.median_net},
                {"se_net", m.se_net},
                {"failures", m.failures},
                {"divergence_flags", m.divergence_flags}};
}

json methods_block(const McReport& report) {
    json methods = json::object();
    for (std::size_t mi = 0; mi < report.methods.size(); ++mi) {
        json entry = metrics_json(report.metrics[mi]);
        std::vector<double> per_run_net;
        per_run_net.reserve(report.results[mi].size());
        for (const auto& run : report.results[mi]) {
            per_run_net.push_back(run.ok ? run.are.net() : -1.0);
        }
        entry["per_run_net"] = per_run_net;  // -1 marks a failed run
        methods[method_name(report.methods[mi])] = std::move(entry);
    }
    return methods;
}

json mc_body(const McReport& report) {
    return json{{"runs", report.runs},
                {"base_seed", report.base_seed},
                {"truth", line_params_json(report.truth)},
                {"methods", methods_block(report)}};
}

}  // namespace

json config_echo_json(const McConfig& cfg) {
    json j;
    j["scenario"] = {{"r", cfg.scenario.true_params.r},
                     {"x", cfg.scenario.true_params.x},
                     {"b", cfg.scenario.true_params.b},
                     {"s", cfg.scenario.s},
                     {"loading_variation", cfg.scenario.loading_variation},
                     {"base_load", cfg.scenario.base_load},
                     {"seed", cfg.scenario.seed}};
    j["noise_c"] = spec_json(cfg.scenario.noise_c);
    j["noise_D"] = spec_json(cfg.scenario.noise_D);
    j["egle"] = {{"m_max", cfg.egle.m_max},
                 {"i_max", cfg.egle.i_max},
                 {"eps0", cfg.egle.eps0},
                 {"eps1", cfg.egle.eps1},
                 {"eps2", cfg.egle.newton.tol_x},
                 {"k_max", cfg.egle.newton.k_max},
                 {"em_max_iter", cfg.egle.em.max_iter},
                 {"em_tol", cfg.egle.em.tol},
                 {"variance_floor", cfg.egle.em.variance_floor},
                 {"em_seed", cfg.egle.em.seed},
                 {"cold_start", cfg.egle.em_cold_start}};
    j["mtee"] = {{"kernel_sigma", cfg.mtee.kernel_sigma},
                 {"step_size", cfg.mtee.step_size},
                 {"max_iter", cfg.mtee.max_iter},
                 {"tol", cfg.mtee.tol},
                 {"backtracking", cfg.mtee.backtracking}};
    j["mad"] = {{"window", cfg.mad.window},
                {"threshold", cfg.mad.threshold},
                {"replacement",
                 cfg.mad.replacement == baselines::MadConfig::Replacement::Median ? "median"
                                                                                  : "interpolate"}};
    std::vector<std::string> names;
    for (const auto method : cfg.methods) names.push_back(method_name(method));
    j["mc"] = {{"runs", cfg.runs},
               {"init_jitter", cfg.init_jitter},
               {"base_seed", cfg.base_seed},
               {"threads", cfg.threads},
               {"methods", names}};
    return j;
}

json estimate_result_json(const std::string& method, const Eigen::VectorXd& y,
                          const std::optional<EstimationReport>& report,
                          const std::optional<tlpe::LineParameters>& truth,
                          const json& config_echo, bool converged) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "estimation_report";
    j["method"] = method;
    j["x_hat"] = vector_json(y);
    j["line_params"] = line_params_json(tlpe::recover_line_params(tlpe::YVector::from_vector(y)));
    j["converged"] = converged;
    j["config_echo"] = config_echo;
    if (report) {
        j["m_star"] = report->m_star;
        json trace = json::array();
        for (const auto& entry : report->bic_trace) {
            trace.push_back({{"m", entry.m},
                             {"bic", entry.failed ? json() : json(entry.bic)},
                             {"failed", entry.failed}});
        }
        j["bic_trace"] = std::move(trace);
        j["noise_c"] = spec_json(report->noise_c);
        if (report->noise_D.m() > 0) j["noise_D"] = spec_json(report->noise_D);
        j["outer_iterations"] = report->outer_iterations;
        j["newton_converged"] = report->newton_converged;
        j["seconds"] = report->seconds;
    }
    if (truth) {
        const auto est = tlpe::recover_line_params(tlpe::YVector::from_vector(y));
        j["truth"] = line_params_json(*truth);
        j["are"] = are_json(line_param_are(est, *truth));
    }
    return j;
}

json mc_report_json(const McReport& report, const json& config_echo) {
    json j = mc_body(report);
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "mc_report";
    j["config_echo"] = config_echo;
    return j;
}

json noise_sweep_json(const NoiseSweepReport& sweep, const json& config_echo) {
    json levels = json::array();
    for (std::size_t i = 0; i < sweep.scales.size(); ++i) {
        json level = mc_body(sweep.reports[i]);
        level["scale"] = sweep.scales[i];
        levels.push_back(std::move(level));
    }
    return json{{"schema_version", kReportSchemaVersion},
                {"kind", "noise_sweep_report"},
                {"levels", levels},
                {"config_echo", config_echo}};
}

json init_sweep_json(const InitSweepReport& sweep, const json& config_echo) {
    json bins = json::array();
    for (std::size_t i = 0; i < sweep.bins.size(); ++i) {
        json bin = mc_body(sweep.reports[i]);
        bin["ri_lo"] = sweep.bins[i].lo;
        bin["ri_hi"] = sweep.bins[i].hi;
        bins.push_back(std::move(bin));
    }
    return json{{"schema_version", kReportSchemaVersion},
                {"kind", "init_sweep_report"},
                {"bins", bins},
                {"config_echo", config_echo}};
}

std::string mc_summary_csv(const McReport& report) {
    std::ostringstream out;
    out << "method,parameter,mare,sdare\n";
    out.precision(12);
    for (std::size_t mi = 0; mi < report.methods.size(); ++mi) {
        const auto& m = report.metrics[mi];
        const std::string name = method_name(report.methods[mi]);
        out << name << ",r," << m.mare.r << ',' << m.sdare.r << "\n";
        out << name << ",x," << m.mare.x << ',' << m.sdare.x << "\n";
        out << name << ",b," << m.mare.b << ',' << m.sdare.b << "\n";
        out << name << ",net," << m.mare_net << ',' << m.sdare_net << "\n";
    }
    return out.str();
}

}  // namespace egle::harness
