#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "egle/harness.hpp"

namespace egle::harness {

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json spec_json(const gmm::GmmSpec& spec);
nlohmann::json config_echo_json(const McConfig& cfg);

/// Single-estimate report. `report` carries the EGLE internals when the
/// method produced them; `truth` adds per-parameter AREs when known.
nlohmann::json estimate_result_json(const std::string& method, const Eigen::VectorXd& y,
                                    const std::optional<EstimationReport>& report,
                                    const std::optional<tlpe::LineParameters>& truth,
                                    const nlohmann::json& config_echo, bool converged);

nlohmann::json mc_report_json(const McReport& report, const nlohmann::json& config_echo);
nlohmann::json noise_sweep_json(const NoiseSweepReport& sweep, const nlohmann::json& config_echo);
nlohmann::json init_sweep_json(const InitSweepReport& sweep, const nlohmann::json& config_echo);

/// One row per method x parameter: method,parameter,mare,sdare.
std::string mc_summary_csv(const McReport& report);

}  // namespace egle::harness
