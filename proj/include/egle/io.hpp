#pragma once

#include <string>
#include <vector>

#include "egle/harness.hpp"
#include "egle/tlpe.hpp"

namespace egle::harness {

// Measurement CSV contract: header `t,Vp_r,Vp_i,Vq_r,Vq_i,Ip_r,Ip_i,Iq_r,Iq_i`,
// one row per time instant, per-unit floats.
inline constexpr const char* kMeasurementHeader = "t,Vp_r,Vp_i,Vq_r,Vq_i,Ip_r,Ip_i,Iq_r,Iq_i";

void write_measurements_csv(const std::string& path, const std::vector<tlpe::PhasorRecord>& records);

/// Throws ParseError naming the offending row and column on malformed input.
std::vector<tlpe::PhasorRecord> read_measurements_csv(const std::string& path);

// Full tool configuration: everything the CLI subcommands need, with the
// spec'd config-file sections mapped onto one struct.
struct ToolConfig {
    McConfig mc;
};

ToolConfig default_config();

/// Minimal TOML-subset reader: [section] headers, `key = value` lines with
/// numbers, quoted strings, booleans, and arrays of numbers or strings.
/// Unknown sections or keys raise ParseError.
ToolConfig load_config_file(const std::string& path);

}  // namespace egle::harness
