#pragma once

namespace egle::harness {

/// CLI entry point (subcommands: generate, estimate, mc, sweep-noise,
/// sweep-init, bic-demo). Returns 0 on success, 1 on configuration or input
/// errors, 2 on estimation failures.
int cli_main(int argc, const char* const* argv);

}  // namespace egle::harness
