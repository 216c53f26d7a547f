#pragma once

#include <iosfwd>
#include <string>

#include "mkv/config.hpp"
#include "mkv/dro.hpp"

namespace mkv {

// Process exit codes of the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitStatistical = 4;

/// Terminal-law summary plus optional raw path dump (simulate-<seed>.json/.bin).
int run_simulate(const RunConfig& cfg, unsigned workers, std::ostream& log);

/// Full sensitivity pipeline; writes sensitivity-<seed>.json.
int run_sensitivity(const RunConfig& cfg, unsigned workers, std::ostream& log);

/// Brute-force DRO curve against the in-run sensitivity estimate; writes
/// validate-<seed>.csv and returns kExitStatistical on slope mismatch or a
/// flat criterion.
int run_validate(const RunConfig& cfg, unsigned workers, std::ostream& log);

/// Closed-form check for mean-reversion/constant-volatility configs; writes
/// oracle-<seed>.json.
int run_oracle(const RunConfig& cfg, unsigned workers, std::ostream& log);

/// Dispatch by subcommand name; maps engine errors to exit codes.
int run_command(const std::string& command, const RunConfig& cfg, unsigned workers,
                std::ostream& log);

/// The sensitivity JSON bytes for a config (the artifact payload, exposed
/// for determinism checks).
std::string sensitivity_report_json(const RunConfig& cfg, unsigned workers);

} // namespace mkv
