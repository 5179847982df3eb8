#pragma once

#include "pspin/runner/config.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pspin::runner {

/// Exit status, files written (relative to the output directory) and a
/// human-readable summary table.
struct CommandResult {
    int exit_code = 0;
    std::vector<std::string> files;
    std::string summary;
};

/// Replaceable pieces of the property suite; the defaults are the library
/// functions. Used to check that the suite catches a corrupted formula.
struct VerifyHooks {
    std::function<Mixture(const Mixture&, const OverlapVector&)> shifted_coefficients =
        [](const Mixture& xi, const OverlapVector& q) { return pspin::shifted_coefficients(xi, q); };
};

struct CheckOutcome {
    std::string name;
    /// "pass", "fail" or "skip".
    std::string status;
    std::string detail;
};

/// Every property check on the configured model. Failures and exceptions
/// are recorded per check; the suite always runs to the end.
std::vector<CheckOutcome> run_property_suite(const ExperimentConfig& config, const VerifyHooks& hooks = {});

/// verify.json and verify.csv; exit code 1 when any check fails.
CommandResult cmd_verify(const ExperimentConfig& config, const VerifyHooks& hooks = {});
/// free_energy.csv and free_energy.json, one row per disorder seed.
CommandResult cmd_free_energy(const ExperimentConfig& config);
/// ground_state.csv and ground_state.json with the eigen oracle column for
/// pure 2-spin single-species models; maximizer_<i>.bin when requested.
CommandResult cmd_ground_state(const ExperimentConfig& config);
/// tap_scan.csv (one row per grid point) and tap_scan.json.
CommandResult cmd_tap_scan(const ExperimentConfig& config);
/// multisamp.csv and multisamp.json, reporting both the mean over seeds of
/// the per-instance log frequency and the log of the pooled frequency.
CommandResult cmd_multisamp(const ExperimentConfig& config);

/// Dispatches on the command name; throws std::invalid_argument otherwise.
CommandResult run_command(const std::string& name, const ExperimentConfig& config);
const std::vector<std::string>& command_names();

} // namespace pspin::runner
