#pragma once

// Experiment runner: turns an ExperimentConfig into artifacts on disk.
//
//   simulate       trajectory.csv, checks.json, fits.json, energy.svg, config.txt
//   observability  observability.json, config.txt
//   sweep          one sub-directory per grid point, summary.csv
//   preset         one sub-directory per run of the bundle, acceptance.json
//
// Output is deterministic given the config (SVG timestamps can be disabled).

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bistab/config.hpp"
#include "bistab/decay_analysis.hpp"
#include "bistab/observability.hpp"
#include "bistab/propagator.hpp"

namespace bistab {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_numerical = 2, exit_acceptance = 3 };

/// System described by the model section (built model or custom data).
SpectralSystem build_system(const ExperimentConfig& cfg);
State initial_state(const ExperimentConfig& cfg, const SpectralSystem& sys);
FeedbackLaw feedback_law(const ExperimentConfig& cfg);
ObservabilityOptions observability_options(const ExperimentConfig& cfg);
/// Resolves obs.hfun; logexp:auto calibrates c_T on the weak-H sample set.
std::optional<HFunction> resolve_hfun(const ExperimentConfig& cfg, const SpectralSystem& sys);

struct SimulationOutcome {
    Trajectory trajectory;
    std::optional<HFunction> hfun;
    Real y0_norm_da = 0.0;
    std::optional<DecayFit> power_fit;
    std::vector<DecayFit> validations;
    nlohmann::json checks;
};

/// Runs a simulate-mode config, writing its artifacts into `dir`.
SimulationOutcome run_simulation(const ExperimentConfig& cfg, const std::string& dir);

/// Runs an observability-mode config, writing observability.json into `dir`.
ObservabilityReport run_observability(const ExperimentConfig& cfg, const std::string& dir);

struct AcceptanceLine {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct RunResult {
    int exit_code = exit_ok;
    std::vector<AcceptanceLine> acceptance;  // preset mode only
};

/// Names accepted by preset mode.
const std::vector<std::string>& preset_names();
/// Base config of a preset bundle (the bundle itself runs several variants).
ExperimentConfig preset_config(const std::string& name);

/// Executes cfg into cfg.out_dir. Throws ConfigError, InvalidArgument or
/// NumericalFailure; use run_guarded for exit-code semantics.
RunResult run(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// run() with errors mapped to exit codes and a machine-readable error.json
/// written to cfg.out_dir (and printed to `err`).
int run_guarded(const ExperimentConfig& cfg, std::ostream* log, std::ostream& err);

/// {"status": "error", "kind": kind, "message": message}
nlohmann::json error_json(const std::string& kind, const std::string& message);

}  // namespace bistab
