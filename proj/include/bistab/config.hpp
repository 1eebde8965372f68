#pragma once

// Experiment configuration: a line-based `key = value` format with dotted
// keys and `#` comments. Every key except `mode` (and `model.family` outside
// preset mode) has a default; `bistab validate` prints the effective config.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bistab/models.hpp"
#include "bistab/spectral_core.hpp"

namespace bistab {

enum class Mode { simulate, observability, sweep, preset };

std::string to_string(Mode m);

enum class InitialKind { smooth, random, mode };

struct CustomSystem {
    std::vector<Complex> eigenvalues;
    CMatrix b_matrix;
    std::vector<Real> k_weights;  // empty: 1 + |lambda|^2
    /// JSON snapshot written by to_json(SpectralSystem); overrides the inline data.
    std::string snapshot;
};

struct ExperimentConfig {
    Mode mode = Mode::simulate;
    std::string preset;

    // model.*; family == nullopt means custom spectral data
    std::optional<models::Family> family;
    int n_modes = 64;
    models::DampingProfile damping = models::DampingProfile::interval(0.0, 1.5707963267948966);
    Real beta = 0.1;
    Real theta = 0.5;
    CustomSystem custom;

    // control.*
    Real r = 2.0;
    std::optional<Real> state_epsilon;  // unset: auto
    bool control_off = false;

    // numerics.*
    std::optional<Real> dt;  // unset: default_dt(system)
    Real t_final = 100.0;
    int stride = 100;
    Real quad_dt = 1e-3;
    Real stop_energy_ratio = 0.0;

    // initial.*
    InitialKind initial = InitialKind::smooth;
    Real initial_norm = 1.0;
    int initial_mode = 0;
    std::uint64_t initial_seed = 7;

    // obs.*
    Real obs_horizon = 6.283185307179586;
    std::string obs_flavor = "exact";
    std::string obs_hfun = "constant";  // descriptor or logexp:auto
    int obs_samples = 64;
    std::uint64_t obs_seed = 42;
    std::string obs_method = "gramian";
    int obs_refine_steps = 100;

    // analysis.*
    std::vector<std::string> bounds;  // power:p, log_square, hfun_inverse, kfun_inverse
    bool fit = true;
    Real split = 0.5;
    Real slack = 1.0;
    std::optional<std::pair<Real, Real>> window;  // unset: [10 T, t_final]

    // checks.*
    bool check_dissipation = true;
    bool check_lemma2 = true;
    std::optional<Real> check_horizon;  // unset: obs.T
    int eval_every = 100;

    // sweep.*
    std::vector<Real> sweep_r;
    std::vector<Real> sweep_beta;
    std::vector<std::pair<Real, Real>> sweep_interval;
    std::vector<int> sweep_n_modes;

    // output.*
    std::string out_dir = "bistab_out";
    bool emit_plots = true;
    bool svg_timestamp = true;
};

/// Throws ConfigError (with the offending line number where there is one).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text listing every effective value; parse_config reads it back
/// to an equal config.
std::string serialize_config(const ExperimentConfig& cfg);

/// Cross-field checks that do not depend on line positions.
void validate_config(const ExperimentConfig& cfg);

/// Reference lines of the accepted keys with their defaults.
std::string config_reference();

}  // namespace bistab
