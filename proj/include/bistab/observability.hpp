#pragma once

// Observation functional I_T(z) = int_0^T |<B S(t) z, S(t) z>| dt, sampled
// estimates of the observability constants, and the trajectory bound
// relating I_T(y(t)) to the dissipated quantity on [t, t+T].

#include <cstdint>
#include <optional>
#include <string>

#include "bistab/propagator.hpp"
#include "bistab/spectral_core.hpp"

namespace bistab {

enum class Flavor { exact, weak_l, weak_h, null_ctrl };

std::string to_string(Flavor f);
Flavor flavor_from_string(const std::string& s);

/// Composite trapezoid on a uniform grid of step <= quad_dt with exact modal
/// flow at the nodes. Cells where the inner product changes sign are split
/// at the root (bisection to 1e-10 in t).
Real obs_integral(const SpectralSystem& sys, const State& z, Real horizon, Real quad_dt);

/// Observability Gramian G_T = int_0^T S(t)^* B S(t) dt in closed form,
/// entries B_jk (exp(nu_jk T) - 1)/nu_jk with nu_jk = conj(lambda_j) + lambda_k.
/// z^* G_T z equals I_T(z) exactly because B >= 0 keeps the integrand nonnegative.
class ObservabilityGramian {
public:
    ObservabilityGramian(const SpectralSystem& sys, Real horizon);
    [[nodiscard]] Real operator()(const State& z) const;
    [[nodiscard]] Real horizon() const noexcept { return horizon_; }

private:
    CMatrix gram_;
    Real horizon_;
};

enum class IntegralMethod { gramian, trapezoid };

struct ObservabilityOptions {
    int n_samples = 64;
    std::uint64_t seed = 42;
    Real quad_dt = 1e-3;
    IntegralMethod method = IntegralMethod::gramian;
    /// Projected coordinate-descent steps started from the worst sample.
    int refine_steps = 100;
};

struct ObservabilityReport {
    Flavor flavor = Flavor::exact;
    Real horizon = 0.0;
    Real delta_estimate = 0.0;
    /// Minimum over the sample set before refinement.
    Real sample_minimum = 0.0;
    State worst_sample;
    int n_samples = 0;
    int n_evaluated = 0;
    std::uint64_t seed = 0;
    Real quad_dt = 0.0;
    IntegralMethod method = IntegralMethod::gramian;
    std::optional<HFunction> hfun;
    bool corroborated = false;

    /// "<flavor> observability corroborated" or "... not corroborated"
    [[nodiscard]] std::string classification() const;
};

/// Ratio minimized by estimate_delta for one state (scaled internally to the
/// unit H-sphere, or the unit K-sphere for weak-H).
Real observability_ratio(const SpectralSystem& sys, Flavor flavor, const State& z, Real horizon,
                         const std::optional<HFunction>& hfun, const ObservabilityOptions& opts);

/// The seeded sample set: n_samples uniform directions followed by all basis vectors.
std::vector<State> observability_samples(const SpectralSystem& sys, int n_samples, std::uint64_t seed);

ObservabilityReport estimate_delta(const SpectralSystem& sys, Real horizon, Flavor flavor,
                                   const std::optional<HFunction>& hfun,
                                   const ObservabilityOptions& opts = {});

/// Smallest c_T >= 1 such that I_T(z) >= exp(-c_T ||z||_K / ||z||) ||z||_K^2
/// on the seeded sample set (K-sphere normalized), i.e. the weak-H inequality
/// holds with delta = 1 on the samples.
Real calibrate_ct(const SpectralSystem& sys, Real horizon, const ObservabilityOptions& opts = {});

struct Lemma2Result {
    /// max over t of LHS - RHS
    Real max_violation = 0.0;
    /// min over t of (RHS - LHS) / RHS, +inf when every RHS is zero
    Real min_relative_margin = 0.0;
    bool satisfied = true;
    /// Same quantities for the r = 0 display that carries ||B|| ||y0||^2.
    Real max_violation_alt = 0.0;
    bool satisfied_alt = true;
    std::size_t n_points = 0;
};

/// Evaluates the trajectory bound at every `eval_every`-th recorded state
/// with t + T inside the trajectory; the dissipated integral uses the
/// full-resolution series. quad_dt is only used by the trapezoid route.
Lemma2Result lemma2_check(const SpectralSystem& sys, const FeedbackLaw& law, const Trajectory& traj,
                          Real horizon, Real quad_dt, int eval_every = 1,
                          IntegralMethod method = IntegralMethod::gramian);

nlohmann::json to_json(const ObservabilityReport& report);

}  // namespace bistab
