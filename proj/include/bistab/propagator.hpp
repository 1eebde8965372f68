#pragma once

// Time integration of y' = A y + p_r(y) B y on a SpectralSystem.
//
// One step is Strang splitting: exact modal flow for dt/2, the feedback
// substep y' = p_r(y) B y over dt by the implicit midpoint rule, exact modal
// flow for dt/2. The midpoint map is dissipative for p_r <B y, y> <= 0, so
// ||y|| never grows; with Re(lambda) = 0 all observed decay comes from the
// feedback.

#include <optional>
#include <vector>

#include "bistab/spectral_core.hpp"

namespace bistab {

struct FeedbackLaw {
    Real r = 0.0;
    /// Threshold realizing the indicator 1{y != 0}. Unset means
    /// 1e-14 * ||y0|| at simulation start.
    std::optional<Real> state_epsilon;
    /// Forces p == 0 (pure linear flow through the same integrator).
    bool disabled = false;

    static FeedbackLaw quadratic() { return {0.0, std::nullopt, false}; }
    static FeedbackLaw normalized() { return {2.0, std::nullopt, false}; }
    static FeedbackLaw off() { return {0.0, std::nullopt, true}; }

    /// r <= 2 and a positive threshold when one is given.
    void validate() const;
    /// Copy with the threshold fixed for initial state y0.
    [[nodiscard]] FeedbackLaw resolved_for(const State& y0) const;
    [[nodiscard]] Real epsilon() const;
};

/// Component-wise exp(lambda_j t) y_j. Throws for t < 0.
State linear_flow(const SpectralSystem& sys, const State& y, Real t);

/// p_r(y) = -<y, By>/||y||^r when ||y|| > epsilon, otherwise 0.
Real control_value(const SpectralSystem& sys, const FeedbackLaw& law, const State& y);

struct StepOptions {
    /// Implicit midpoint sub-steps inside the feedback substep.
    int midpoint_substeps = 2;
    int max_fixed_point_iterations = 50;
    Real fixed_point_tolerance = 1e-13;
};

/// One splitting step. Throws NumericalFailure if the midpoint fixed point
/// does not converge (dt too large) or energy grows by more than 1e-12.
State closed_loop_step(const SpectralSystem& sys, const FeedbackLaw& law, const State& y, Real dt,
                       const StepOptions& opts = {});

struct Trajectory {
    Real dt = 0.0;
    int stride = 1;
    Real r = 0.0;
    Real state_epsilon = 0.0;
    // Full resolution, one entry per time step (including t = 0).
    std::vector<Real> times;
    std::vector<Real> energies;   // 1/2 ||y||^2
    std::vector<Real> controls;   // p(t_n)
    std::vector<Real> norms_h;
    std::vector<Real> norms_k;
    std::vector<Real> b_forms;    // <B y, y>
    // Thinned: every stride-th step plus the final step.
    std::vector<std::size_t> state_steps;
    std::vector<State> states;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] Real t_final() const noexcept { return times.empty() ? 0.0 : times.back(); }
    /// Energy at arbitrary t in range, linear interpolation of recorded values.
    [[nodiscard]] Real energy_at(Real t) const;
    /// max_n ||y(t_n)||_K / ||y_0||_K (monitor for the uniform K bound).
    [[nodiscard]] Real k_growth() const;
};

struct SimulationOptions {
    Real dt = 1e-3;
    Real t_final = 1.0;
    int stride = 1;
    StepOptions step;
    /// Halvings allowed when a step fails to converge.
    int max_halvings = 10;
    /// Stop after the first step with E < stop_energy_ratio * E(0); 0 disables.
    Real stop_energy_ratio = 0.0;
};

/// min(1e-3, 0.1 / max|lambda_j|)
Real default_dt(const SpectralSystem& sys);

Trajectory simulate(const SpectralSystem& sys, const FeedbackLaw& law, const State& y0,
                    const SimulationOptions& opts);
Trajectory simulate(const SpectralSystem& sys, const FeedbackLaw& law, const State& y0, Real dt,
                    Real t_final, int stride = 1);

/// max_n |E_{n+1} - E_n - trapezoid(p <By, y>)| over the full-resolution series.
Real dissipation_residual(const SpectralSystem& sys, const FeedbackLaw& law, const Trajectory& traj);
/// |E_N - E_0 - sum of the trapezoid increments|.
Real dissipation_residual_accumulated(const SpectralSystem& sys, const FeedbackLaw& law,
                                      const Trajectory& traj);

/// CSV with header t,energy,control,norm_h,norm_k; one row per step whose
/// state was recorded (every stride-th step and the final one).
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
std::string trajectory_csv(const Trajectory& traj);

}  // namespace bistab
