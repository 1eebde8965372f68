#pragma once

// Decay-rate tooling: the extremal sequence of the discrete decay lemma,
// the sequences s_k and e_k used in the rate proofs, power-law fitting and
// split-sample validation of upper bounds E(t) <= C bound(t).

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bistab/propagator.hpp"
#include "bistab/spectral_core.hpp"

namespace bistab {

struct Lemma1Result {
    std::vector<Real> sequence;      // a_0 .. a_{k_max}
    std::vector<Real> scaled;        // a_k (k+1)^{1/(alpha+1)}
    Real m_empirical = 0.0;          // max of scaled
    /// Explicit M valid for every k (from the growth of a_k^{-(alpha+1)}).
    Real m_analytic = 0.0;
    /// max_k |a_{k+1} + C a_{k+1}^{alpha+2} - a_k| / a_k
    Real max_recurrence_defect = 0.0;
    /// m_empirical <= m_analytic
    bool bounded = false;
    bool tail_nonincreasing = false;
    /// Tail nondecreasing and bounded by m_analytic, hence convergent.
    bool tail_converging = false;
    bool holds = false;
};

/// Builds a_{k+1} + C a_{k+1}^{alpha+2} = a_k by bracketed root finding on
/// (0, a_k) and inspects the scaled sequence over the second half of k.
/// holds = bounded and the tail is nonincreasing or convergent.
Lemma1Result lemma1_verify(Real a0, Real c, Real alpha, int k_max);

enum class ProofVariant { quadratic, normalized };

struct ProofSequences {
    std::vector<Real> s;    // ||y(kT)||^2
    std::vector<Real> e;
    Real k_constant = 1.0;  // C used in the H argument
    bool s_nonincreasing = true;
    bool e_nonincreasing = true;
    bool e_over_s_nonincreasing = true;
};

/// s_k from interpolated energies; e_k = s_k H^2(s_k / (C^2 |y0|^2_D(A))) for
/// the quadratic control, e_k = H^2(s_k / (C |y0|^2_D(A))) for the
/// normalized one. C is the monitored K-growth of the trajectory (>= 1).
/// Without hfun, e_k = s_k.
ProofSequences extract_proof_sequences(const Trajectory& traj, Real horizon, const SpectralSystem& sys,
                                       const std::optional<HFunction>& hfun, Real y0_norm_da,
                                       ProofVariant variant = ProofVariant::quadratic);

struct DecayFit {
    enum class Model { power, log_square, custom_bound };
    Model model = Model::power;
    std::string bound_name;
    Real exponent_or_constant = 0.0;
    Real t_lo = 0.0;
    Real t_hi = 0.0;
    Real residual = 0.0;
    bool validated = false;
    Real validation_margin = 0.0;
    Real slack = 1.0;
    /// Run decayed to the floor before the window; nothing was fitted.
    bool decayed = false;
};

std::string to_string(DecayFit::Model m);

struct FitWindow {
    Real t_lo;
    Real t_hi;
};

/// Window clipped to the trajectory and to the first time E < 1e-12 E(0).
FitWindow effective_window(const Trajectory& traj, FitWindow requested);

/// Least-squares slope of log E against log t on 400 log-spaced points.
DecayFit fit_power(const Trajectory& traj, FitWindow window);
/// Same, on raw (t, E) samples.
DecayFit fit_power(const std::vector<Real>& times, const std::vector<Real>& energies, FitWindow window);

struct PowerBound { Real p; };
struct LogSquareBound {};
struct HInverseBound { HFunction hfun; };
struct KInverseBound { HFunction hfun; };
using Bound = std::variant<PowerBound, LogSquareBound, HInverseBound, KInverseBound>;

std::string bound_name(const Bound& b);
Bound bound_from_descriptor(const std::string& text, const std::optional<HFunction>& hfun);
/// Bound function value at t (including the ||y0||^2_D(A) factor where the
/// estimate carries it).
Real bound_value(const Bound& b, Real t, Real y0_norm_da);

struct ValidationOptions {
    Real split = 0.5;
    Real slack = 1.0;
    int points = 400;
};

/// C = max E/bound over the first `split` fraction (in log t) of the
/// window; validated iff E < C bound (1 + slack) on the rest.
DecayFit validate_bound(const Trajectory& traj, const Bound& bound, Real y0_norm_da, FitWindow window,
                        const ValidationOptions& opts = {});
DecayFit validate_bound(const std::vector<Real>& times, const std::vector<Real>& energies, const Bound& bound,
                        Real y0_norm_da, FitWindow window, const ValidationOptions& opts = {});

nlohmann::json to_json(const DecayFit& fit);

}  // namespace bistab
