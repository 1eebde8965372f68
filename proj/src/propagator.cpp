#include "bistab/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

namespace bistab {

void FeedbackLaw::validate() const {
    if (!std::isfinite(r) || r > 2.0) throw InvalidArgument("FeedbackLaw: r must be finite and <= 2");
    if (state_epsilon && !(*state_epsilon > 0.0))
        throw InvalidArgument("FeedbackLaw: state_epsilon must be positive");
}

FeedbackLaw FeedbackLaw::resolved_for(const State& y0) const {
    validate();
    FeedbackLaw out = *this;
    if (!out.state_epsilon)
        out.state_epsilon = std::max(1e-14 * y0.norm(), std::numeric_limits<Real>::min());
    return out;
}

Real FeedbackLaw::epsilon() const {
    return state_epsilon.value_or(std::numeric_limits<Real>::min());
}

namespace {

// p_r from the quadratic form q = <By, y> and ||y||^2.
Real feedback_from(Real q, Real norm2, const FeedbackLaw& law) {
    if (law.disabled) return 0.0;
    const Real nrm = std::sqrt(norm2);
    if (!(nrm > law.epsilon())) return 0.0;
    if (law.r == 0.0) return -q;
    if (law.r == 2.0) return -q / norm2;
    return -q / std::pow(nrm, law.r);
}

// Caches the half-step modal multipliers and runs the feedback substep in
// the eigenbasis of B, where the midpoint update is a diagonal Cayley map.
class Stepper {
public:
    Stepper(const SpectralSystem& sys, const FeedbackLaw& law, const StepOptions& opts)
        : sys_(sys), law_(law), opts_(opts) {
        if (opts_.midpoint_substeps < 1) throw InvalidArgument("midpoint_substeps must be >= 1");
        for (const Complex& l : sys_.eigenvalues()) rotating_.push_back(l.real() == 0.0);
    }

    State step(const State& y, Real dt) {
        const State& half = half_multipliers(dt);
        State x = half.cwiseProduct(y);
        if (!law_.disabled && sys_.b_spectrum().size() > 0) feedback_substep(x, dt, y.norm());
        State y1 = half.cwiseProduct(x);
        if (0.5 * (y1.squaredNorm() - y.squaredNorm()) > 1e-12)
            throw NumericalFailure("closed_loop_step: energy increased beyond 1e-12");
        return y1;
    }

    // Same step on w = D(-t) y, where D(t) rotates the conservative modes by
    // exp(lambda t) and leaves the rest alone. The rotations are evaluated
    // afresh at t + dt/2 instead of being compounded step after step, which
    // keeps their rounding from accumulating in |y_j|. Also returns y(t + dt).
    State step_in_frame(const State& w, Real t, Real dt, State& y_next) {
        const State& half = half_multipliers(dt);
        State in(w.size());
        for (Eigen::Index j = 0; j < w.size(); ++j)
            in[j] = rotating_[static_cast<std::size_t>(j)] ? rotation(j, t + 0.5 * dt) : half[j];
        State x = in.cwiseProduct(w);
        if (!law_.disabled && sys_.b_spectrum().size() > 0) feedback_substep(x, dt, w.norm());
        y_next = half.cwiseProduct(x);
        for (Eigen::Index j = 0; j < w.size(); ++j)
            x[j] *= rotating_[static_cast<std::size_t>(j)] ? std::conj(in[j]) : half[j];
        if (0.5 * (x.squaredNorm() - w.squaredNorm()) > 1e-12)
            throw NumericalFailure("closed_loop_step: energy increased beyond 1e-12");
        return x;
    }

private:
    [[nodiscard]] Complex rotation(Eigen::Index j, Real t) const {
        return std::polar(1.0, sys_.eigenvalues()[static_cast<std::size_t>(j)].imag() * t);
    }

    const State& half_multipliers(Real dt) {
        auto it = cache_.find(dt);
        if (it != cache_.end()) return it->second;
        State m(sys_.dim());
        for (Eigen::Index j = 0; j < sys_.dim(); ++j)
            m[j] = std::exp(sys_.eigenvalues()[static_cast<std::size_t>(j)] * (0.5 * dt));
        return cache_.emplace(dt, std::move(m)).first->second;
    }

    void feedback_substep(State& x, Real dt, Real scale_norm) {
        const CMatrix& v = sys_.b_range();
        const RVector& mu = sys_.b_spectrum();
        const State c0 = v.adjoint() * x;
        const Real perp2 = std::max(x.squaredNorm() - c0.squaredNorm(), 0.0);
        const Real scale = std::max(scale_norm, std::numeric_limits<Real>::min());
        const Real h = dt / opts_.midpoint_substeps;

        State c = c0;
        State cm(c.size());
        for (int sub = 0; sub < opts_.midpoint_substeps; ++sub) {
            Real p = feedback_from(c.cwiseAbs2().dot(mu), perp2 + c.squaredNorm(), law_);
            bool converged = false;
            for (int it = 0; it < opts_.max_fixed_point_iterations; ++it) {
                for (Eigen::Index i = 0; i < c.size(); ++i) cm[i] = c[i] / (1.0 - 0.5 * h * p * mu[i]);
                const RVector cm2 = cm.cwiseAbs2();
                const Real p_next = feedback_from(cm2.dot(mu), perp2 + cm2.sum(), law_);
                const Real by_norm = std::sqrt(cm2.dot(mu.cwiseAbs2()));
                const Real residual = h * std::abs(p_next - p) * by_norm / scale;
                p = p_next;
                if (residual < opts_.fixed_point_tolerance) {
                    converged = true;
                    break;
                }
            }
            if (!converged)
                throw NumericalFailure("closed_loop_step: implicit midpoint iteration did not converge");
            for (Eigen::Index i = 0; i < c.size(); ++i) {
                const Real a = 0.5 * h * p * mu[i];
                c[i] *= (1.0 + a) / (1.0 - a);
            }
        }
        x.noalias() += v * (c - c0);
    }

    const SpectralSystem& sys_;
    const FeedbackLaw& law_;
    StepOptions opts_;
    std::map<Real, State> cache_;
    std::vector<bool> rotating_;
};

State advance(Stepper& stepper, const State& w, Real t, Real dt, State& y_next, int depth, int max_depth) {
    try {
        return stepper.step_in_frame(w, t, dt, y_next);
    } catch (const NumericalFailure&) {
        if (depth >= max_depth) throw;
        const State mid = advance(stepper, w, t, 0.5 * dt, y_next, depth + 1, max_depth);
        return advance(stepper, mid, t + 0.5 * dt, 0.5 * dt, y_next, depth + 1, max_depth);
    }
}

}  // namespace

State linear_flow(const SpectralSystem& sys, const State& y, Real t) {
    sys.require_dim(y);
    if (!(t >= 0.0)) throw InvalidArgument("linear_flow: t must be >= 0");
    State out(y.size());
    for (Eigen::Index j = 0; j < y.size(); ++j)
        out[j] = std::exp(sys.eigenvalues()[static_cast<std::size_t>(j)] * t) * y[j];
    return out;
}

Real control_value(const SpectralSystem& sys, const FeedbackLaw& law, const State& y) {
    sys.require_dim(y);
    law.validate();
    return feedback_from(quad_form_b(sys, y), y.squaredNorm(), law);
}

State closed_loop_step(const SpectralSystem& sys, const FeedbackLaw& law, const State& y, Real dt,
                       const StepOptions& opts) {
    sys.require_dim(y);
    law.validate();
    if (!(dt > 0.0)) throw InvalidArgument("closed_loop_step: dt must be > 0");
    Stepper stepper(sys, law, opts);
    return stepper.step(y, dt);
}

Real Trajectory::energy_at(Real t) const {
    if (times.empty()) throw InvalidArgument("energy_at: empty trajectory");
    if (t < times.front() || t > times.back() * (1.0 + 1e-12) + 1e-300)
        throw InvalidArgument("energy_at: t outside trajectory");
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end()) return energies.back();
    const auto i = static_cast<std::size_t>(it - times.begin());
    if (i == 0 || *it == t) return energies[i];
    const Real w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    return (1.0 - w) * energies[i - 1] + w * energies[i];
}

Real Trajectory::k_growth() const {
    if (norms_k.empty() || norms_k.front() == 0.0) return 1.0;
    return *std::max_element(norms_k.begin(), norms_k.end()) / norms_k.front();
}

Real default_dt(const SpectralSystem& sys) {
    const Real rho = sys.spectral_radius();
    return rho > 0.0 ? std::min(1e-3, 0.1 / rho) : 1e-3;
}

Trajectory simulate(const SpectralSystem& sys, const FeedbackLaw& law_in, const State& y0,
                    const SimulationOptions& opts) {
    sys.require_dim(y0);
    if (!y0.allFinite()) throw InvalidArgument("simulate: y0 has non-finite entries");
    if (!(opts.t_final > 0.0)) throw InvalidArgument("simulate: t_final must be > 0");
    if (!(opts.dt > 0.0)) throw InvalidArgument("simulate: dt must be > 0");
    if (opts.stride < 1) throw InvalidArgument("simulate: stride must be >= 1");
    const FeedbackLaw law = law_in.resolved_for(y0);

    auto steps = static_cast<std::size_t>(std::ceil(opts.t_final / opts.dt - 1e-9));
    steps = std::max<std::size_t>(steps, 1);
    const Real dt = opts.t_final / static_cast<Real>(steps);

    Trajectory traj;
    traj.dt = dt;
    traj.stride = opts.stride;
    traj.r = law.r;
    traj.state_epsilon = law.epsilon();
    for (auto* v : {&traj.times, &traj.energies, &traj.controls, &traj.norms_h, &traj.norms_k, &traj.b_forms})
        v->reserve(std::min<std::size_t>(steps + 1, std::size_t{1} << 20));

    auto record = [&](std::size_t n, const State& y, bool last) {
        const Real q = quad_form_b_fast(sys, y);
        const Real n2 = y.squaredNorm();
        traj.times.push_back(static_cast<Real>(n) * dt);
        traj.energies.push_back(0.5 * n2);
        traj.controls.push_back(feedback_from(q, n2, law));
        traj.norms_h.push_back(std::sqrt(n2));
        traj.norms_k.push_back(std::sqrt((sys.k_weights().array() * y.cwiseAbs2().array()).sum()));
        traj.b_forms.push_back(q);
        if (n % static_cast<std::size_t>(opts.stride) == 0 || last) {
            traj.state_steps.push_back(n);
            traj.states.push_back(y);
        }
    };

    Stepper stepper(sys, law, opts.step);
    State w = y0;
    State y = y0;
    record(0, y0, false);
    const Real floor = opts.stop_energy_ratio * traj.energies.front();
    for (std::size_t n = 1; n <= steps; ++n) {
        w = advance(stepper, w, static_cast<Real>(n - 1) * dt, dt, y, 0, opts.max_halvings);
        const bool stop = n == steps || 0.5 * w.squaredNorm() < floor;
        record(n, y, stop);
        if (stop) break;
    }
    return traj;
}

Trajectory simulate(const SpectralSystem& sys, const FeedbackLaw& law, const State& y0, Real dt,
                    Real t_final, int stride) {
    SimulationOptions opts;
    opts.dt = dt;
    opts.t_final = t_final;
    opts.stride = stride;
    return simulate(sys, law, y0, opts);
}

namespace {

void require_matching(const Trajectory& traj, const SpectralSystem& sys) {
    if (!traj.states.empty()) sys.require_dim(traj.states.front());
}

Real trapezoid_increment(const Trajectory& traj, std::size_t n) {
    const Real h = traj.times[n + 1] - traj.times[n];
    return 0.5 * h * (traj.controls[n] * traj.b_forms[n] + traj.controls[n + 1] * traj.b_forms[n + 1]);
}

}  // namespace

Real dissipation_residual(const SpectralSystem& sys, const FeedbackLaw& law, const Trajectory& traj) {
    law.validate();
    require_matching(traj, sys);
    Real worst = 0.0;
    for (std::size_t n = 0; n + 1 < traj.size(); ++n) {
        const Real res = traj.energies[n + 1] - traj.energies[n] - trapezoid_increment(traj, n);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

Real dissipation_residual_accumulated(const SpectralSystem& sys, const FeedbackLaw& law,
                                      const Trajectory& traj) {
    law.validate();
    require_matching(traj, sys);
    Real integral = 0.0;
    for (std::size_t n = 0; n + 1 < traj.size(); ++n) integral += trapezoid_increment(traj, n);
    return traj.size() < 2 ? 0.0 : std::abs(traj.energies.back() - traj.energies.front() - integral);
}

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream os;
    os.precision(17);
    os << "t,energy,control,norm_h,norm_k\n";
    for (const std::size_t n : traj.state_steps)
        os << traj.times[n] << ',' << traj.energies[n] << ',' << traj.controls[n] << ','
           << traj.norms_h[n] << ',' << traj.norms_k[n] << '\n';
    return os.str();
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot open " + path + " for writing");
    out << trajectory_csv(traj);
}

}  // namespace bistab
