#include "bistab/observability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace bistab {

std::string to_string(Flavor f) {
    switch (f) {
        case Flavor::exact: return "exact";
        case Flavor::weak_l: return "weak-L";
        case Flavor::weak_h: return "weak-H";
        case Flavor::null_ctrl: return "null-ctrl";
    }
    return "?";
}

Flavor flavor_from_string(const std::string& s) {
    if (s == "exact") return Flavor::exact;
    if (s == "weak-L") return Flavor::weak_l;
    if (s == "weak-H") return Flavor::weak_h;
    if (s == "null-ctrl") return Flavor::null_ctrl;
    throw InvalidArgument("unknown observability flavor '" + s + "'");
}

namespace {

Real integrand(const SpectralSystem& sys, const State& z, Real t) {
    const State w = linear_flow(sys, z, t);
    return w.dot(sys.b_matrix() * w).real();
}

Real modulus_bound(const SpectralSystem& sys) {
    return sys.b_spectrum().size() > 0 ? sys.b_spectrum().maxCoeff() : 0.0;
}

}  // namespace

Real obs_integral(const SpectralSystem& sys, const State& z, Real horizon, Real quad_dt) {
    sys.require_dim(z);
    if (z.norm() == 0.0) throw InvalidArgument("obs_integral: zero state");
    if (!(horizon > 0.0)) throw InvalidArgument("obs_integral: horizon must be > 0");
    if (!(quad_dt > 0.0)) throw InvalidArgument("obs_integral: quad_dt must be > 0");

    const auto cells = static_cast<long>(std::max(1.0, std::ceil(horizon / quad_dt - 1e-9)));
    const Real h = horizon / static_cast<Real>(cells);
    Real total = 0.0;
    Real t_prev = 0.0;
    Real f_prev = integrand(sys, z, 0.0);
    for (long i = 1; i <= cells; ++i) {
        const Real t = (i == cells) ? horizon : static_cast<Real>(i) * h;
        const Real f = integrand(sys, z, t);
        if ((f_prev < 0.0 && f > 0.0) || (f_prev > 0.0 && f < 0.0)) {
            Real lo = t_prev;
            Real hi = t;
            const bool rising = f > 0.0;
            while (hi - lo > 1e-10) {
                const Real mid = 0.5 * (lo + hi);
                const Real fm = integrand(sys, z, mid);
                if ((fm > 0.0) == rising)
                    hi = mid;
                else
                    lo = mid;
            }
            const Real root = 0.5 * (lo + hi);
            total += 0.5 * std::abs(f_prev) * (root - t_prev) + 0.5 * std::abs(f) * (t - root);
        } else {
            total += 0.5 * (std::abs(f_prev) + std::abs(f)) * (t - t_prev);
        }
        t_prev = t;
        f_prev = f;
    }
    return total;
}

ObservabilityGramian::ObservabilityGramian(const SpectralSystem& sys, Real horizon) : horizon_(horizon) {
    if (!(horizon > 0.0)) throw InvalidArgument("ObservabilityGramian: horizon must be > 0");
    const Eigen::Index n = sys.dim();
    gram_.resize(n, n);
    const auto& lam = sys.eigenvalues();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) {
            const Complex nu = std::conj(lam[static_cast<std::size_t>(j)]) + lam[static_cast<std::size_t>(k)];
            const Complex x = nu * horizon;
            Complex phi;
            if (std::abs(x) < 1e-5)
                phi = horizon * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0);
            else
                phi = (std::exp(x) - 1.0) / nu;
            gram_(j, k) = sys.b_matrix()(j, k) * phi;
        }
}

Real ObservabilityGramian::operator()(const State& z) const {
    return std::max(z.dot(gram_ * z).real(), 0.0);
}

std::string ObservabilityReport::classification() const {
    return to_string(flavor) + (corroborated ? " observability corroborated" : " observability not corroborated");
}

namespace {

class RatioEvaluator {
public:
    RatioEvaluator(const SpectralSystem& sys, Flavor flavor, Real horizon, const std::optional<HFunction>& hfun,
                   const ObservabilityOptions& opts)
        : sys_(sys), flavor_(flavor), horizon_(horizon), hfun_(hfun), opts_(opts) {
        if (!(horizon > 0.0)) throw InvalidArgument("observability: horizon must be > 0");
        if (flavor == Flavor::weak_h && !hfun) throw InvalidArgument("observability: weak-H flavor requires hfun");
        if (opts.method == IntegralMethod::gramian) gramian_.emplace(sys, horizon);
        else if (!(opts.quad_dt > 0.0)) throw InvalidArgument("observability: quad_dt must be > 0");
    }

    /// Puts z on the sphere the flavor is evaluated on.
    [[nodiscard]] State project(const State& z) const {
        const Real scale = flavor_ == Flavor::weak_h ? norm_k(sys_, z) : z.norm();
        return z / scale;
    }

    [[nodiscard]] Real integral(const State& z) const {
        return gramian_ ? (*gramian_)(z) : obs_integral(sys_, z, horizon_, opts_.quad_dt);
    }

    /// z must already be projected.
    [[nodiscard]] Real ratio(const State& z) const {
        const Real i = integral(z);
        Real denom = 1.0;
        switch (flavor_) {
            case Flavor::exact: denom = z.squaredNorm(); break;
            case Flavor::weak_l: denom = std::pow(norm_l(sys_, z), 2); break;
            case Flavor::weak_h: {
                const Real k2 = std::pow(norm_k(sys_, z), 2);
                denom = k2 * (*hfun_)(z.squaredNorm() / k2);
                break;
            }
            case Flavor::null_ctrl: denom = std::pow(norm_l(sys_, linear_flow(sys_, z, horizon_)), 2); break;
        }
        if (!(denom > 0.0)) return std::numeric_limits<Real>::infinity();
        return i / denom;
    }

private:
    const SpectralSystem& sys_;
    Flavor flavor_;
    Real horizon_;
    const std::optional<HFunction>& hfun_;
    const ObservabilityOptions& opts_;
    std::optional<ObservabilityGramian> gramian_;
};

}  // namespace

std::vector<State> observability_samples(const SpectralSystem& sys, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw InvalidArgument("observability: n_samples must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<Real> g(0.0, 1.0);
    std::vector<State> out;
    out.reserve(static_cast<std::size_t>(n_samples + sys.dim()));
    for (int s = 0; s < n_samples; ++s) {
        State z(sys.dim());
        for (Eigen::Index j = 0; j < sys.dim(); ++j) {
            const Real re = g(rng);
            const Real im = g(rng);
            z[j] = Complex(re, im);
        }
        out.push_back(z / z.norm());
    }
    for (Eigen::Index j = 0; j < sys.dim(); ++j) {
        State e = State::Zero(sys.dim());
        e[j] = 1.0;
        out.push_back(std::move(e));
    }
    return out;
}

Real observability_ratio(const SpectralSystem& sys, Flavor flavor, const State& z, Real horizon,
                         const std::optional<HFunction>& hfun, const ObservabilityOptions& opts) {
    sys.require_dim(z);
    if (z.norm() == 0.0) throw InvalidArgument("observability_ratio: zero state");
    RatioEvaluator eval(sys, flavor, horizon, hfun, opts);
    return eval.ratio(eval.project(z));
}

ObservabilityReport estimate_delta(const SpectralSystem& sys, Real horizon, Flavor flavor,
                                   const std::optional<HFunction>& hfun, const ObservabilityOptions& opts) {
    RatioEvaluator eval(sys, flavor, horizon, hfun, opts);
    const std::vector<State> samples = observability_samples(sys, opts.n_samples, opts.seed);

    ObservabilityReport rep;
    rep.flavor = flavor;
    rep.horizon = horizon;
    rep.n_samples = opts.n_samples;
    rep.seed = opts.seed;
    rep.quad_dt = opts.method == IntegralMethod::trapezoid ? opts.quad_dt : 0.0;
    rep.method = opts.method;
    rep.hfun = hfun;

    Real best = std::numeric_limits<Real>::infinity();
    State worst = eval.project(samples.front());
    for (const State& s : samples) {
        const State z = eval.project(s);
        const Real r = eval.ratio(z);
        ++rep.n_evaluated;
        if (r < best) {
            best = r;
            worst = z;
        }
    }
    rep.sample_minimum = best;

    // Projected coordinate descent: perturb one coordinate by +-step, +-i step,
    // return to the sphere, keep the best improvement; halve the step after a
    // full sweep without progress.
    Real step = 0.1;
    Eigen::Index since_improvement = 0;
    const Complex dirs[] = {Complex(1, 0), Complex(-1, 0), Complex(0, 1), Complex(0, -1)};
    for (int it = 0; it < opts.refine_steps && best > 0.0; ++it) {
        const Eigen::Index j = it % sys.dim();
        bool improved = false;
        for (const Complex& d : dirs) {
            State trial = worst;
            trial[j] += step * d;
            if (trial.norm() == 0.0) continue;
            trial = eval.project(trial);
            const Real r = eval.ratio(trial);
            ++rep.n_evaluated;
            if (r < best) {
                best = r;
                worst = std::move(trial);
                improved = true;
            }
        }
        if (improved) {
            since_improvement = 0;
        } else if (++since_improvement >= sys.dim()) {
            step *= 0.5;
            since_improvement = 0;
        }
    }

    rep.delta_estimate = std::max(best, 0.0);
    rep.worst_sample = worst;
    rep.corroborated = rep.delta_estimate > 1e-9 * horizon * std::max(modulus_bound(sys), 1e-300);
    return rep;
}

Real calibrate_ct(const SpectralSystem& sys, Real horizon, const ObservabilityOptions& opts) {
    const std::optional<HFunction> unit = HFunction::constant();
    RatioEvaluator eval(sys, Flavor::weak_h, horizon, unit, opts);
    Real c_t = 1.0;
    for (const State& s : observability_samples(sys, opts.n_samples, opts.seed)) {
        const State z = eval.project(s);  // ||z||_K = 1
        const Real i = eval.integral(z);
        if (!(i > 0.0))
            throw NumericalFailure("calibrate_ct: a sample is unobserved, no finite c_T exists");
        if (i < 1.0) c_t = std::max(c_t, z.norm() * -std::log(i));
    }
    return c_t * (1.0 + 1e-9);
}

Lemma2Result lemma2_check(const SpectralSystem& sys, const FeedbackLaw& law, const Trajectory& traj,
                          Real horizon, Real quad_dt, int eval_every, IntegralMethod method) {
    law.validate();
    if (!(horizon > 0.0)) throw InvalidArgument("lemma2_check: horizon must be > 0");
    if (eval_every < 1) throw InvalidArgument("lemma2_check: eval_every must be >= 1");
    if (traj.t_final() < horizon) throw InvalidArgument("lemma2_check: trajectory shorter than T");

    const Real r = traj.r;
    const Real b_norm = op_norm_b(sys);
    const Real y0 = traj.norms_h.front();
    const Real t_end = traj.t_final();
    const Real sqrt_t = std::sqrt(horizon);
    const Real coeff = 2.0 * horizon * sqrt_t * b_norm * b_norm * std::pow(y0, 2.0 - r) + sqrt_t;
    const Real coeff_alt = 2.0 * horizon * sqrt_t * b_norm * y0 * y0 + sqrt_t;

    // Dissipated density |<y, By>|^2 / ||y||^r (zero when the control is off).
    const std::size_t n_steps = traj.size();
    std::vector<Real> density(n_steps), density_alt(n_steps);
    for (std::size_t n = 0; n < n_steps; ++n) {
        const Real q = traj.b_forms[n];
        const Real nh = traj.norms_h[n];
        density[n] = nh > traj.state_epsilon ? q * q / std::pow(nh, r) : 0.0;
        density_alt[n] = q * q;
    }
    std::vector<Real> cumulative(n_steps, 0.0), cumulative_alt(n_steps, 0.0);
    for (std::size_t n = 1; n < n_steps; ++n) {
        const Real h = traj.times[n] - traj.times[n - 1];
        cumulative[n] = cumulative[n - 1] + 0.5 * h * (density[n] + density[n - 1]);
        cumulative_alt[n] = cumulative_alt[n - 1] + 0.5 * h * (density_alt[n] + density_alt[n - 1]);
    }
    auto integral_to = [&](const std::vector<Real>& cum, const std::vector<Real>& dens, Real t) {
        const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t - 1e-12 * std::max(1.0, t));
        const auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - traj.times.begin(),
                                                                        static_cast<std::ptrdiff_t>(n_steps - 1)));
        if (i == 0 || traj.times[i] <= t) return cum[i];
        // partial cell [t_{i-1}, t] with linear density
        const Real t0 = traj.times[i - 1];
        const Real w = (t - t0) / (traj.times[i] - t0);
        const Real f_t = (1.0 - w) * dens[i - 1] + w * dens[i];
        return cum[i - 1] + 0.5 * (t - t0) * (dens[i - 1] + f_t);
    };

    std::optional<ObservabilityGramian> gram;
    if (method == IntegralMethod::gramian) gram.emplace(sys, horizon);

    Lemma2Result res;
    res.max_violation = -std::numeric_limits<Real>::infinity();
    res.max_violation_alt = -std::numeric_limits<Real>::infinity();
    res.min_relative_margin = std::numeric_limits<Real>::infinity();
    for (std::size_t k = 0; k < traj.states.size(); k += static_cast<std::size_t>(eval_every)) {
        const std::size_t n = traj.state_steps[k];
        const Real t = traj.times[n];
        if (t + horizon > t_end * (1.0 + 1e-12)) break;
        const State& y = traj.states[k];
        Real lhs = 0.0;
        if (y.norm() > 0.0) lhs = gram ? (*gram)(y) : obs_integral(sys, y, horizon, quad_dt);
        const Real window = std::max(integral_to(cumulative, density, t + horizon) - cumulative[n], 0.0);
        const Real window_alt =
            std::max(integral_to(cumulative_alt, density_alt, t + horizon) - cumulative_alt[n], 0.0);
        const Real rhs = coeff * std::pow(traj.norms_h[n], r / 2.0) * std::sqrt(window);
        const Real rhs_alt = coeff_alt * std::sqrt(window_alt);

        res.max_violation = std::max(res.max_violation, lhs - rhs);
        res.max_violation_alt = std::max(res.max_violation_alt, lhs - rhs_alt);
        if (rhs > 0.0) res.min_relative_margin = std::min(res.min_relative_margin, (rhs - lhs) / rhs);
        if (lhs > rhs * (1.0 + 1e-6)) res.satisfied = false;
        if (lhs > rhs_alt * (1.0 + 1e-6)) res.satisfied_alt = false;
        ++res.n_points;
    }
    if (res.n_points == 0) throw InvalidArgument("lemma2_check: no evaluation point with t + T inside the trajectory");
    return res;
}

nlohmann::json to_json(const ObservabilityReport& report) {
    nlohmann::json j;
    j["flavor"] = to_string(report.flavor);
    j["T"] = report.horizon;
    j["delta_estimate"] = report.delta_estimate;
    j["sample_minimum"] = report.sample_minimum;
    j["n_samples"] = report.n_samples;
    j["n_evaluated"] = report.n_evaluated;
    j["seed"] = report.seed;
    j["quad_dt"] = report.quad_dt;
    j["integral_method"] = report.method == IntegralMethod::gramian ? "gramian" : "trapezoid";
    j["worst_sample"] = state_to_json(report.worst_sample);
    j["hfun"] = report.hfun ? nlohmann::json(report.hfun->descriptor()) : nlohmann::json(nullptr);
    j["classification"] = report.classification();
    return j;
}

}  // namespace bistab
