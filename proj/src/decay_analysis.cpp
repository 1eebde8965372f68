#include "bistab/decay_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>

namespace bistab {

Lemma1Result lemma1_verify(Real a0, Real c, Real alpha, int k_max) {
    if (!(a0 > 0.0)) throw InvalidArgument("lemma1_verify: a0 must be > 0");
    if (!(c > 0.0)) throw InvalidArgument("lemma1_verify: C must be > 0");
    if (!(alpha > -1.0)) throw InvalidArgument("lemma1_verify: alpha must be > -1");
    if (k_max < 10) throw InvalidArgument("lemma1_verify: k_max must be >= 10");

    const Real power = alpha + 2.0;
    const Real scale_exp = 1.0 / (alpha + 1.0);
    Lemma1Result res;
    res.sequence.reserve(static_cast<std::size_t>(k_max) + 1);
    res.sequence.push_back(a0);
    for (int k = 0; k < k_max; ++k) {
        const Real ak = res.sequence.back();
        auto f = [&](Real x) {
            const Real xp = std::pow(x, power - 1.0);
            return std::make_pair(x + c * xp * x - ak, 1.0 + c * power * xp);
        };
        const Real guess = ak / (1.0 + c * std::pow(ak, alpha + 1.0));
        std::uintmax_t iters = 200;
        const Real next = boost::math::tools::newton_raphson_iterate(f, guess, 0.0, ak, 48, iters);
        if (!(next > 0.0 && next < ak) || iters >= 200)
            throw NumericalFailure("lemma1_verify: root finding failed at k = " + std::to_string(k));
        res.max_recurrence_defect =
            std::max(res.max_recurrence_defect, std::abs(next + c * std::pow(next, power) - ak) / ak);
        res.sequence.push_back(next);
    }

    res.scaled.resize(res.sequence.size());
    for (std::size_t k = 0; k < res.sequence.size(); ++k)
        res.scaled[k] = res.sequence[k] * std::pow(static_cast<Real>(k + 1), scale_exp);
    res.m_empirical = *std::max_element(res.scaled.begin(), res.scaled.end());

    // b_k = a_k^{-(alpha+1)} grows by at least c1 = C (alpha+1) (a_1/a_0)^{alpha+2}
    // per step (mean value theorem; a_{k+1}/a_k increases with k), so
    // a_k (k+1)^{1/(alpha+1)} <= max(a_0^{alpha+1}, 1/c1)^{1/(alpha+1)} for every k.
    const Real rho = res.sequence[1] / res.sequence[0];
    const Real c1 = c * (alpha + 1.0) * std::pow(rho, power);
    res.m_analytic = std::pow(std::max(std::pow(a0, alpha + 1.0), 1.0 / c1), scale_exp);
    res.bounded = std::isfinite(res.m_empirical) && res.m_empirical <= res.m_analytic * (1.0 + 1e-12);

    const std::size_t tail = res.scaled.size() / 2;
    bool nonincreasing = true;
    bool nondecreasing = true;
    for (std::size_t k = tail; k + 1 < res.scaled.size(); ++k) {
        if (res.scaled[k + 1] > res.scaled[k] * (1.0 + 1e-12)) nonincreasing = false;
        if (res.scaled[k + 1] < res.scaled[k] * (1.0 - 1e-12)) nondecreasing = false;
    }
    res.tail_nonincreasing = nonincreasing;
    // monotone and below a bound valid for all k: convergent
    res.tail_converging = !nonincreasing && nondecreasing && res.bounded;
    res.holds = res.bounded && (res.tail_nonincreasing || res.tail_converging);
    return res;
}

ProofSequences extract_proof_sequences(const Trajectory& traj, Real horizon, const SpectralSystem& sys,
                                       const std::optional<HFunction>& hfun, Real y0_norm_da, ProofVariant variant) {
    (void)sys;
    if (!(horizon > 0.0)) throw InvalidArgument("extract_proof_sequences: T must be > 0");
    const auto count = static_cast<std::size_t>(std::floor(traj.t_final() / horizon * (1.0 + 1e-12)));
    if (count < 1) throw InvalidArgument("extract_proof_sequences: horizon too short for one period");
    if (!(y0_norm_da > 0.0)) throw InvalidArgument("extract_proof_sequences: |y0|_D(A) must be > 0");

    ProofSequences out;
    out.k_constant = std::max(1.0, traj.k_growth());
    const Real y2 = y0_norm_da * y0_norm_da;
    for (std::size_t k = 0; k <= count; ++k) {
        const Real t = std::min(static_cast<Real>(k) * horizon, traj.t_final());
        const Real s = 2.0 * traj.energy_at(t);
        out.s.push_back(s);
        Real e = s;
        if (hfun) {
            if (s <= 0.0) {
                e = 0.0;
            } else if (variant == ProofVariant::quadratic) {
                const Real h = (*hfun)(s / (out.k_constant * out.k_constant * y2));
                e = s * h * h;
            } else {
                const Real h = (*hfun)(s / (out.k_constant * y2));
                e = h * h;
            }
        }
        out.e.push_back(e);
    }
    auto nonincreasing = [](Real prev, Real next) { return next <= prev * (1.0 + 1e-12) + 1e-300; };
    for (std::size_t k = 0; k + 1 < out.s.size(); ++k) {
        out.s_nonincreasing &= nonincreasing(out.s[k], out.s[k + 1]);
        out.e_nonincreasing &= nonincreasing(out.e[k], out.e[k + 1]);
        if (out.s[k + 1] > 0.0 && out.s[k] > 0.0)
            out.e_over_s_nonincreasing &= nonincreasing(out.e[k] / out.s[k], out.e[k + 1] / out.s[k + 1]);
    }
    return out;
}

std::string to_string(DecayFit::Model m) {
    switch (m) {
        case DecayFit::Model::power: return "power";
        case DecayFit::Model::log_square: return "log_square";
        case DecayFit::Model::custom_bound: return "custom_bound";
    }
    return "?";
}

namespace {

Real interpolate(const std::vector<Real>& xs, const std::vector<Real>& ys, Real x) {
    const auto it = std::lower_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) return ys.back();
    const auto i = static_cast<std::size_t>(it - xs.begin());
    if (i == 0 || *it == x) return ys[i];
    const Real w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return (1.0 - w) * ys[i - 1] + w * ys[i];
}

std::vector<Real> log_grid(Real lo, Real hi, int points) {
    std::vector<Real> t(static_cast<std::size_t>(points));
    const Real ratio = std::log(hi / lo);
    for (int i = 0; i < points; ++i)
        t[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i / (points - 1));
    t.back() = hi;
    return t;
}

void check_window(const std::vector<Real>& times, FitWindow w) {
    if (times.empty()) throw InvalidArgument("decay analysis: empty trajectory");
    if (!(w.t_lo > 0.0) || !(w.t_lo < w.t_hi))
        throw InvalidArgument("decay analysis: window must satisfy 0 < t_lo < t_hi");
    if (w.t_lo < times.front() || w.t_hi > times.back() * (1.0 + 1e-12))
        throw InvalidArgument("decay analysis: window outside the recorded times");
}

}  // namespace

FitWindow effective_window(const Trajectory& traj, FitWindow requested) {
    FitWindow w = requested;
    w.t_hi = std::min(w.t_hi, traj.t_final());
    const Real floor = 1e-12 * traj.energies.front();
    for (std::size_t n = 0; n < traj.size(); ++n)
        if (traj.energies[n] < floor) {
            w.t_hi = std::min(w.t_hi, traj.times[n]);
            break;
        }
    return w;
}

DecayFit fit_power(const std::vector<Real>& times, const std::vector<Real>& energies, FitWindow window) {
    DecayFit fit;
    fit.model = DecayFit::Model::power;
    fit.bound_name = "fit";
    fit.t_lo = window.t_lo;
    fit.t_hi = window.t_hi;
    check_window(times, window);
    const auto grid = log_grid(window.t_lo, window.t_hi, 400);
    std::vector<Real> xs, ys;
    for (const Real t : grid) {
        const Real e = interpolate(times, energies, t);
        if (!(e > 0.0)) {
            fit.decayed = true;
            return fit;
        }
        xs.push_back(std::log(t));
        ys.push_back(std::log(e));
    }
    const auto n = static_cast<Real>(xs.size());
    Real sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
    }
    const Real slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const Real intercept = (sy - slope * sx) / n;
    Real ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Real r = ys[i] - (intercept + slope * xs[i]);
        ss += r * r;
    }
    fit.exponent_or_constant = slope;
    fit.residual = std::sqrt(ss / n);
    fit.validated = true;
    return fit;
}

namespace {

// The run hit the energy floor before the window opened.
bool collapsed(const Trajectory& traj, FitWindow requested, FitWindow effective) {
    return requested.t_lo > 0.0 && requested.t_lo < requested.t_hi && !(effective.t_lo < effective.t_hi) &&
           effective.t_hi < traj.t_final();
}

}  // namespace

DecayFit fit_power(const Trajectory& traj, FitWindow window) {
    const FitWindow eff = effective_window(traj, window);
    if (collapsed(traj, window, eff)) {
        DecayFit fit;
        fit.bound_name = "fit";
        fit.t_lo = eff.t_lo;
        fit.t_hi = eff.t_hi;
        fit.decayed = true;
        return fit;
    }
    return fit_power(traj.times, traj.energies, eff);
}

std::string bound_name(const Bound& b) {
    struct Visitor {
        std::string operator()(const PowerBound& p) const {
            std::ostringstream os;
            os.precision(6);
            os << "power:" << p.p;
            return os.str();
        }
        std::string operator()(const LogSquareBound&) const { return "log_square"; }
        std::string operator()(const HInverseBound&) const { return "hfun_inverse"; }
        std::string operator()(const KInverseBound&) const { return "kfun_inverse"; }
    };
    return std::visit(Visitor{}, b);
}

Bound bound_from_descriptor(const std::string& text, const std::optional<HFunction>& hfun) {
    if (text == "log_square") return LogSquareBound{};
    if (text == "hfun_inverse" || text == "kfun_inverse") {
        if (!hfun) throw InvalidArgument("bound '" + text + "' requires an hfun");
        if (text == "hfun_inverse") return HInverseBound{*hfun};
        return KInverseBound{*hfun};
    }
    if (text.rfind("power:", 0) == 0) {
        try {
            std::size_t used = 0;
            const Real p = std::stod(text.substr(6), &used);
            if (used != text.size() - 6 || !(p > 0.0)) throw std::invalid_argument("p");
            return PowerBound{p};
        } catch (const std::exception&) {
            throw InvalidArgument("bad power bound '" + text + "'");
        }
    }
    throw InvalidArgument("unknown bound '" + text + "'");
}

Real bound_value(const Bound& b, Real t, Real y0_norm_da) {
    const Real y2 = y0_norm_da * y0_norm_da;
    struct Visitor {
        Real t, y2;
        Real operator()(const PowerBound& p) const { return std::pow(t, -p.p) * y2; }
        Real operator()(const LogSquareBound&) const {
            const Real l = std::log1p(t);
            return y2 / (l * l);
        }
        Real operator()(const HInverseBound& h) const { return h.hfun.inverse(1.0 / t) * y2; }
        Real operator()(const KInverseBound& h) const { return h.hfun.k_inverse(1.0 / t); }
    };
    try {
        return std::visit(Visitor{t, y2}, b);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument("bound " + bound_name(b) + " undefined at t = " + std::to_string(t) + ": " + e.what());
    }
}

DecayFit validate_bound(const std::vector<Real>& times, const std::vector<Real>& energies, const Bound& bound,
                        Real y0_norm_da, FitWindow window, const ValidationOptions& opts) {
    if (!(opts.split > 0.0 && opts.split < 1.0)) throw InvalidArgument("validate_bound: split must lie in (0, 1)");
    if (!(opts.slack >= 0.0)) throw InvalidArgument("validate_bound: slack must be >= 0");
    if (opts.points < 4) throw InvalidArgument("validate_bound: need at least 4 points");

    DecayFit fit;
    fit.bound_name = bound_name(bound);
    fit.model = std::holds_alternative<PowerBound>(bound)       ? DecayFit::Model::power
                : std::holds_alternative<LogSquareBound>(bound) ? DecayFit::Model::log_square
                                                                : DecayFit::Model::custom_bound;
    fit.t_lo = window.t_lo;
    fit.t_hi = window.t_hi;
    fit.slack = opts.slack;
    check_window(times, window);

    const auto grid = log_grid(window.t_lo, window.t_hi, opts.points);
    const auto n_cal = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(opts.split * opts.points)), 1,
                                               grid.size() - 1);
    std::vector<Real> ratio(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Real b = bound_value(bound, grid[i], y0_norm_da);
        if (!(b > 0.0) || !std::isfinite(b))
            throw InvalidArgument("validate_bound: bound vanishes at t = " + std::to_string(grid[i]));
        ratio[i] = interpolate(times, energies, grid[i]) / b;
    }
    const Real c = *std::max_element(ratio.begin(), ratio.begin() + static_cast<std::ptrdiff_t>(n_cal));
    Real worst = 0.0;
    Real ss = 0.0;
    for (std::size_t i = n_cal; i < grid.size(); ++i) {
        const Real rel = c > 0.0 ? ratio[i] / c : (ratio[i] > 0.0 ? std::numeric_limits<Real>::infinity() : 0.0);
        worst = std::max(worst, rel);
        if (rel > 0.0 && std::isfinite(rel)) ss += std::log(rel) * std::log(rel);
    }
    fit.exponent_or_constant = c;
    fit.residual = std::sqrt(ss / static_cast<Real>(grid.size() - n_cal));
    fit.validated = worst < 1.0 + opts.slack;
    fit.validation_margin = 1.0 - worst;
    return fit;
}

DecayFit validate_bound(const Trajectory& traj, const Bound& bound, Real y0_norm_da, FitWindow window,
                        const ValidationOptions& opts) {
    const FitWindow eff = effective_window(traj, window);
    if (collapsed(traj, window, eff)) {
        DecayFit fit;
        fit.bound_name = bound_name(bound);
        fit.t_lo = eff.t_lo;
        fit.t_hi = eff.t_hi;
        fit.slack = opts.slack;
        fit.decayed = true;
        return fit;
    }
    return validate_bound(traj.times, traj.energies, bound, y0_norm_da, eff, opts);
}

nlohmann::json to_json(const DecayFit& fit) {
    nlohmann::json j;
    j["model"] = to_string(fit.model);
    j["bound"] = fit.bound_name;
    j["exponent_or_constant"] = fit.exponent_or_constant;
    j["window"] = {fit.t_lo, fit.t_hi};
    j["residual"] = fit.residual;
    j["validated"] = fit.validated;
    j["validation_margin"] = fit.validation_margin;
    j["slack"] = fit.slack;
    j["decayed"] = fit.decayed;
    return j;
}

}  // namespace bistab
