#include "bistab/models.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace bistab::models {

namespace {

constexpr Real kPi = std::numbers::pi;
constexpr int kGridPoints = 512;

const Complex kI(0.0, 1.0);

// int_{x0}^{x1} cos(m x) dx
Real cos_integral(int m, Real x0, Real x1) {
    if (m == 0) return x1 - x0;
    return (std::sin(m * x1) - std::sin(m * x0)) / m;
}

int physical_dim(const ModelSpec& spec) {
    switch (spec.family) {
        case Family::wave1d: return 2 * spec.n_modes;
        case Family::coupled_wave1d: return 4 * spec.n_modes;
        case Family::schrodinger1d: return spec.n_modes;
    }
    return 0;
}

std::vector<Complex> eigenvalues_for(const ModelSpec& spec) {
    const int n = spec.n_modes;
    std::vector<Complex> lam(static_cast<std::size_t>(physical_dim(spec)));
    for (int j = 1; j <= n; ++j) {
        const auto i = static_cast<std::size_t>(j - 1);
        const auto un = static_cast<std::size_t>(n);
        switch (spec.family) {
            case Family::wave1d:
                lam[i] = Complex(0.0, -j);
                lam[un + i] = Complex(0.0, j);
                break;
            case Family::coupled_wave1d: {
                const Real ws = std::sqrt(Real(j) * j + spec.beta);
                const Real wd = std::sqrt(Real(j) * j - spec.beta);
                lam[i] = Complex(0.0, -ws);
                lam[un + i] = Complex(0.0, ws);
                lam[2 * un + i] = Complex(0.0, -wd);
                lam[3 * un + i] = Complex(0.0, wd);
                break;
            }
            case Family::schrodinger1d:
                lam[i] = Complex(0.0, -Real(j) * j);
                break;
        }
    }
    return lam;
}

// Physical coordinates are stacked sine coefficients: wave (u, u_t),
// coupled (u, u_t, v, v_t), Schroedinger (u).
CMatrix physical_map(const ModelSpec& spec, const FieldMaps& maps) {
    const int d = physical_dim(spec);
    CMatrix p(d, d);
    switch (spec.family) {
        case Family::wave1d: p << maps.u, maps.u_t; break;
        case Family::coupled_wave1d: p << maps.u, maps.u_t, maps.v, maps.v_t; break;
        case Family::schrodinger1d: p = maps.u; break;
    }
    return p;
}

// Modal equations in physical coordinates.
CMatrix physical_generator(const ModelSpec& spec) {
    const int n = spec.n_modes;
    const int d = physical_dim(spec);
    CMatrix m = CMatrix::Zero(d, d);
    for (int j = 1; j <= n; ++j) {
        const int i = j - 1;
        const Real j2 = Real(j) * j;
        switch (spec.family) {
            case Family::wave1d:
                m(i, n + i) = 1.0;
                m(n + i, i) = -j2;
                break;
            case Family::coupled_wave1d:
                m(i, n + i) = 1.0;
                m(n + i, i) = -j2;
                m(n + i, 2 * n + i) = -spec.beta;
                m(2 * n + i, 3 * n + i) = 1.0;
                m(3 * n + i, 2 * n + i) = -j2;
                m(3 * n + i, i) = -spec.beta;
                break;
            case Family::schrodinger1d:
                m(i, i) = -kI * j2;
                break;
        }
    }
    return m;
}

// Gram matrix of the energy inner product in physical coordinates.
CMatrix energy_gram(const ModelSpec& spec, bool modified) {
    const int n = spec.n_modes;
    const int d = physical_dim(spec);
    CMatrix w = CMatrix::Zero(d, d);
    for (int j = 1; j <= n; ++j) {
        const int i = j - 1;
        const Real j2 = Real(j) * j;
        switch (spec.family) {
            case Family::wave1d:
                w(i, i) = j2;
                w(n + i, n + i) = 1.0;
                break;
            case Family::coupled_wave1d:
                w(i, i) = j2;
                w(n + i, n + i) = 1.0;
                w(2 * n + i, 2 * n + i) = j2;
                w(3 * n + i, 3 * n + i) = 1.0;
                if (modified) {
                    w(i, 2 * n + i) = spec.beta;
                    w(2 * n + i, i) = spec.beta;
                }
                break;
            case Family::schrodinger1d:
                w(i, i) = 1.0;
                break;
        }
    }
    return w;
}

Real skew_defect(const CMatrix& w, const CMatrix& m) {
    const CMatrix wm = w * m;
    const Real scale = std::max<Real>(wm.cwiseAbs().maxCoeff(), 1.0);
    return (wm + wm.adjoint()).cwiseAbs().maxCoeff() / scale;
}

std::string describe(const ModelSpec& spec, const std::string& energy) {
    std::ostringstream os;
    os.precision(10);
    os << to_string(spec.family) << "(n_modes=" << spec.n_modes;
    if (spec.damping.kind == DampingProfile::Kind::global)
        os << ",damping=global";
    else
        os << ",damping=interval[" << spec.damping.x0 << "," << spec.damping.x1 << "]";
    os << ",a0=" << spec.damping.amplitude;
    if (spec.family == Family::coupled_wave1d) os << ",beta=" << spec.beta << ",energy=" << energy;
    os << ")";
    return os.str();
}

}  // namespace

std::string to_string(Family f) {
    switch (f) {
        case Family::wave1d: return "wave1d";
        case Family::coupled_wave1d: return "coupled_wave1d";
        case Family::schrodinger1d: return "schrodinger1d";
    }
    return "?";
}

Family family_from_string(const std::string& s) {
    if (s == "wave1d") return Family::wave1d;
    if (s == "coupled_wave1d") return Family::coupled_wave1d;
    if (s == "schrodinger1d") return Family::schrodinger1d;
    throw InvalidArgument("unknown model family '" + s + "'");
}

DampingProfile DampingProfile::global(Real amplitude) {
    DampingProfile d;
    d.amplitude = amplitude;
    return d;
}

DampingProfile DampingProfile::interval(Real x0, Real x1, Real amplitude) {
    DampingProfile d;
    d.kind = Kind::interval;
    d.x0 = x0;
    d.x1 = x1;
    d.amplitude = amplitude;
    return d;
}

void DampingProfile::validate() const {
    if (!(amplitude > 0.0) || !std::isfinite(amplitude))
        throw InvalidArgument("damping amplitude must be > 0");
    if (kind == Kind::interval && !(x0 >= 0.0 && x0 < x1 && x1 <= kPi))
        throw InvalidArgument("damping interval must satisfy 0 <= x0 < x1 <= pi");
}

Real DampingProfile::operator()(Real x) const {
    if (kind == Kind::global) return amplitude;
    return (x >= x0 && x <= x1) ? amplitude : 0.0;
}

void ModelSpec::validate() const {
    if (n_modes < 1) throw InvalidArgument("n_modes must be >= 1");
    damping.validate();
    if (!(theta > 0.0 && theta < 1.0)) throw InvalidArgument("theta must lie in (0, 1)");
    if (family == Family::coupled_wave1d && !(std::abs(beta) < 1.0))
        throw InvalidArgument("coupled_wave1d requires |beta| < 1 (first Dirichlet eigenvalue)");
}

Eigen::MatrixXd damping_gram(const DampingProfile& damping, int n_modes) {
    damping.validate();
    if (damping.kind == DampingProfile::Kind::global)
        return damping.amplitude * Eigen::MatrixXd::Identity(n_modes, n_modes);
    Eigen::MatrixXd g(n_modes, n_modes);
    // (2/pi) sin(jx) sin(kx) = (1/pi) [cos((j-k)x) - cos((j+k)x)]
    for (int j = 1; j <= n_modes; ++j)
        for (int k = j; k <= n_modes; ++k) {
            const Real v = damping.amplitude / kPi *
                           (cos_integral(j - k, damping.x0, damping.x1) -
                            cos_integral(j + k, damping.x0, damping.x1));
            g(j - 1, k - 1) = v;
            g(k - 1, j - 1) = v;
        }
    return g;
}

FieldMaps field_maps(const ModelSpec& spec) {
    spec.validate();
    const int n = spec.n_modes;
    const int d = physical_dim(spec);
    FieldMaps maps{CMatrix::Zero(n, d), CMatrix::Zero(n, d), CMatrix::Zero(n, d), CMatrix::Zero(n, d)};
    const Real r2 = std::sqrt(2.0);
    for (int j = 1; j <= n; ++j) {
        const int i = j - 1;
        switch (spec.family) {
            case Family::wave1d:
                maps.u(i, i) = 1.0 / (r2 * j);
                maps.u(i, n + i) = 1.0 / (r2 * j);
                maps.u_t(i, i) = -kI / r2;
                maps.u_t(i, n + i) = kI / r2;
                break;
            case Family::coupled_wave1d: {
                const Real ws = std::sqrt(Real(j) * j + spec.beta);
                const Real wd = std::sqrt(Real(j) * j - spec.beta);
                const int zs = i, ws_idx = n + i, zd = 2 * n + i, wd_idx = 3 * n + i;
                maps.u(i, zs) = maps.u(i, ws_idx) = 1.0 / (2.0 * ws);
                maps.u(i, zd) = maps.u(i, wd_idx) = 1.0 / (2.0 * wd);
                maps.v(i, zs) = maps.v(i, ws_idx) = 1.0 / (2.0 * ws);
                maps.v(i, zd) = maps.v(i, wd_idx) = -1.0 / (2.0 * wd);
                maps.u_t(i, zs) = -0.5 * kI;
                maps.u_t(i, ws_idx) = 0.5 * kI;
                maps.u_t(i, zd) = -0.5 * kI;
                maps.u_t(i, wd_idx) = 0.5 * kI;
                maps.v_t(i, zs) = -0.5 * kI;
                maps.v_t(i, ws_idx) = 0.5 * kI;
                maps.v_t(i, zd) = 0.5 * kI;
                maps.v_t(i, wd_idx) = -0.5 * kI;
                break;
            }
            case Family::schrodinger1d:
                maps.u(i, i) = 1.0;
                break;
        }
    }
    return maps;
}

CMatrix assembled_generator(const ModelSpec& spec) {
    const CMatrix p = physical_map(spec, field_maps(spec));
    return p.partialPivLu().solve(physical_generator(spec) * p);
}

Real energy_isometry_defect(const ModelSpec& spec) {
    const CMatrix p = physical_map(spec, field_maps(spec));
    const CMatrix w = energy_gram(spec, true);
    return (p.adjoint() * w * p - CMatrix::Identity(p.cols(), p.cols())).cwiseAbs().maxCoeff();
}

SpectralSystem build(const ModelSpec& spec) {
    spec.validate();
    const FieldMaps maps = field_maps(spec);
    const std::vector<Complex> lam = eigenvalues_for(spec);

    // Energy inner product: the standard one when it already makes A skew.
    const CMatrix m_phys = physical_generator(spec);
    std::string energy = "standard";
    if (skew_defect(energy_gram(spec, false), m_phys) > 1e-12) {
        energy = "modified";
        if (skew_defect(energy_gram(spec, true), m_phys) > 1e-12)
            throw NumericalFailure("build: generator is not skew in the modified energy product");
    }
    if (energy_isometry_defect(spec) > 1e-12)
        throw NumericalFailure("build: energy coordinates are not orthonormal");

    const CMatrix a = assembled_generator(spec);
    const Real a_norm = a.cwiseAbs().maxCoeff();
    CMatrix diag_lam = CMatrix::Zero(a.rows(), a.cols());
    for (Eigen::Index k = 0; k < a.rows(); ++k) diag_lam(k, k) = lam[static_cast<std::size_t>(k)];
    if ((a + a.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * a_norm ||
        (a - diag_lam).cwiseAbs().maxCoeff() > 1e-12 * a_norm)
        throw NumericalFailure("build: assembled generator is not the expected skew diagonal");

    const Eigen::MatrixXd g = damping_gram(spec.damping, spec.n_modes);
    const CMatrix& q = spec.family == Family::schrodinger1d ? maps.u : maps.u_t;
    CMatrix b = q.adjoint() * g.cast<Complex>() * q;
    b = 0.5 * (b + b.adjoint()).eval();

    return SpectralSystem(lam, std::move(b), {}, spec.theta, describe(spec, energy));
}

std::vector<Complex> synthesize(const CMatrix& map, const State& y, const std::vector<Real>& xs,
                                bool derivative) {
    const State coef = map * y;
    const Real norm = std::sqrt(2.0 / kPi);
    std::vector<Complex> out(xs.size(), Complex(0.0));
    for (std::size_t p = 0; p < xs.size(); ++p) {
        Complex acc(0.0);
        for (Eigen::Index j = 0; j < coef.size(); ++j) {
            const Real k = static_cast<Real>(j + 1);
            acc += coef[j] * (derivative ? k * std::cos(k * xs[p]) : std::sin(k * xs[p]));
        }
        out[p] = norm * acc;
    }
    return out;
}

Real grid_energy(const ModelSpec& spec, const State& y) {
    const FieldMaps maps = field_maps(spec);
    std::vector<Real> xs(kGridPoints);
    const Real h = kPi / kGridPoints;
    for (int i = 0; i < kGridPoints; ++i) xs[static_cast<std::size_t>(i)] = (i + 0.5) * h;

    auto sq_integral = [&](const std::vector<Complex>& f) {
        Real s = 0.0;
        for (const auto& v : f) s += std::norm(v);
        return s * h;
    };
    switch (spec.family) {
        case Family::schrodinger1d:
            return 0.5 * sq_integral(synthesize(maps.u, y, xs));
        case Family::wave1d:
            return 0.5 * (sq_integral(synthesize(maps.u, y, xs, true)) +
                          sq_integral(synthesize(maps.u_t, y, xs)));
        case Family::coupled_wave1d: {
            const auto u = synthesize(maps.u, y, xs);
            const auto v = synthesize(maps.v, y, xs);
            Real cross = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) cross += (u[i] * std::conj(v[i])).real();
            return 0.5 * (sq_integral(synthesize(maps.u, y, xs, true)) +
                          sq_integral(synthesize(maps.u_t, y, xs)) +
                          sq_integral(synthesize(maps.v, y, xs, true)) +
                          sq_integral(synthesize(maps.v_t, y, xs)) + 2.0 * spec.beta * cross * h);
        }
    }
    return 0.0;
}

Real physical_energy(const ModelSpec& spec, const SpectralSystem& sys, const State& y, bool verify) {
    const Real e = 0.5 * norm_h(sys, y) * norm_h(sys, y);
    if (verify) {
        const Real g = grid_energy(spec, y);
        if (std::abs(g - e) > 1e-6 * e)
            throw NumericalFailure("physical_energy: grid energy " + std::to_string(g) +
                                   " disagrees with modal energy " + std::to_string(e));
    }
    return e;
}

State smooth_state(const SpectralSystem& sys, Real norm, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Real> phase(0.0, 2.0 * kPi);
    State y(sys.dim());
    for (Eigen::Index m = 0; m < sys.dim(); ++m) {
        const Real amp = std::pow(1.0 + std::norm(sys.eigenvalues()[static_cast<std::size_t>(m)]), -0.75);
        y[m] = std::polar(amp, phase(rng));
    }
    return y * (norm / y.norm());
}

State random_state(const SpectralSystem& sys, Real norm, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<Real> g(0.0, 1.0);
    State y(sys.dim());
    for (Eigen::Index m = 0; m < sys.dim(); ++m) {
        const Real re = g(rng);
        const Real im = g(rng);
        y[m] = Complex(re, im);
    }
    return y * (norm / y.norm());
}

State basis_state(const SpectralSystem& sys, Eigen::Index index, Real norm) {
    if (index < 0 || index >= sys.dim()) throw InvalidArgument("basis_state: index out of range");
    State y = State::Zero(sys.dim());
    y[index] = norm;
    return y;
}

}  // namespace bistab::models
