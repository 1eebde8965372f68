#include "bistab/spectral_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>

namespace bistab {

namespace {

Real hermitian_defect(const CMatrix& b) {
    if (b.size() == 0) return 0.0;
    return (b - b.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace

SpectralSystem::SpectralSystem(std::vector<Complex> eigenvalues, CMatrix b_matrix,
                               std::vector<Real> k_weights, Real theta, std::string label)
    : eigenvalues_(std::move(eigenvalues)), b_(std::move(b_matrix)), theta_(theta),
      label_(std::move(label)) {
    const auto n = static_cast<Eigen::Index>(eigenvalues_.size());
    if (n == 0) throw InvalidArgument("SpectralSystem: dimension must be positive");
    if (b_.rows() != n || b_.cols() != n)
        throw InvalidArgument("SpectralSystem: b_matrix must be " + std::to_string(n) + "x" +
                              std::to_string(n));
    if (!(theta_ > 0.0 && theta_ < 1.0))
        throw InvalidArgument("SpectralSystem: theta must lie in (0, 1)");
    if (!b_.allFinite()) throw InvalidArgument("SpectralSystem: b_matrix has non-finite entries");

    for (const auto& lam : eigenvalues_) {
        if (!std::isfinite(lam.real()) || !std::isfinite(lam.imag()))
            throw InvalidArgument("SpectralSystem: non-finite eigenvalue");
        if (lam.real() > 0.0)
            throw InvalidArgument("SpectralSystem: Re(lambda) > 0, A would not be dissipative");
        if (lam.real() != 0.0) conservative_ = false;
        max_abs_lambda_ = std::max(max_abs_lambda_, std::abs(lam));
    }

    if (k_weights.empty()) {
        k_weights.reserve(eigenvalues_.size());
        for (const auto& lam : eigenvalues_) k_weights.push_back(1.0 + std::norm(lam));
    }
    if (static_cast<Eigen::Index>(k_weights.size()) != n)
        throw InvalidArgument("SpectralSystem: k_weights length mismatch");
    k_.resize(n);
    l_.resize(n);
    const Real l_exponent = -(1.0 - theta_) / theta_;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Real kj = k_weights[static_cast<std::size_t>(j)];
        if (!std::isfinite(kj) || kj < 1.0)
            throw InvalidArgument("SpectralSystem: k_weights must be finite and >= 1");
        k_[j] = kj;
        l_[j] = std::pow(kj, l_exponent);
    }

    const Real scale = std::max<Real>(1.0, b_.cwiseAbs().maxCoeff());
    if (hermitian_defect(b_) > kStructureTol * scale)
        throw InvalidArgument("SpectralSystem: b_matrix is not Hermitian");

    Eigen::SelfAdjointEigenSolver<CMatrix> eig(b_);
    if (eig.info() != Eigen::Success)
        throw NumericalFailure("SpectralSystem: eigen-decomposition of B failed");
    const RVector& mu = eig.eigenvalues();
    if (mu.minCoeff() < -kStructureTol * scale)
        throw InvalidArgument("SpectralSystem: b_matrix is not positive semidefinite");

    const Real mu_max = mu.maxCoeff();
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < n; ++i)
        if (mu_max > 0.0 && mu[i] > 1e-14 * mu_max) kept.push_back(i);
    b_vectors_.resize(n, static_cast<Eigen::Index>(kept.size()));
    b_values_.resize(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        b_vectors_.col(col) = eig.eigenvectors().col(kept[c]);
        b_values_[col] = mu[kept[c]];
    }
}

void SpectralSystem::require_dim(const State& y) const {
    if (y.size() != dim())
        throw InvalidArgument("state dimension " + std::to_string(y.size()) +
                              " does not match system dimension " + std::to_string(dim()));
}

Real norm_h(const SpectralSystem& sys, const State& y) {
    sys.require_dim(y);
    return y.norm();
}

Real norm_k(const SpectralSystem& sys, const State& y) {
    sys.require_dim(y);
    return std::sqrt((sys.k_weights().array() * y.cwiseAbs2().array()).sum());
}

Real norm_l(const SpectralSystem& sys, const State& y) {
    sys.require_dim(y);
    return std::sqrt((sys.l_weights().array() * y.cwiseAbs2().array()).sum());
}

InterpolationCheck check_interpolation(const SpectralSystem& sys, const State& y) {
    const Real lhs = norm_h(sys, y);
    if (lhs == 0.0) throw InvalidArgument("check_interpolation: zero state");
    const Real theta = sys.theta();
    const Real rhs = std::pow(norm_l(sys, y), theta) * std::pow(norm_k(sys, y), 1.0 - theta);
    return {lhs, rhs, lhs <= rhs * (1.0 + 1e-12)};
}

Real op_norm_b(const SpectralSystem& sys) {
    const CMatrix& b = sys.b_matrix();
    const Eigen::Index n = sys.dim();
    if (b.cwiseAbs().maxCoeff() == 0.0) return 0.0;

    // Fixed start vector with distinct entries so no eigenvector is missed.
    State v(n);
    for (Eigen::Index j = 0; j < n; ++j)
        v[j] = Complex(1.0 + 0.37 * static_cast<Real>(j) / static_cast<Real>(n),
                       0.11 * std::sin(static_cast<Real>(j + 1)));
    v.normalize();

    Real rho = 0.0;
    int stable = 0;
    constexpr int kMaxIter = 200000;
    for (int it = 0; it < kMaxIter; ++it) {
        State w = b * v;
        const Real next = v.dot(w).real();
        const Real wn = w.norm();
        if (wn == 0.0) return 0.0;
        v = w / wn;
        if (std::abs(next - rho) <= 1e-15 * std::abs(next)) {
            if (++stable >= 5) return next;
        } else {
            stable = 0;
        }
        rho = next;
    }
    return rho;
}

Real quad_form_b(const SpectralSystem& sys, const State& y) {
    sys.require_dim(y);
    const Complex q = y.dot(sys.b_matrix() * y);
    const Real scale = y.squaredNorm();
    if (std::abs(q.imag()) > 1e-12 * scale)
        throw NumericalFailure("quad_form_b: imaginary part exceeds tolerance (B not Hermitian)");
    if (q.real() < -1e-12 * scale)
        throw NumericalFailure("quad_form_b: negative value (B not positive semidefinite)");
    return std::max(q.real(), 0.0);
}

Real quad_form_b_fast(const SpectralSystem& sys, const State& y) {
    const RVector proj = (sys.b_range().adjoint() * y).cwiseAbs2();
    return proj.dot(sys.b_spectrum());
}

// ---------------------------------------------------------------------------
// HFunction

HFunction HFunction::constant() { return {Kind::constant, 1.0}; }

HFunction HFunction::power(Real s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("HFunction::power: s must be > 0");
    return {Kind::power, s};
}

HFunction HFunction::log_exponential(Real c_t) {
    if (!(c_t > 0.0) || !std::isfinite(c_t))
        throw InvalidArgument("HFunction::log_exponential: c_T must be > 0");
    HFunction h{Kind::log_exponential, c_t};
    if (!h.normalized_rate_admissible())
        throw InvalidArgument("HFunction::log_exponential: H^2(x)/x is not increasing on (0,1) "
                              "for c_T = " + std::to_string(c_t) + " (need c_T >= 1)");
    return h;
}

Real HFunction::operator()(Real x) const {
    if (!(x > 0.0) || !std::isfinite(x))
        throw InvalidArgument("HFunction: argument outside (0, inf)");
    switch (kind_) {
        case Kind::constant: return 1.0;
        case Kind::power: return std::pow(x, param_);
        case Kind::log_exponential: return std::exp(-param_ / std::sqrt(x));
    }
    return 1.0;
}

bool HFunction::normalized_rate_admissible() const {
    // log(H^2(x)/x) on a uniform grid of (0, 1); log form avoids underflow.
    auto log_g = [this](Real x) {
        switch (kind_) {
            case Kind::constant: return -std::log(x);
            case Kind::power: return (2.0 * param_ - 1.0) * std::log(x);
            case Kind::log_exponential: return -2.0 * param_ / std::sqrt(x) - std::log(x);
        }
        return 0.0;
    };
    constexpr int kGrid = 1000;
    Real prev = log_g(1.0 / kGrid);
    for (int i = 2; i < kGrid; ++i) {
        const Real cur = log_g(static_cast<Real>(i) / kGrid);
        if (!(cur > prev)) return false;
        prev = cur;
    }
    return true;
}

namespace {

template <class F>
Real increasing_root(F f, Real v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + ": value must be > 0");
    Real lo = 1.0;
    Real hi = 1.0;
    int guard = 0;
    while (f(lo) > v) {
        lo *= 0.5;
        if (++guard > 4000 || lo == 0.0)
            throw InvalidArgument(std::string(what) + ": value below the range of the function");
    }
    guard = 0;
    while (f(hi) < v) {
        hi *= 2.0;
        if (++guard > 1000 || !std::isfinite(hi))
            throw InvalidArgument(std::string(what) + ": value above the range of the function");
    }
    auto g = [&](Real x) { return f(x) - v; };
    auto tol = [](Real a, Real b) { return std::abs(b - a) <= 1e-13 * std::abs(b); };
    const auto [a, b] = boost::math::tools::bisect(g, lo, hi, tol);
    return 0.5 * (a + b);
}

}  // namespace

Real HFunction::inverse(Real v) const {
    if (kind_ == Kind::constant) throw InvalidArgument("HFunction::inverse: constant H is not invertible");
    return increasing_root([this](Real x) { return (*this)(x); }, v, "HFunction::inverse");
}

Real HFunction::k_inverse(Real v) const {
    return increasing_root([this](Real x) { return k_function(x); }, v, "HFunction::k_inverse");
}

std::string HFunction::descriptor() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
        case Kind::constant: return "constant";
        case Kind::power: os << "power:" << param_; break;
        case Kind::log_exponential: os << "logexp:" << param_; break;
    }
    return os.str();
}

HFunction HFunction::from_descriptor(const std::string& text) {
    if (text == "constant") return constant();
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw InvalidArgument("unknown hfun descriptor '" + text + "'");
    const std::string kind = text.substr(0, colon);
    Real value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw InvalidArgument("bad hfun parameter in '" + text + "'");
    }
    if (kind == "power") return power(value);
    if (kind == "logexp") return log_exponential(value);
    throw InvalidArgument("unknown hfun descriptor '" + text + "'");
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json state_to_json(const State& y) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index j = 0; j < y.size(); ++j) arr.push_back({y[j].real(), y[j].imag()});
    return arr;
}

State state_from_json(const nlohmann::json& j) {
    State y(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = Complex(j[i].at(0).get<Real>(), j[i].at(1).get<Real>());
    return y;
}

nlohmann::json to_json(const SpectralSystem& sys) {
    nlohmann::json j;
    const Eigen::Index n = sys.dim();
    j["n"] = n;
    auto eig = nlohmann::json::array();
    for (const auto& lam : sys.eigenvalues()) eig.push_back({lam.real(), lam.imag()});
    j["eigenvalues"] = eig;
    auto b = nlohmann::json::array();
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            b.push_back({sys.b_matrix()(r, c).real(), sys.b_matrix()(r, c).imag()});
    j["b_matrix"] = b;
    j["k_weights"] = std::vector<Real>(sys.k_weights().data(), sys.k_weights().data() + n);
    j["theta"] = sys.theta();
    j["label"] = sys.label();
    return j;
}

SpectralSystem system_from_json(const nlohmann::json& j) {
    try {
        const auto n = j.at("n").get<Eigen::Index>();
        std::vector<Complex> eig;
        for (const auto& p : j.at("eigenvalues")) eig.emplace_back(p.at(0).get<Real>(), p.at(1).get<Real>());
        const auto& bj = j.at("b_matrix");
        if (static_cast<Eigen::Index>(bj.size()) != n * n)
            throw InvalidArgument("system snapshot: b_matrix must have n*n entries");
        CMatrix b(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) {
                const auto& p = bj[static_cast<std::size_t>(r * n + c)];
                b(r, c) = Complex(p.at(0).get<Real>(), p.at(1).get<Real>());
            }
        std::vector<Real> k = j.contains("k_weights") ? j["k_weights"].get<std::vector<Real>>()
                                                      : std::vector<Real>{};
        if (static_cast<Eigen::Index>(eig.size()) != n)
            throw InvalidArgument("system snapshot: eigenvalue count does not match n");
        return SpectralSystem(std::move(eig), std::move(b), std::move(k), j.at("theta").get<Real>(),
                              j.value("label", std::string("custom")));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("system snapshot: ") + e.what());
    }
}

}  // namespace bistab
