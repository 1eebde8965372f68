#pragma once

// Finite spectral truncation of the abstract triple (H, K, L) together with
// the generator A (diagonal in the working basis) and the bounded control
// operator B (Hermitian, positive semidefinite).

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bistab/errors.hpp"

namespace bistab {

using Real = double;
using Complex = std::complex<double>;
using State = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

/// Tolerance on Hermiticity / positivity of B at construction.
inline constexpr Real kStructureTol = 1e-10;

class SpectralSystem {
public:
    /// Validates every invariant and throws InvalidArgument on violation.
    /// An empty `k_weights` selects the graph-norm weights 1 + |lambda_j|^2.
    SpectralSystem(std::vector<Complex> eigenvalues, CMatrix b_matrix,
                   std::vector<Real> k_weights, Real theta, std::string label);

    [[nodiscard]] Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(eigenvalues_.size()); }
    [[nodiscard]] const std::vector<Complex>& eigenvalues() const noexcept { return eigenvalues_; }
    [[nodiscard]] const CMatrix& b_matrix() const noexcept { return b_; }
    [[nodiscard]] const RVector& k_weights() const noexcept { return k_; }
    [[nodiscard]] const RVector& l_weights() const noexcept { return l_; }
    [[nodiscard]] Real theta() const noexcept { return theta_; }
    [[nodiscard]] const std::string& label() const noexcept { return label_; }

    /// Range factorization B = V diag(mu) V^*, keeping eigenvalues above
    /// 1e-14 * max(mu). Columns of V are orthonormal.
    [[nodiscard]] const CMatrix& b_range() const noexcept { return b_vectors_; }
    [[nodiscard]] const RVector& b_spectrum() const noexcept { return b_values_; }

    /// max_j |lambda_j|
    [[nodiscard]] Real spectral_radius() const noexcept { return max_abs_lambda_; }
    /// True when Re(lambda_j) == 0 for every mode.
    [[nodiscard]] bool conservative() const noexcept { return conservative_; }

    void require_dim(const State& y) const;

private:
    std::vector<Complex> eigenvalues_;
    CMatrix b_;
    RVector k_;
    RVector l_;
    Real theta_;
    std::string label_;
    CMatrix b_vectors_;
    RVector b_values_;
    Real max_abs_lambda_ = 0.0;
    bool conservative_ = true;
};

Real norm_h(const SpectralSystem& sys, const State& y);
Real norm_k(const SpectralSystem& sys, const State& y);
Real norm_l(const SpectralSystem& sys, const State& y);

struct InterpolationCheck {
    Real lhs;   // ||y||
    Real rhs;   // ||y||_L^theta ||y||_K^(1-theta)
    bool holds;
};

InterpolationCheck check_interpolation(const SpectralSystem& sys, const State& y);

/// Largest singular value of B by power iteration (Hermitian B, so this is
/// the spectral radius). Relative accuracy 1e-10.
Real op_norm_b(const SpectralSystem& sys);

/// <By, y>. Throws NumericalFailure when the imaginary part or a negative
/// real part exceeds 1e-12 ||y||^2.
Real quad_form_b(const SpectralSystem& sys, const State& y);

/// <By, y> through the range factorization, no structure checks. O(dim * rank).
Real quad_form_b_fast(const SpectralSystem& sys, const State& y);

// Increasing modulus used by the weak observability inequality.
class HFunction {
public:
    enum class Kind { constant, power, log_exponential };

    static HFunction constant();
    static HFunction power(Real s);
    /// exp(-c_t / sqrt(x)). Rejects c_t for which H^2(x)/x fails to be
    /// increasing on (0, 1) (checked on a grid; requires c_t >= 1).
    static HFunction log_exponential(Real c_t);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] Real parameter() const noexcept { return param_; }

    /// H(x); throws InvalidArgument for x outside (0, inf).
    [[nodiscard]] Real operator()(Real x) const;
    /// K(x) = x H(x)
    [[nodiscard]] Real k_function(Real x) const { return x * (*this)(x); }

    /// Solves H(x) = v by bisection (tolerance 1e-12 relative).
    [[nodiscard]] Real inverse(Real v) const;
    /// Solves x H(x) = v by bisection.
    [[nodiscard]] Real k_inverse(Real v) const;

    /// Whether x -> H^2(x)/x is increasing on a grid of (0, 1).
    [[nodiscard]] bool normalized_rate_admissible() const;

    [[nodiscard]] std::string descriptor() const;
    static HFunction from_descriptor(const std::string& text);

private:
    HFunction(Kind kind, Real param) : kind_(kind), param_(param) {}

    Kind kind_;
    Real param_;
};

// JSON snapshot: n, eigenvalues [[re, im]...], b_matrix row-major
// [[re, im]...], k_weights, theta, label.
nlohmann::json to_json(const SpectralSystem& sys);
SpectralSystem system_from_json(const nlohmann::json& j);

nlohmann::json state_to_json(const State& y);
State state_from_json(const nlohmann::json& j);

}  // namespace bistab
