#pragma once

// One-dimensional application systems on (0, pi) with Dirichlet sine basis
// phi_j(x) = sqrt(2/pi) sin(j x):
//
//   wave1d          u_tt - u_xx + p a u_t = 0            dim 2n, lambda = -+ i j
//   coupled_wave1d  u_tt - u_xx + p a u_t + beta v = 0,
//                   v_tt - v_xx + beta u = 0             dim 4n, lambda = -+ i sqrt(j^2 +- beta)
//   schrodinger1d   u_t - i u_xx + p a u = 0             dim n,  lambda = -i j^2
//
// States are energy coordinates: an orthonormal eigenbasis of A for the
// (modified, when beta != 0) energy inner product, so ||y|| is the physical
// energy norm and A acts diagonally.

#include <cstdint>
#include <string>

#include "bistab/spectral_core.hpp"

namespace bistab::models {

enum class Family { wave1d, coupled_wave1d, schrodinger1d };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

struct DampingProfile {
    enum class Kind { global, interval };
    Kind kind = Kind::global;
    Real x0 = 0.0;
    Real x1 = 3.14159265358979323846;
    Real amplitude = 1.0;

    static DampingProfile global(Real amplitude = 1.0);
    static DampingProfile interval(Real x0, Real x1, Real amplitude = 1.0);
    void validate() const;
    /// a(x)
    [[nodiscard]] Real operator()(Real x) const;
};

struct ModelSpec {
    Family family = Family::wave1d;
    int n_modes = 64;
    DampingProfile damping;
    Real beta = 0.1;
    Real theta = 0.5;

    void validate() const;
};

/// G_jk = int a(x) phi_j(x) phi_k(x) dx in closed form (product-to-sum).
Eigen::MatrixXd damping_gram(const DampingProfile& damping, int n_modes);

/// Linear maps from energy coordinates to sine coefficients of each field.
/// Fields absent from a family have zero rows.
struct FieldMaps {
    CMatrix u;
    CMatrix u_t;
    CMatrix v;
    CMatrix v_t;
};

FieldMaps field_maps(const ModelSpec& spec);

/// Builds the truncated system. Verifies skewness of the assembled generator
/// and isometry of the energy coordinates; throws NumericalFailure otherwise.
SpectralSystem build(const ModelSpec& spec);

/// Generator in energy coordinates recomputed from the physical modal
/// equations, P^{-1} M P. Diagonal and skew-Hermitian for every admissible spec.
CMatrix assembled_generator(const ModelSpec& spec);
/// max |P^* W P - I| where W is the energy Gram matrix in physical coordinates.
Real energy_isometry_defect(const ModelSpec& spec);

/// 1/2 ||y||^2; with `verify`, also reconstructs the fields on a 512-point
/// grid and throws NumericalFailure unless the grid energy matches to 1e-6.
Real physical_energy(const ModelSpec& spec, const SpectralSystem& sys, const State& y,
                     bool verify = false);

/// Energy computed on the 512-point midpoint grid from reconstructed fields.
Real grid_energy(const ModelSpec& spec, const State& y);

/// Field values on arbitrary points (sine synthesis).
std::vector<Complex> synthesize(const CMatrix& map, const State& y, const std::vector<Real>& xs,
                                bool derivative = false);

// Initial data helpers (deterministic in the seed).

/// Regular data: |y_m| proportional to (1 + |lambda_m|^2)^{-3/4} with seeded
/// phases, scaled to ||y|| = norm.
State smooth_state(const SpectralSystem& sys, Real norm, std::uint64_t seed);
/// Complex Gaussian direction scaled to ||y|| = norm.
State random_state(const SpectralSystem& sys, Real norm, std::uint64_t seed);
State basis_state(const SpectralSystem& sys, Eigen::Index index, Real norm = 1.0);

}  // namespace bistab::models
