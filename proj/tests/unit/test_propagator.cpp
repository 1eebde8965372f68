#include <doctest.h>

#include <cmath>
#include <random>

#include "bistab/propagator.hpp"

using namespace bistab;

namespace {

SpectralSystem oracle_2d() {
    return SpectralSystem({Complex(0, 1), Complex(0, -1)}, CMatrix::Identity(2, 2), {}, 0.5, "oracle");
}

State unit_state() {
    State y(2);
    y << Complex(0.6, 0.0), Complex(0.0, 0.8);
    return y;
}

// Hermitian PSD B on a spectrum with distinct frequencies.
SpectralSystem mixed_system(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const int n = 8;
    CMatrix m(n, 3);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = Complex(g(rng), g(rng));
    std::vector<Complex> lambda;
    for (int j = 1; j <= n; ++j) lambda.emplace_back(0.0, 0.7 * j * (j % 2 ? 1 : -1));
    return SpectralSystem(lambda, m * m.adjoint() / 4.0, {}, 0.5, "mixed");
}

State random_state(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    State y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = Complex(g(rng), g(rng));
    return y / y.norm();
}

}  // namespace

TEST_CASE("feedback law validation") {
    CHECK_NOTHROW(FeedbackLaw::quadratic().validate());
    CHECK_NOTHROW(FeedbackLaw{1.5, 1e-3, false}.validate());
    CHECK_THROWS_AS((FeedbackLaw{2.5, std::nullopt, false}.validate()), InvalidArgument);
    CHECK_THROWS_AS((FeedbackLaw{0.0, 0.0, false}.validate()), InvalidArgument);
    const auto law = FeedbackLaw::normalized().resolved_for(unit_state() * 4.0);
    CHECK(law.epsilon() == doctest::Approx(4e-14));
}

TEST_CASE("linear flow is the exact modal propagator") {
    const SpectralSystem sys({Complex(-0.5, 2.0), Complex(0.0, -1.0)}, CMatrix::Identity(2, 2), {}, 0.5, "");
    const State y = unit_state();
    const State w = linear_flow(sys, y, 0.7);
    CHECK(std::abs(w(0) - y(0) * std::exp(Complex(-0.5, 2.0) * 0.7)) < 1e-15);
    CHECK(std::abs(w(1) - y(1) * std::exp(Complex(0.0, -0.7))) < 1e-15);
    CHECK_THROWS_AS(linear_flow(sys, y, -1.0), InvalidArgument);
}

TEST_CASE("control values") {
    const auto sys = oracle_2d();
    const State y = unit_state() * 2.0;
    CHECK(control_value(sys, FeedbackLaw::quadratic(), y) == doctest::Approx(-4.0));
    CHECK(control_value(sys, FeedbackLaw::normalized(), y) == doctest::Approx(-1.0));
    CHECK(control_value(sys, FeedbackLaw::off(), y) == 0.0);
    // below the threshold the indicator switches the control off
    CHECK(control_value(sys, FeedbackLaw{2.0, 10.0, false}, y) == 0.0);
}

TEST_CASE("scalar oracles: s' = -2 s^2 and s' = -2 s") {
    const auto sys = oracle_2d();
    const State y0 = unit_state();
    const auto p0 = simulate(sys, FeedbackLaw::quadratic(), y0, 1e-3, 20.0);
    const auto p2 = simulate(sys, FeedbackLaw::normalized(), y0, 1e-3, 10.0);
    Real e0 = 0.0, e2 = 0.0;
    for (std::size_t n = 0; n < p0.size(); ++n) {
        const Real s = 2.0 * p0.energies[n];
        e0 = std::max(e0, std::abs(s - 1.0 / (1.0 + 2.0 * p0.times[n])) * (1.0 + 2.0 * p0.times[n]));
    }
    for (std::size_t n = 0; n < p2.size(); ++n) {
        const Real s = 2.0 * p2.energies[n];
        e2 = std::max(e2, std::abs(s * std::exp(2.0 * p2.times[n]) - 1.0));
    }
    CHECK(e0 < 1e-6);
    CHECK(e2 < 1e-6);
}

TEST_CASE("second order: halving dt quarters the oracle error") {
    const auto sys = oracle_2d();
    auto err = [&](Real dt) {
        const auto tr = simulate(sys, FeedbackLaw::normalized(), unit_state(), dt, 2.0);
        return std::abs(2.0 * tr.energies.back() * std::exp(4.0) - 1.0);
    };
    const Real ratio = err(2e-2) / err(1e-2);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("energy is nonincreasing and conserved without control") {
    const auto sys = mixed_system(1);
    const State y0 = random_state(sys.dim(), 2);
    for (const Real r : {0.0, 1.0, 2.0}) {
        const auto tr = simulate(sys, FeedbackLaw{r, std::nullopt, false}, y0, 0.05, 20.0);
        for (std::size_t n = 1; n < tr.size(); ++n) REQUIRE(tr.energies[n] <= tr.energies[n - 1] * (1 + 1e-14));
        CHECK(tr.energies.back() < tr.energies.front());
    }
    SimulationOptions o;
    o.dt = 1e-3;
    o.t_final = 10.0;
    const auto off = simulate(sys, FeedbackLaw::off(), y0, o);
    Real drift = 0.0;
    for (const Real e : off.energies) drift = std::max(drift, std::abs(e - off.energies.front()));
    CHECK(drift < 1e-12 * off.energies.front());
    CHECK(off.controls.back() == 0.0);

    // a single frequency gives no averaging over modes: rounding bias in the
    // phase factor would show up linearly in the number of steps
    for (const Real dt : {1e-3, 0.02, 0.1}) {
        const auto one = simulate(oracle_2d(), FeedbackLaw::off(), unit_state(), dt, dt * 20000, 1 << 20);
        Real worst = 0.0;
        for (const Real e : one.energies) worst = std::max(worst, std::abs(e - one.energies.front()));
        CHECK(worst < 1e-12 * one.energies.front());
    }
}

TEST_CASE("dissipation residual is small and accumulates at second order") {
    const auto sys = mixed_system(4);
    const State y0 = random_state(sys.dim(), 5);
    const auto law = FeedbackLaw::quadratic();
    // ||B|| and |lambda| of several units make this system stiffer than the oracle
    const auto a = simulate(sys, law, y0, 1e-3, 5.0);
    const auto b = simulate(sys, law, y0, 5e-4, 5.0);
    CHECK(dissipation_residual(sys, law, b) < 1e-6);
    const Real ratio = dissipation_residual_accumulated(sys, law, a) / dissipation_residual_accumulated(sys, law, b);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
    // per-step residual is a local error: third order
    CHECK(dissipation_residual(sys, law, a) / dissipation_residual(sys, law, b) == doctest::Approx(8.0).epsilon(0.1));
}

TEST_CASE("trajectory bookkeeping") {
    const auto sys = oracle_2d();
    const auto tr = simulate(sys, FeedbackLaw::quadratic(), unit_state(), 0.3, 1.0, 2);
    // dt is adjusted so that the horizon is hit exactly
    CHECK(tr.size() == 5);
    CHECK(tr.t_final() == doctest::Approx(1.0));
    CHECK(tr.state_steps == std::vector<std::size_t>{0, 2, 4});
    CHECK(tr.energy_at(0.125) == doctest::Approx(0.5 * (tr.energies[0] + tr.energies[1])));
    CHECK(tr.k_growth() == doctest::Approx(1.0));

    const std::string csv = trajectory_csv(tr);
    CHECK(csv.rfind("t,energy,control,norm_h,norm_k\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

    CHECK_THROWS_AS(simulate(sys, FeedbackLaw::quadratic(), unit_state(), 0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(simulate(sys, FeedbackLaw::quadratic(), unit_state(), 0.1, -1.0), InvalidArgument);
    CHECK_THROWS_AS(simulate(sys, FeedbackLaw::quadratic(), State::Zero(3), 0.1, 1.0), InvalidArgument);
}

TEST_CASE("early stop below an energy floor") {
    const auto sys = oracle_2d();
    SimulationOptions o;
    o.dt = 1e-2;
    o.t_final = 100.0;
    o.stride = 7;
    o.stop_energy_ratio = 1e-6;
    const auto tr = simulate(sys, FeedbackLaw::normalized(), unit_state(), o);
    CHECK(tr.energies.back() < 1e-6 * tr.energies.front());
    CHECK(tr.energies[tr.size() - 2] >= 1e-6 * tr.energies.front());
    CHECK(tr.state_steps.back() == tr.size() - 1);
    // ln(1e6) / 2
    CHECK(tr.t_final() == doctest::Approx(6.9078).epsilon(1e-3));
}

TEST_CASE("zero state stays at rest") {
    const auto sys = oracle_2d();
    const auto tr = simulate(sys, FeedbackLaw::normalized(), State::Zero(2), 0.1, 1.0);
    CHECK(tr.energies.back() == 0.0);
    CHECK(tr.controls.back() == 0.0);
}
