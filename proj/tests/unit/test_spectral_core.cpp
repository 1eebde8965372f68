#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "bistab/spectral_core.hpp"

using namespace bistab;

namespace {

SpectralSystem oracle_2d() {
    return SpectralSystem({Complex(0, 1), Complex(0, -1)}, CMatrix::Identity(2, 2), {}, 0.5, "oracle");
}

// Random Hermitian PSD matrix G G^* of rank `rank`.
CMatrix random_psd(int n, int rank, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMatrix m(n, rank);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < rank; ++j) m(i, j) = Complex(g(rng), g(rng));
    return m * m.adjoint();
}

SpectralSystem random_system(int n, Real theta, std::mt19937_64& rng) {
    std::vector<Complex> lambda;
    for (int j = 1; j <= n; ++j) lambda.emplace_back(0.0, (j % 2 ? 1.0 : -1.0) * j);
    return SpectralSystem(lambda, random_psd(n, n / 2, rng), {}, theta, "random");
}

State random_state(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    State y(n);
    for (int i = 0; i < n; ++i) y(i) = Complex(g(rng), g(rng));
    return y;
}

}  // namespace

TEST_CASE("construction rejects broken invariants") {
    const CMatrix id = CMatrix::Identity(2, 2);
    const std::vector<Complex> lam{Complex(0, 1), Complex(0, -1)};
    CHECK_THROWS_AS(SpectralSystem({}, CMatrix(0, 0), {}, 0.5, ""), InvalidArgument);
    CHECK_THROWS_AS(SpectralSystem(lam, CMatrix::Identity(3, 3), {}, 0.5, ""), InvalidArgument);
    CHECK_THROWS_AS(SpectralSystem({Complex(0.1, 1), Complex(0, -1)}, id, {}, 0.5, ""), InvalidArgument);
    CHECK_THROWS_AS(SpectralSystem(lam, id, {}, 0.0, ""), InvalidArgument);
    CHECK_THROWS_AS(SpectralSystem(lam, id, {}, 1.0, ""), InvalidArgument);
    CHECK_THROWS_AS(SpectralSystem(lam, id, {0.5, 2.0}, 0.5, ""), InvalidArgument);
    CHECK_THROWS_AS(SpectralSystem(lam, id, {2.0}, 0.5, ""), InvalidArgument);

    CMatrix skew = id;
    skew(0, 1) = Complex(0.3, 0.0);
    CHECK_THROWS_AS(SpectralSystem(lam, skew, {}, 0.5, ""), InvalidArgument);
    CMatrix indefinite = id;
    indefinite(1, 1) = -0.5;
    CHECK_THROWS_AS(SpectralSystem(lam, indefinite, {}, 0.5, ""), InvalidArgument);
    CMatrix nan = id;
    nan(0, 0) = std::nan("");
    CHECK_THROWS_AS(SpectralSystem(lam, nan, {}, 0.5, ""), InvalidArgument);
}

TEST_CASE("default K weights are the graph-norm weights") {
    const SpectralSystem sys({Complex(0, 3), Complex(-1, 2)}, CMatrix::Identity(2, 2), {}, 0.5, "");
    CHECK(sys.k_weights()(0) == doctest::Approx(10.0));
    CHECK(sys.k_weights()(1) == doctest::Approx(6.0));
    // l = k^{-(1-theta)/theta} = 1/k for theta = 1/2
    CHECK(sys.l_weights()(0) == doctest::Approx(0.1));
    CHECK(sys.spectral_radius() == doctest::Approx(3.0));
    CHECK_FALSE(sys.conservative());
    CHECK(oracle_2d().conservative());
}

TEST_CASE("norms on a single mode") {
    const auto sys = oracle_2d();
    State y = State::Zero(2);
    y(0) = Complex(0.0, 3.0);
    CHECK(norm_h(sys, y) == doctest::Approx(3.0));
    CHECK(norm_k(sys, y) == doctest::Approx(3.0 * std::sqrt(2.0)));
    CHECK(norm_l(sys, y) == doctest::Approx(3.0 / std::sqrt(2.0)));
    CHECK_THROWS_AS(norm_h(sys, State::Zero(3)), InvalidArgument);
}

TEST_CASE("interpolation inequality on random states, equality on modes") {
    std::mt19937_64 rng(11);
    for (const Real theta : {0.25, 0.5, 0.8}) {
        const auto sys = random_system(12, theta, rng);
        for (int s = 0; s < 10000; ++s) {
            const auto c = check_interpolation(sys, random_state(12, rng));
            REQUIRE(c.holds);
        }
        for (Eigen::Index j = 0; j < sys.dim(); ++j) {
            State e = State::Zero(sys.dim());
            e(j) = Complex(0.6, -0.8) * 2.5;
            const auto c = check_interpolation(sys, e);
            CHECK(std::abs(c.lhs - c.rhs) <= 1e-12 * c.lhs);
        }
    }
    CHECK_THROWS_AS(check_interpolation(oracle_2d(), State::Zero(2)), InvalidArgument);
}

TEST_CASE("operator norm of B matches the Hermitian eigensolver") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto sys = random_system(16, 0.5, rng);
        const Eigen::SelfAdjointEigenSolver<CMatrix> es(sys.b_matrix());
        const Real expected = es.eigenvalues().cwiseAbs().maxCoeff();
        CHECK(std::abs(op_norm_b(sys) - expected) <= 1e-10 * expected);
    }
    const SpectralSystem zero({Complex(0, 1)}, CMatrix::Zero(1, 1), {}, 0.5, "");
    CHECK(op_norm_b(zero) == 0.0);
}

TEST_CASE("quadratic form: dense and range-factorized agree") {
    std::mt19937_64 rng(5);
    const auto sys = random_system(10, 0.5, rng);
    CHECK(sys.b_spectrum().size() <= 5);
    for (int s = 0; s < 50; ++s) {
        const State y = random_state(10, rng);
        const Real dense = quad_form_b(sys, y);
        CHECK(dense >= 0.0);
        CHECK(quad_form_b_fast(sys, y) == doctest::Approx(dense).epsilon(1e-12));
    }
    CHECK(quad_form_b(oracle_2d(), State::Ones(2)) == doctest::Approx(2.0));
}

TEST_CASE("H functions") {
    const auto c = HFunction::constant();
    CHECK(c(0.3) == 1.0);
    CHECK(c.k_function(0.3) == doctest::Approx(0.3));
    CHECK_THROWS_AS((void)c(0.0), InvalidArgument);
    CHECK_THROWS_AS((void)c.inverse(0.5), InvalidArgument);

    const auto p = HFunction::power(0.5);
    CHECK(p(0.25) == doctest::Approx(0.5));
    CHECK(p.inverse(0.5) == doctest::Approx(0.25).epsilon(1e-11));
    CHECK_THROWS_AS(HFunction::power(-1.0), InvalidArgument);

    const auto h = HFunction::log_exponential(2.0);
    CHECK(h(4.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(h.normalized_rate_admissible());
    // H^2(x)/x increasing on (0,1) exactly when c_T >= 1
    CHECK_NOTHROW(HFunction::log_exponential(1.0));
    CHECK_THROWS_AS(HFunction::log_exponential(0.5), InvalidArgument);
    // H = 1 gives 1/x: decreasing
    CHECK_FALSE(c.normalized_rate_admissible());
}

TEST_CASE("K inverse round trip on a log grid") {
    for (const auto& h : {HFunction::constant(), HFunction::power(0.7), HFunction::log_exponential(1.0),
                          HFunction::log_exponential(3.0)}) {
        for (int i = 0; i <= 40; ++i) {
            const Real v = std::pow(10.0, -8.0 + 8.0 * i / 40.0);
            const Real x = h.k_inverse(v);
            CHECK(std::abs(h.k_function(x) - v) <= 1e-10 * v);
        }
    }
}

TEST_CASE("H descriptors round trip") {
    for (const auto& h : {HFunction::constant(), HFunction::power(0.3), HFunction::log_exponential(1.75)}) {
        const auto back = HFunction::from_descriptor(h.descriptor());
        CHECK(back.kind() == h.kind());
        CHECK(back.parameter() == h.parameter());
    }
    CHECK_THROWS_AS(HFunction::from_descriptor("cubic:2"), InvalidArgument);
    CHECK_THROWS_AS(HFunction::from_descriptor("power:x"), InvalidArgument);
}

TEST_CASE("JSON snapshots round trip") {
    std::mt19937_64 rng(9);
    const auto sys = random_system(6, 0.4, rng);
    const auto back = system_from_json(nlohmann::json::parse(to_json(sys).dump()));
    CHECK(back.dim() == sys.dim());
    CHECK(back.theta() == sys.theta());
    CHECK(back.label() == sys.label());
    CHECK((back.b_matrix() - sys.b_matrix()).norm() == 0.0);
    CHECK((back.k_weights() - sys.k_weights()).norm() == 0.0);

    const State y = random_state(6, rng);
    CHECK((state_from_json(nlohmann::json::parse(state_to_json(y).dump())) - y).norm() == 0.0);
}
