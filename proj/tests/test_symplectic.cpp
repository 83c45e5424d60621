#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oracles.hpp"
#include "stochav/model.hpp"
#include "stochav/symplectic.hpp"

using namespace stochav;

namespace {

ScalarFunction circle_h() {
    return ScalarFunction(1, [](const Vec& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); });
}

}  // namespace

TEST_CASE("symplectic gradient of the circle Hamiltonian") {
    // H = (q^2+p^2)/2 at (1,0): X_H = (dH/dp, -dH/dq) = (0,-1)
    const Vec g = symplectic_gradient(circle_h(), {1.0, 0.0});
    CHECK(std::abs(g[0]) < 1e-10);
    CHECK(g[1] == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("symplectic gradient matches the W-driven components of the R4 system") {
    // G2 = (x2^2 + x4^2)/2 with coordinates (x1,x2,x3,x4) = (q1,q2,p1,p2)
    ScalarFunction g2(2, [](const Vec& x) { return 0.5 * (x[1] * x[1] + x[3] * x[3]); });
    const Vec v = symplectic_gradient(g2, {0.0, 1.0, 0.0, 2.0});
    CHECK(v[0] == doctest::Approx(0.0));
    CHECK(v[1] == doctest::Approx(2.0));   // dx2 = ... + x4 dW
    CHECK(v[2] == doctest::Approx(0.0));
    CHECK(v[3] == doctest::Approx(-1.0));  // dx4 = ... - x2 dW
}

TEST_CASE("symplectic gradient against the differentiation oracle") {
    // H = (a^2 q^2 + p^2)/2, a = 2 at (1,1): X_H = (1, -4)
    const double a = 2.0;
    auto f = [a](const Vec& x) { return 0.5 * (a * a * x[0] * x[0] + x[1] * x[1]); };
    ScalarFunction H(1, f);
    const Vec got = symplectic_gradient(H, {1.0, 1.0});
    const Vec grad = oracle::gradient(f, {1.0, 1.0});
    CHECK(got[0] == doctest::Approx(grad[1]).epsilon(1e-8));
    CHECK(got[1] == doctest::Approx(-grad[0]).epsilon(1e-8));
    CHECK(got[0] == doctest::Approx(1.0));
    CHECK(got[1] == doctest::Approx(-4.0));
}

TEST_CASE("poisson bracket of the canonical pair") {
    const int n = 2;
    ScalarFunction p1(n, [n](const Vec& x) { return x[n]; });
    ScalarFunction q1(n, [](const Vec& x) { return x[0]; });
    oracle::Rng rng(11);
    for (int i = 0; i < 10; ++i) {
        const Vec x = rng.point(2 * n, -3, 3);
        CHECK(poisson_bracket(p1, q1, x) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("oscillator family is in involution") {
    const Vec a = {1.0, 2.0, 0.7};
    const IntegrableModel m = build_harmonic_family(a);
    oracle::Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec x = rng.point(6, -2, 2);
        for (size_t i = 0; i < m.hamiltonians.size(); ++i)
            for (size_t j = 0; j < m.hamiltonians.size(); ++j) {
                const double pb = poisson_bracket(m.hamiltonians[i], m.hamiltonians[j], x);
                CHECK(std::abs(pb) < 1e-10);
            }
    }
}

TEST_CASE("G1, G2 of the R4 example commute at 100 random points") {
    const R4Example ex = build_r4_example();
    oracle::Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec x = rng.point(4, -2, 2);
        CHECK(std::abs(poisson_bracket(ex.model.hamiltonians[0], ex.model.hamiltonians[1], x)) <
              1e-10);
    }
}

TEST_CASE("bracket antisymmetry") {
    ScalarFunction F(2, [](const Vec& x) { return x[0] * x[3] + std::sin(x[1]); });
    ScalarFunction G(2, [](const Vec& x) { return x[2] * x[2] - std::cos(x[0] * x[3]); });
    oracle::Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec x = rng.point(4, -2, 2);
        CHECK(poisson_bracket(F, G, x) + poisson_bracket(G, F, x) ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("omega pairing with X_H itself vanishes") {
    ScalarFunction H(2, [](const Vec& x) {
        return 0.5 * (x[0] * x[0] + 2 * x[1] * x[1] + x[2] * x[2] + 0.3 * x[3] * x[3]) +
               0.1 * x[0] * x[3];
    });
    const SmoothField xh = hamiltonian_field(H);
    oracle::Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec x = rng.point(4, -2, 2);
        CHECK(std::abs(omega_pairing(H, xh, x)) < 1e-12);
    }
}

TEST_CASE("omega pairing of G2 with K1") {
    const R4Example ex = build_r4_example();
    const ScalarFunction& g2 = ex.model.hamiltonians[1];
    // dG2(K1) = x2^2/(x2^2+x4^2)
    CHECK(omega_pairing(g2, ex.k1.field, {0.0, 1.0, 0.0, 0.0}) == doctest::Approx(1.0));
    CHECK(omega_pairing(g2, ex.k1.field, {0.0, 0.0, 0.0, 1.0}) ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pairing equals the bracket with the generating Hamiltonian") {
    // with {F,G} = sum dF/dp dG/dq - dF/dq dG/dp, dH(X_k) = {k,H}
    ScalarFunction H(1, [](const Vec& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); });
    ScalarFunction k(1, [](const Vec& x) { return x[0] * x[0] * x[1]; });
    const SmoothField xk = hamiltonian_field(k);
    oracle::Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec x = rng.point(2, -2, 2);
        CHECK(omega_pairing(H, xk, x) ==
              doctest::Approx(poisson_bracket(k, H, x)).epsilon(1e-9));
    }
}

TEST_CASE("derivative consistency: closed form vs central differences") {
    const double a = 1.7;
    ScalarFunction H(
        1, [a](const Vec& x) { return 0.5 * (a * a * x[0] * x[0] + x[1] * x[1]); },
        [a](const Vec& x) { return Vec{a * a * x[0], x[1]}; });
    oracle::Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec x = rng.point(2, 0.5, 2.5);
        const Vec g1 = H.gradient(x);
        const Vec g2 = H.fd_gradient(x);
        const double h = fd_step(x);
        for (int i = 0; i < 2; ++i)
            CHECK(std::abs(g1[i] - g2[i]) < 50.0 * h * h + 1e-10);
    }
}

TEST_CASE("non-finite evaluation raises") {
    ScalarFunction bad(1, [](const Vec& x) { return 1.0 / (x[0] - x[0]); });
    CHECK_THROWS_AS(bad({1.0, 0.0}), Error);
    CHECK_THROWS_AS(check_phase_point({1.0, std::nan("")}, 1), Error);
    CHECK_THROWS_AS(check_phase_point({1.0, 2.0, 3.0}, 1), Error);
}
