#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oracles.hpp"
#include "stochav/model.hpp"
#include "stochav/poisson.hpp"

using namespace stochav;

namespace {

GeneratorSpec one_dof_gen(double omega = 1.0, double drift = 0.0) {
    GeneratorSpec g;
    g.freq = Mat(1, 1);
    g.freq(0, 0) = omega;
    g.drift_freq = {drift};
    return g;
}

GeneratorSpec r4_gen() {
    GeneratorSpec g;
    g.freq = Mat(2, 2);
    g.freq(0, 0) = 1;
    g.freq(0, 1) = 1;
    g.freq(1, 0) = 0;
    g.freq(1, 1) = 1;
    g.drift_freq = {0.0, 0.0};
    return g;
}

// random centered band-limited function from low modes
TorusFunction random_band_limited(const TorusGrid& grid, std::uint64_t seed, int kmax = 5) {
    oracle::Rng rng(seed);
    TorusFunction f;
    f.grid = grid;
    f.values.assign(grid.size(), 0.0);
    for (int q = 0; q < 4; ++q) {
        std::vector<int> m(grid.n);
        bool nonzero = false;
        for (int d = 0; d < grid.n; ++d) {
            m[d] = static_cast<int>(rng.uniform(-kmax, kmax + 1));
            if (m[d] != 0) nonzero = true;
        }
        if (!nonzero) m[0] = 1;
        const double cr = rng.uniform(-1, 1), ci = rng.uniform(-1, 1);
        grid.for_each([&](std::int64_t flat, const Vec& theta) {
            double phase = 0;
            for (int d = 0; d < grid.n; ++d) phase += m[d] * theta[d];
            f.values[flat] += cr * std::cos(phase) + ci * std::sin(phase);
        });
    }
    return f;
}

double max_diff(const TorusFunction& a, const TorusFunction& b) {
    double d = 0;
    for (size_t i = 0; i < a.values.size(); ++i)
        d = std::max(d, std::abs(a.values[i] - b.values[i]));
    return d;
}

}  // namespace

TEST_CASE("fft matches the reference DFT") {
    std::vector<Cplx> data(16);
    oracle::Rng rng(3);
    for (auto& v : data) v = Cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const auto want = oracle::dft(data, false);
    auto got = data;
    fft_inplace(got.data(), 16, false);
    for (int i = 0; i < 16; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
    fft_inplace(got.data(), 16, true);
    for (int i = 0; i < 16; ++i) CHECK(std::abs(got[i] / 16.0 - data[i]) < 1e-12);
    CHECK_THROWS_AS(fft_inplace(got.data(), 12, false), Error);
}

TEST_CASE("fft_nd roundtrip on T^2") {
    const std::vector<int> dims = {8, 16};
    std::vector<Cplx> data(8 * 16);
    oracle::Rng rng(5);
    for (auto& v : data) v = Cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    auto work = data;
    fft_nd(work, dims, false);
    fft_nd(work, dims, true);
    for (size_t i = 0; i < data.size(); ++i) CHECK(std::abs(work[i] - data[i]) < 1e-12);
}

TEST_CASE("analytic solve: half Laplacian of -2 cos is cos") {
    const TorusGrid grid(1, 64);
    const TorusFunction f =
        TorusFunction::sample(grid, [](const Vec& th) { return std::cos(th[0]); });
    const PoissonResult r = solve_poisson(f, one_dof_gen());
    grid.for_each([&](std::int64_t flat, const Vec& th) {
        CHECK(r.h.values[flat].real() == doctest::Approx(-2.0 * std::cos(th[0])).epsilon(1e-12));
        CHECK(std::abs(r.h.values[flat].imag()) < 1e-13);
    });
}

TEST_CASE("1-dof fiber data: solving against -p gives 2p") {
    const OneDofCase c = build_1dof_case();
    const TorusGrid grid(1, 64);
    for (double I : {0.5, 1.0, 1.7}) {
        const double amp = std::sqrt(2.0 * I);
        const TorusFunction f = TorusFunction::sample(
            grid, [amp](const Vec& th) { return -amp * std::sin(th[0]); });
        const GeneratorSpec gen{c.model.freq_matrix({I}), c.model.drift_freq({I})};
        const PoissonResult r = solve_poisson(f, gen);
        grid.for_each([&](std::int64_t flat, const Vec& th) {
            CHECK(r.h.values[flat].real() ==
                  doctest::Approx(2.0 * amp * std::sin(th[0])).epsilon(1e-12));
        });
    }
}

TEST_CASE("roundtrip L0(L0^{-1} f) = f for random band-limited centered f") {
    for (int trial = 0; trial < 20; ++trial) {
        const TorusGrid g1(1, 64);
        TorusFunction f = random_band_limited(g1, 100 + trial);
        PoissonResult r = solve_poisson(f, one_dof_gen());
        CHECK(max_diff(apply_generator(r.h, one_dof_gen()), f) < 1e-8);

        const TorusGrid g2(2, 32);
        TorusFunction f2 = random_band_limited(g2, 300 + trial, 4);
        PoissonResult r2 = solve_poisson(f2, r4_gen());
        CHECK(max_diff(apply_generator(r2.h, r4_gen()), f2) < 1e-8);
    }
}

TEST_CASE("roundtrip with a drift frequency (complex eigenvalues)") {
    const GeneratorSpec gen = one_dof_gen(1.0, 0.7);
    const TorusGrid grid(1, 64);
    for (int trial = 0; trial < 5; ++trial) {
        TorusFunction f = random_band_limited(grid, 40 + trial);
        const PoissonResult r = solve_poisson(f, gen);
        CHECK(max_diff(apply_generator(r.h, gen), f) < 1e-8);
        CHECK(r.h.is_real());
    }
}

TEST_CASE("solver is linear and returns centered output") {
    const TorusGrid grid(1, 64);
    const TorusFunction f = random_band_limited(grid, 7);
    const TorusFunction g = random_band_limited(grid, 8);
    const double al = 1.3, ga = -0.4;
    TorusFunction combo;
    combo.grid = grid;
    combo.values.resize(grid.size());
    for (std::int64_t i = 0; i < grid.size(); ++i)
        combo.values[i] = al * f.values[i] + ga * g.values[i];
    const PoissonResult rf = solve_poisson(f, one_dof_gen());
    const PoissonResult rg = solve_poisson(g, one_dof_gen());
    const PoissonResult rc = solve_poisson(combo, one_dof_gen());
    for (std::int64_t i = 0; i < grid.size(); ++i)
        CHECK(std::abs(rc.h.values[i] - al * rf.h.values[i] - ga * rg.h.values[i]) < 1e-12);
    CHECK(std::abs(rc.h.mean()) < 1e-12);
    CHECK(std::abs(rf.h.mean()) < 1e-12);
}

TEST_CASE("gauge offset shifts the mean only") {
    const TorusGrid grid(1, 64);
    const TorusFunction f = random_band_limited(grid, 17);
    PoissonOptions opts;
    opts.gauge_offset = 0.37;
    const PoissonResult base = solve_poisson(f, one_dof_gen());
    const PoissonResult off = solve_poisson(f, one_dof_gen(), opts);
    for (std::int64_t i = 0; i < grid.size(); ++i)
        CHECK(std::abs(off.h.values[i] - base.h.values[i] - 0.37) < 1e-12);
}

TEST_CASE("rejects non-centered input and singular frequency data") {
    const TorusGrid grid(1, 64);
    const TorusFunction bad =
        TorusFunction::sample(grid, [](const Vec& th) { return 1.0 + std::cos(th[0]); });
    CHECK_THROWS_AS(solve_poisson(bad, one_dof_gen()), Error);

    GeneratorSpec singular;
    singular.freq = Mat(2, 2);
    singular.freq(0, 0) = 1;
    singular.freq(0, 1) = 1;
    singular.freq(1, 0) = 1;
    singular.freq(1, 1) = 1;
    singular.drift_freq = {0.0, 0.0};
    CHECK(!singular.elliptic());
    const TorusGrid g2(2, 16);
    const TorusFunction f2 =
        TorusFunction::sample(g2, [](const Vec& th) { return std::cos(th[0]); });
    CHECK_THROWS_AS(solve_poisson(f2, singular), Error);
}

TEST_CASE("band-limit diagnostic flags broadband input") {
    const TorusGrid grid(1, 64);
    // sawtooth: Fourier tail decays like 1/m (centered on the grid)
    TorusFunction saw = TorusFunction::sample(
        grid, [](const Vec& th) { return th[0] - M_PI; });
    const Cplx mean = saw.mean();
    for (auto& v : saw.values) v -= mean;
    const PoissonResult r = solve_poisson(saw, one_dof_gen());
    CHECK(!r.band_limited);
    const TorusFunction smooth =
        TorusFunction::sample(grid, [](const Vec& th) { return std::sin(2 * th[0]); });
    CHECK(solve_poisson(smooth, one_dof_gen()).band_limited);
}

TEST_CASE("eigenvalues on the modes match the quadratic form") {
    const GeneratorSpec gen = r4_gen();
    // lambda(m) = -((m1+m2)^2 + m2^2)/2 + i m.w0
    for (int m1 : {-3, 0, 2})
        for (int m2 : {-1, 0, 4}) {
            const Cplx lam = gen.eigenvalue({m1, m2});
            CHECK(lam.real() ==
                  doctest::Approx(-0.5 * ((m1 + m2) * (m1 + m2) + m2 * m2)));
            CHECK(lam.imag() == 0.0);
        }
}
