#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oracles.hpp"
#include "stochav/integrator.hpp"
#include "stochav/stats.hpp"

using namespace stochav;

namespace {

NoisePath zero_path(int n_streams, double dt, std::int64_t steps) {
    NoisePath p;
    p.spec = NoiseSpec{0, 0, n_streams, dt};
    p.n_steps = steps;
    p.increments.assign(static_cast<size_t>(steps) * n_streams, 0.0);
    return p;
}

double max_energy_drift(const TrajectoryRecord& rec) {
    double worst = 0;
    const Vec& h0 = rec.energies.front();
    for (const Vec& h : rec.energies)
        for (size_t i = 0; i < h.size(); ++i)
            worst = std::max(worst, std::abs(h[i] - h0[i]) / std::abs(h0[i]));
    return worst;
}

}  // namespace

TEST_CASE("zero noise, zero field, zero drift: constant trajectory") {
    const R4Example ex = build_r4_example();
    const Perturbation none = zero_perturbation(2);
    IntegrateOptions io;
    io.horizon = 1.0;
    io.dt = 1e-2;
    const Vec y0 = {1.0, 0.5, 0.2, 1.2};
    const TrajectoryRecord rec =
        integrate(ex.model, none, 0.0, y0, zero_path(2, 1e-2, 100), io);
    for (const Vec& x : rec.states)
        for (int i = 0; i < 4; ++i) CHECK(x[i] == doctest::Approx(y0[i]).epsilon(1e-14));
}

TEST_CASE("R4 endpoint matches the rotation oracle and gains order under refinement") {
    const R4Example ex = build_r4_example();
    const Perturbation none = zero_perturbation(2);
    const Vec y0 = {2.0, 0.0, 0.0, std::sqrt(2.0)};
    const double T = 1.0;
    const int n_paths = 100;

    for (Scheme scheme : {Scheme::midpoint, Scheme::heun}) {
        Vec err_coarse(n_paths), err_fine(n_paths);
        for (int p = 0; p < n_paths; ++p) {
            const NoisePath fine = NoisePath::generate(NoiseSpec{99, (std::uint64_t)p, 2, 5e-4},
                                                       2000);
            const NoisePath coarse = fine.aggregate(2);
            const Vec exact = exact_rotation_sample(ex.model, y0, T, fine);
            IntegrateOptions io;
            io.horizon = T;
            io.scheme = scheme;
            io.record_stride = 10000;
            io.dt = 1e-3;
            const Vec end_c = integrate(ex.model, none, 0.0, y0, coarse, io).states.back();
            io.dt = 5e-4;
            const Vec end_f = integrate(ex.model, none, 0.0, y0, fine, io).states.back();
            double ec = 0, ef = 0;
            for (int i = 0; i < 4; ++i) {
                ec += (end_c[i] - exact[i]) * (end_c[i] - exact[i]);
                ef += (end_f[i] - exact[i]) * (end_f[i] - exact[i]);
            }
            err_coarse[p] = std::sqrt(ec);
            err_fine[p] = std::sqrt(ef);
        }
        const double mc = moments(err_coarse).mean, mf = moments(err_fine).mean;
        CAPTURE(scheme_name(scheme));
        CHECK(mc < 1e-2);
        CHECK(mc / mf == doctest::Approx(2.0).epsilon(0.25));
    }
}

TEST_CASE("rotation oracle fixed values") {
    const R4Example ex = build_r4_example();
    // one increment worth pi/2 on B, zero on W
    NoisePath p = zero_path(2, 1.0, 1);
    p.increments[0] = M_PI / 2;
    const Vec out = exact_rotation_sample(ex.model, {1.0, 0.0, 0.0, 0.0}, 1.0, p);
    CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(out[2] == doctest::Approx(-1.0));
    // radii invariant under any path
    const NoisePath q = NoisePath::generate(NoiseSpec{4, 9, 2, 1e-2}, 300);
    const Vec y0 = {0.3, -1.1, 0.7, 0.4};
    const Vec r = exact_rotation_sample(ex.model, y0, 3.0, q);
    CHECK(r[0] * r[0] + r[2] * r[2] ==
          doctest::Approx(y0[0] * y0[0] + y0[2] * y0[2]).epsilon(1e-12));
    CHECK(r[1] * r[1] + r[3] * r[3] ==
          doctest::Approx(y0[1] * y0[1] + y0[3] * y0[3]).epsilon(1e-12));
    CHECK(exact_rotation_sample(ex.model, y0, 0.0, q) == y0);
}

TEST_CASE("midpoint conserves the energies; explicit Heun inflates them") {
    const R4Example ex = build_r4_example();
    const Perturbation none = zero_perturbation(2);
    const Vec y0 = {2.0, 0.0, 0.0, std::sqrt(2.0)};
    IntegrateOptions io;
    io.horizon = 10.0;
    io.dt = 1e-3;
    io.record_stride = 100;

    NoiseSpec noise{2024, 3, 2, 1e-3};
    io.scheme = Scheme::midpoint;
    const double drift_mid = max_energy_drift(integrate(ex.model, none, 0.0, y0, noise, io));
    CHECK(drift_mid < 1e-9);

    io.scheme = Scheme::heun;
    const double drift_heun = max_energy_drift(integrate(ex.model, none, 0.0, y0, noise, io));
    // explicit Heun multiplies each plane radius^2 by 1 + dB^4/4 per step,
    // about (3/4) T dt per unit rotation variance: ~3% here
    CHECK(drift_heun > 1e-3);
    CHECK(drift_heun < 1e-1);
}

TEST_CASE("determinism: same seed descriptor gives bit-identical records") {
    const R4Example ex = build_r4_example();
    IntegrateOptions io;
    io.horizon = 2.0;
    io.dt = 1e-3;
    io.record_stride = 50;
    io.exit_radius = 0.5;
    NoiseSpec noise{55, 12, 2, 1e-3};
    const Vec y0 = {2.0, 0.0, 0.0, std::sqrt(2.0)};
    const TrajectoryRecord a = integrate(ex.model, ex.k1, 0.05, y0, noise, io);
    const TrajectoryRecord b = integrate(ex.model, ex.k1, 0.05, y0, noise, io);
    REQUIRE(a.times.size() == b.times.size());
    for (size_t j = 0; j < a.times.size(); ++j) {
        CHECK(a.times[j] == b.times[j]);
        for (int i = 0; i < 4; ++i) CHECK(a.states[j][i] == b.states[j][i]);
    }
    CHECK(a.exit_time == b.exit_time);
}

TEST_CASE("energies recomputable from states; exit consistency") {
    const R4Example ex = build_r4_example();
    IntegrateOptions io;
    io.horizon = 40.0;
    io.dt = 1e-3;
    io.record_stride = 17;
    io.exit_radius = 0.25;
    NoiseSpec noise{7, 3, 2, 1e-3};
    const Vec y0 = {2.0, 0.0, 0.0, std::sqrt(2.0)};
    const TrajectoryRecord rec = integrate(ex.model, ex.k1, 0.2, y0, noise, io);
    const Vec h0 = rec.energies.front();
    REQUIRE(rec.exited);
    for (size_t j = 0; j < rec.times.size(); ++j) {
        const Vec h = ex.model.energies(rec.states[j]);
        for (int i = 0; i < 2; ++i)
            CHECK(h[i] == doctest::Approx(rec.energies[j][i]).epsilon(1e-12));
        // no recorded sample beyond the first crossing
        CHECK(rec.times[j] <= rec.exit_time);
        if (rec.times[j] < rec.exit_time) {
            double d2 = 0;
            for (int i = 0; i < 2; ++i) d2 += (h[i] - h0[i]) * (h[i] - h0[i]);
            CHECK(std::sqrt(d2) < io.exit_radius);
        }
    }
    CHECK(rec.times.back() == rec.exit_time);
}

TEST_CASE("empirical angle distribution is uniform on the torus") {
    // scaled-down version of the invariant-measure check (T=20, 800 paths)
    const R4Example ex = build_r4_example();
    const Perturbation none = zero_perturbation(2);
    const Vec y0 = {2.0, 0.0, 0.0, std::sqrt(2.0)};
    const int n_paths = 800;
    Vec theta1(n_paths), theta2(n_paths);
    IntegrateOptions io;
    io.horizon = 20.0;
    io.dt = 1e-3;
    io.record_stride = 1 << 20;
    for (int p = 0; p < n_paths; ++p) {
        NoiseSpec noise{424242, (std::uint64_t)p, 2, 1e-3};
        const Vec end = integrate(ex.model, none, 0.0, y0, noise, io).states.back();
        const ActionAngle aa = ex.model.to_action_angle(end);
        theta1[p] = aa.angles[0];
        theta2[p] = aa.angles[1];
    }
    const double crit = ks_critical(0.01, n_paths);
    CHECK(ks_uniform_angle(theta1) < crit);
    CHECK(ks_uniform_angle(theta2) < crit);
}

TEST_CASE("coupled trajectories: identity at epsilon 0 and linear deviation scaling") {
    const R4Example ex = build_r4_example();
    const Vec y0 = {2.0, 0.0, 0.0, std::sqrt(2.0)};
    IntegrateOptions io;
    io.horizon = 1.0;
    io.dt = 1e-3;
    io.record_stride = 20;

    NoiseSpec noise{31337, 0, 2, 1e-3};
    const auto [p0, x0] = integrate_coupled(ex.model, ex.k1, 0.0, y0, noise, io);
    for (size_t j = 0; j < p0.times.size(); ++j)
        for (int i = 0; i < 4; ++i)
            CHECK(p0.states[j][i] == doctest::Approx(x0.states[j][i]).epsilon(1e-13));

    const int n_paths = 100;
    auto mean_sup_dev = [&](double eps) {
        Vec sup(n_paths);
        for (int p = 0; p < n_paths; ++p) {
            NoiseSpec ns{31337, (std::uint64_t)p, 2, 1e-3};
            const auto [yp, xp] = integrate_coupled(ex.model, ex.k1, eps, y0, ns, io);
            double worst = 0;
            for (size_t j = 0; j < yp.times.size() && j < xp.times.size(); ++j) {
                double d2 = 0;
                for (int i = 0; i < 2; ++i) {
                    const double d = yp.energies[j][i] - xp.energies[j][i];
                    d2 += d * d;
                }
                worst = std::max(worst, std::sqrt(d2));
            }
            sup[p] = worst;
        }
        return moments(sup).mean;
    };
    const double d1 = mean_sup_dev(0.1), d2 = mean_sup_dev(0.05);
    CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("deviation growth in t is subquadratic for drift-free models") {
    const R4Example ex = build_r4_example();
    const Vec y0 = {2.0, 0.0, 0.0, std::sqrt(2.0)};
    const int n_paths = 100;
    const double eps = 0.02;
    Vec ts = {1.0, 2.0, 4.0}, devs;
    for (double T : ts) {
        IntegrateOptions io;
        io.horizon = T;
        io.dt = 1e-3;
        io.record_stride = 50;
        Vec sup(n_paths);
        for (int p = 0; p < n_paths; ++p) {
            NoiseSpec ns{808, (std::uint64_t)p, 2, 1e-3};
            const auto [yp, xp] = integrate_coupled(ex.model, ex.k1, eps, y0, ns, io);
            double worst = 0;
            for (size_t j = 0; j < yp.times.size() && j < xp.times.size(); ++j) {
                double d2 = 0;
                for (int i = 0; i < 2; ++i) {
                    const double d = yp.energies[j][i] - xp.energies[j][i];
                    d2 += d * d;
                }
                worst = std::max(worst, d2);
            }
            sup[p] = std::sqrt(worst);
        }
        devs.push_back(moments(sup).mean);
    }
    Vec lx, ly;
    for (size_t i = 0; i < ts.size(); ++i) {
        lx.push_back(std::log(ts[i]));
        ly.push_back(std::log(devs[i]));
    }
    CHECK(linear_fit(lx, ly).slope < 1.75);
    CHECK(devs[0] < devs[1]);
    CHECK(devs[1] < devs[2]);
}

TEST_CASE("action increments along the perturbed flow track eps * K_I") {
    const R4Example ex = build_r4_example();
    const Vec y0 = {2.0, 0.0, 0.0, std::sqrt(2.0)};
    const double eps = 0.05, dt = 1e-3, T = 1.0;
    IntegrateOptions io;
    io.horizon = T;
    io.dt = dt;
    io.record_stride = 1;
    NoiseSpec noise{123, 4, 2, dt};
    const TrajectoryRecord rec = integrate(ex.model, ex.k1, eps, y0, noise, io);
    const ActionAngle aa0 = ex.model.to_action_angle(rec.states.front());
    Vec acc = aa0.actions;
    for (size_t j = 0; j + 1 < rec.times.size(); ++j) {
        // trapezoid of eps * K_I between consecutive recorded steps
        for (size_t s : {j, j + 1}) {
            const Vec k = ex.k1.field(rec.states[s]);
            const Mat J = ex.model.chart_jacobian(rec.states[s]);
            for (int d = 0; d < 2; ++d) {
                double kid = 0;
                for (int c = 0; c < 4; ++c) kid += J(d, c) * k[c];
                acc[d] += 0.5 * eps * dt * kid;
            }
        }
    }
    const ActionAngle aaT = ex.model.to_action_angle(rec.states.back());
    for (int d = 0; d < 2; ++d)
        CHECK(aaT.actions[d] == doctest::Approx(acc[d]).epsilon(2e-4));
}

TEST_CASE("unperturbed runs conserve the energies of every shipped model") {
    std::vector<IntegrableModel> models;
    models.push_back(make_model("harmonic", {1.0, 2.0}));
    models.push_back(make_model("1dof"));
    for (const auto& m : models) {
        const Perturbation none = zero_perturbation(m.n);
        ActionAngle aa;
        aa.actions.assign(m.n, 1.0);
        aa.angles.assign(m.n, 0.4);
        const Vec y0 = m.from_action_angle(aa);
        IntegrateOptions io;
        io.horizon = 5.0;
        io.dt = 1e-3;
        io.record_stride = 100;
        NoiseSpec noise{999, 1, m.n, 1e-3};
        CHECK(max_energy_drift(integrate(m, none, 0.0, y0, noise, io)) < 1e-9);
    }
}

TEST_CASE("rotation oracle rejects other models") {
    const IntegrableModel m = make_model("1dof");
    const NoisePath p = NoisePath::generate(NoiseSpec{1, 0, 1, 1e-3}, 10);
    CHECK_THROWS_AS(exact_rotation_sample(m, {1.0, 0.0}, 0.01, p), Error);
}

TEST_CASE("domain and validation errors") {
    const R4Example ex = build_r4_example();
    IntegrateOptions io;
    io.horizon = 1.0;
    io.dt = 1e-3;
    NoiseSpec noise{1, 0, 2, 1e-3};
    // y0 on the K1 singular set
    CHECK_THROWS_AS(integrate(ex.model, ex.k1, 0.1, {1.0, 0.0, 1.0, 0.0}, noise, io), Error);
    io.dt = 3e-4;  // horizon not a multiple
    noise.dt = 3e-4;
    CHECK_THROWS_AS(integrate(ex.model, ex.k1, 0.1, {2.0, 0.0, 0.0, 1.0}, noise, io), Error);
    io.dt = 1e-3;
    noise.dt = 1e-3;
    noise.n_streams = 1;
    CHECK_THROWS_AS(integrate(ex.model, ex.k1, 0.1, {2.0, 0.0, 0.0, 1.0}, noise, io), Error);
}
