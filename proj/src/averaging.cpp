#include "stochav/averaging.hpp"

#include <algorithm>

#include "stochav/parallel.hpp"

namespace stochav {

double torus_average(const std::function<double(const Vec&)>& g,
                     const IntegrableModel& model, const Vec& actions,
                     const TorusGrid& grid) {
    if (grid.n != model.n)
        throw Error(ErrorClass::validation, "torus_average: grid dimension mismatch");
    double sum = 0;
    ActionAngle aa;
    aa.actions = actions;
    grid.for_each([&](std::int64_t, const Vec& theta) {
        aa.angles = theta;
        const double v = g(model.from_action_angle(aa));
        if (!std::isfinite(v))
            throw Error(ErrorClass::numeric, "torus_average: integrand non-finite on the fiber");
        sum += v;
    });
    return sum * grid.weight();
}

double torus_average_energy(const std::function<double(const Vec&)>& g,
                            const IntegrableModel& model, const Vec& energies,
                            const TorusGrid& grid) {
    return torus_average(g, model, model.actions_of_energies(energies), grid);
}

AveragedODE averaged_rhs(const IntegrableModel& model, const Perturbation& pert,
                         const TorusGrid& grid) {
    AveragedODE ode;
    ode.n = model.n;
    // rhs(h)_i = avg over the fiber of dH_i(K); one field evaluation per node
    ode.rhs = [&model, &pert, grid](const Vec& h) {
        const Vec actions = model.actions_of_energies(h);
        Vec sum(model.n, 0.0);
        ActionAngle aa;
        aa.actions = actions;
        grid.for_each([&](std::int64_t, const Vec& theta) {
            aa.angles = theta;
            const Vec x = model.from_action_angle(aa);
            if (!pert.in_domain(x))
                throw Error(ErrorClass::domain, "averaged_rhs: fiber meets a singularity of K");
            const Vec k = pert.field(x);
            for (int i = 0; i < model.n; ++i)
                sum[i] += dot(model.hamiltonians[i].gradient(x), k);
        });
        for (double& s : sum) s *= grid.weight();
        return sum;
    };
    return ode;
}

Vec OdePath::at(double t) const {
    if (times.empty()) throw Error(ErrorClass::validation, "empty ODE path");
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const size_t hi = static_cast<size_t>(it - times.begin()), lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    Vec out(values[lo].size());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - w) * values[lo][i] + w * values[hi][i];
    return out;
}

double OdePath::crossing_time(double rho) const {
    const Vec& v0 = values.front();
    auto dist = [&](const Vec& v) {
        double s = 0;
        for (size_t i = 0; i < v.size(); ++i) s += (v[i] - v0[i]) * (v[i] - v0[i]);
        return std::sqrt(s);
    };
    double dprev = dist(values.front());
    for (size_t j = 1; j < values.size(); ++j) {
        const double d = dist(values[j]);
        if (d >= rho) {
            const double w = (rho - dprev) / (d - dprev);
            return times[j - 1] + w * (times[j] - times[j - 1]);
        }
        dprev = d;
    }
    return std::numeric_limits<double>::infinity();
}

OdePath solve_averaged_ode(const AveragedODE& ode, double horizon, double dt,
                           double radius) {
    if (!(dt > 0) || !(horizon >= 0))
        throw Error(ErrorClass::validation, "solve_averaged_ode: bad horizon/dt");
    OdePath path;
    Vec y = ode.a0;
    const Vec y0 = y;
    path.times.push_back(0.0);
    path.values.push_back(y);
    const auto n_steps = static_cast<std::int64_t>(std::ceil(horizon / dt - 1e-12));
    Vec k1, k2, k3, k4, tmp(y.size());
    for (std::int64_t j = 0; j < n_steps; ++j) {
        const double h = std::min(dt, horizon - static_cast<double>(j) * dt);
        k1 = ode.rhs(y);
        for (size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        k2 = ode.rhs(tmp);
        for (size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        k3 = ode.rhs(tmp);
        for (size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + h * k3[i];
        k4 = ode.rhs(tmp);
        for (size_t i = 0; i < y.size(); ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        path.times.push_back(std::min(static_cast<double>(j + 1) * dt, horizon));
        path.values.push_back(y);
        if (radius > 0) {
            double d2 = 0;
            for (size_t i = 0; i < y.size(); ++i) d2 += (y[i] - y0[i]) * (y[i] - y0[i]);
            if (d2 >= radius * radius) {
                path.exit_time = path.crossing_time(radius);
                break;
            }
        }
    }
    return path;
}

namespace {

double chart_radius_at(const IntegrableModel& model, const Vec& h0, double requested) {
    return requested > 0 ? requested : default_chart_radius(model, h0);
}

struct PathTiming {
    double dt = 0;
    std::int64_t n_steps = 0;
    std::int64_t stride = 1;
};

PathTiming plan_steps(double horizon, double dt_target, std::int64_t record_samples) {
    PathTiming p;
    p.n_steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(horizon / dt_target)));
    p.dt = horizon / static_cast<double>(p.n_steps);
    p.stride = std::max<std::int64_t>(1, p.n_steps / std::max<std::int64_t>(1, record_samples));
    return p;
}

}  // namespace

RateFitResult rate_experiment(const IntegrableModel& model, const Perturbation& pert,
                              const Vec& y0, double t, const Vec& epsilons,
                              const RateOptions& opts) {
    if (epsilons.empty())
        throw Error(ErrorClass::validation, "rate_experiment: empty epsilon grid");
    for (size_t i = 1; i < epsilons.size(); ++i)
        if (!(epsilons[i] < epsilons[i - 1]))
            throw Error(ErrorClass::validation, "rate_experiment: epsilons must decrease");
    if (opts.n_paths < 1)
        throw Error(ErrorClass::validation, "rate_experiment: n_paths must be positive");
    if (!(opts.beta > 1.0))
        throw Error(ErrorClass::validation, "rate_experiment: beta must exceed 1");

    const Vec h0 = model.energies(y0);
    const double radius = chart_radius_at(model, h0, opts.radius);
    const TorusGrid grid(model.n, opts.torus_m);
    AveragedODE ode = averaged_rhs(model, pert, grid);
    ode.a0 = h0;
    OdePath hbar = solve_averaged_ode(ode, t, opts.ode_dt, radius);
    if (hbar.exit_time <= t)
        throw Error(ErrorClass::validation,
                    "rate_experiment: averaged path exits the chart before t");

    RateFitResult res;
    res.beta = opts.beta;
    res.n_paths = opts.n_paths;
    res.epsilons = epsilons;

    for (double eps : epsilons) {
        const double horizon = t / eps;  // real time; compared at s = eps * time
        const PathTiming tm =
            plan_steps(horizon, std::min(opts.dt_cap, eps * eps * opts.dt_eps_scale),
                       opts.record_samples);
        Vec sup_pow(opts.n_paths, 0.0);
        std::vector<char> exited(opts.n_paths, 0);
        parallel_for(opts.n_paths, opts.workers, [&](std::int64_t path) {
            NoiseSpec noise;
            noise.master_seed = opts.seed;
            noise.stream = static_cast<std::uint64_t>(path);
            noise.n_streams = model.n;
            noise.dt = tm.dt;
            IntegrateOptions io;
            io.horizon = horizon;
            io.dt = tm.dt;
            io.record_stride = tm.stride;
            io.scheme = opts.scheme;
            io.exit_radius = radius;
            const TrajectoryRecord rec = integrate(model, pert, eps, y0, noise, io);
            exited[path] = rec.exited ? 1 : 0;
            double sup = 0;
            for (size_t j = 0; j < rec.times.size(); ++j) {
                const Vec ref = hbar.at(eps * rec.times[j]);
                double d2 = 0;
                for (int i = 0; i < model.n; ++i)
                    d2 += (rec.energies[j][i] - ref[i]) * (rec.energies[j][i] - ref[i]);
                sup = std::max(sup, d2);
            }
            sup_pow[path] = std::pow(sup, 0.5 * opts.beta);  // ||.||^beta
        });
        const Moments m = moments(sup_pow);
        const double err = std::pow(m.mean, 1.0 / opts.beta);
        // delta method for the standard error of mean^(1/beta)
        const double se =
            m.mean > 0 ? m.se_mean / opts.beta * std::pow(m.mean, 1.0 / opts.beta - 1.0) : 0.0;
        res.errors.push_back(err);
        res.stderrs.push_back(se);
        std::int64_t n_exited = 0;
        for (char e : exited) n_exited += e;
        if (n_exited == opts.n_paths)
            res.flags.push_back("all_paths_exited_eps=" + std::to_string(eps));
    }

    if (res.flags.empty()) {
        Vec lx, ly;
        for (size_t i = 0; i < epsilons.size(); ++i) {
            lx.push_back(std::log(epsilons[i]));
            ly.push_back(std::log(res.errors[i]));
        }
        const LinearFit fit = linear_fit(lx, ly);
        res.slope = fit.slope;
        res.slope_ci95 = fit.slope_ci95;
    } else {
        res.slope = std::numeric_limits<double>::quiet_NaN();
        res.slope_ci95 = std::numeric_limits<double>::quiet_NaN();
    }
    return res;
}

ExitProbResult exit_probability_experiment(const IntegrableModel& model,
                                           const Perturbation& pert, const Vec& y0,
                                           double delta, const Vec& epsilons,
                                           const RateOptions& opts) {
    if (opts.n_paths < 1)
        throw Error(ErrorClass::validation, "exit_probability: n_paths must be positive");
    const Vec h0 = model.energies(y0);
    const double radius = chart_radius_at(model, h0, opts.radius);
    if (!(delta > 0 && delta < radius))
        throw Error(ErrorClass::validation, "exit_probability: need 0 < delta < r");

    ExitProbResult res;
    res.epsilons = epsilons;
    res.radius = radius;
    res.delta = delta;

    const TorusGrid grid(model.n, opts.torus_m);
    AveragedODE ode = averaged_rhs(model, pert, grid);
    ode.a0 = h0;
    // probe the averaged speed; a vanishing field has no T_delta at all
    double speed = norm2(ode.rhs(h0));
    for (int corner = 0; corner < (1 << model.n); ++corner) {
        Vec h = h0;
        for (int d = 0; d < model.n; ++d)
            h[d] += ((corner >> d) & 1 ? 0.5 : -0.5) * radius / std::sqrt(double(model.n));
        speed = std::max(speed, norm2(ode.rhs(h)));
    }
    if (speed < 1e-12) {
        res.not_applicable = true;
        res.flags.push_back("t_delta_infinite");
        return res;
    }
    // expand the horizon until the (r - delta)-crossing shows up
    double horizon = 2.0 * (radius - delta) / speed;
    res.t_delta = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 8 && !std::isfinite(res.t_delta); ++attempt) {
        OdePath hbar = solve_averaged_ode(ode, horizon, horizon / 4096.0, radius);
        res.t_delta = hbar.crossing_time(radius - delta);
        horizon *= 2.0;
    }
    if (!std::isfinite(res.t_delta)) {
        res.not_applicable = true;
        res.flags.push_back("t_delta_infinite");
        return res;
    }

    for (double eps : epsilons) {
        const double horizon = res.t_delta / eps;
        const PathTiming tm = plan_steps(horizon, opts.dt_cap, 2);
        std::vector<char> exited(opts.n_paths, 0);
        parallel_for(opts.n_paths, opts.workers, [&](std::int64_t path) {
            NoiseSpec noise;
            noise.master_seed = opts.seed;
            noise.stream = static_cast<std::uint64_t>(path);
            noise.n_streams = model.n;
            noise.dt = tm.dt;
            IntegrateOptions io;
            io.horizon = horizon;
            io.dt = tm.dt;
            io.record_stride = tm.n_steps;
            io.scheme = opts.scheme;
            io.exit_radius = radius;
            const TrajectoryRecord rec = integrate(model, pert, eps, y0, noise, io);
            // T^eps (rescaled) < T_delta <=> exit before the real horizon
            exited[path] = rec.exited ? 1 : 0;
        });
        double p = 0;
        for (char e : exited) p += e;
        p /= static_cast<double>(opts.n_paths);
        res.p_exit.push_back(p);
        res.stderrs.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(opts.n_paths)));
    }
    return res;
}

}  // namespace stochav
