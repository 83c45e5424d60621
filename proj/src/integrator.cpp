#include "stochav/integrator.hpp"

#include <cstring>

namespace stochav {

Scheme scheme_from_name(const std::string& name) {
    if (name == "midpoint") return Scheme::midpoint;
    if (name == "heun") return Scheme::heun;
    throw Error(ErrorClass::validation, "unknown scheme '" + name + "'");
}

const char* scheme_name(Scheme s) {
    return s == Scheme::midpoint ? "midpoint" : "heun";
}

namespace {

struct StepWorkspace {
    Vec y, mid, f, pred;
    explicit StepWorkspace(int dim) : y(dim), mid(dim), f(dim), pred(dim) {}
};

// One Stratonovich step of size dt with increments dB[k]; returns false if a
// midpoint fixed-point iteration failed to settle.
inline bool step_state(const SdeKernel& kern, const PerturbKernel& pk, double eps_dt,
                       const double* x, const double* dB, double dt, Scheme scheme,
                       int max_iters, double fp_tol, StepWorkspace& w, double* out) {
    const int dim = 2 * kern.n;
    if (scheme == Scheme::heun) {
        // predictor: full Euler step; corrector: average field at both ends
        kern.eval(x, dB, dt, w.f.data());
        pk.add(x, eps_dt, w.f.data());
        for (int i = 0; i < dim; ++i) w.pred[i] = x[i] + w.f[i];
        kern.eval(w.pred.data(), dB, dt, w.mid.data());
        pk.add(w.pred.data(), eps_dt, w.mid.data());
        for (int i = 0; i < dim; ++i) out[i] = x[i] + 0.5 * (w.f[i] + w.mid[i]);
        return true;
    }
    // implicit midpoint: y = x + F((x+y)/2), seeded with the Euler predictor
    kern.eval(x, dB, dt, w.f.data());
    pk.add(x, eps_dt, w.f.data());
    double scale = 1.0;
    for (int i = 0; i < dim; ++i) {
        w.y[i] = x[i] + w.f[i];
        scale = std::max(scale, std::abs(x[i]));
    }
    const double tol = fp_tol * scale;
    for (int it = 0; it < max_iters; ++it) {
        for (int i = 0; i < dim; ++i) w.mid[i] = 0.5 * (x[i] + w.y[i]);
        kern.eval(w.mid.data(), dB, dt, w.f.data());
        pk.add(w.mid.data(), eps_dt, w.f.data());
        double delta = 0;
        for (int i = 0; i < dim; ++i) {
            const double yn = x[i] + w.f[i];
            delta = std::max(delta, std::abs(yn - w.y[i]));
            w.y[i] = yn;
        }
        if (delta <= tol) {
            std::memcpy(out, w.y.data(), sizeof(double) * dim);
            return true;
        }
    }
    return false;
}

template <class Increment>
TrajectoryRecord integrate_impl(const IntegrableModel& model, const Perturbation& pert,
                                double epsilon, const Vec& y0, double dt,
                                Increment&& increment, const IntegrateOptions& opts) {
    check_phase_point(y0, model.n);
    if (!(dt > 0)) throw Error(ErrorClass::validation, "dt must be positive");
    if (epsilon < 0) throw Error(ErrorClass::validation, "epsilon must be >= 0");
    const auto n_steps = static_cast<std::int64_t>(std::llround(opts.horizon / dt));
    if (std::abs(n_steps * dt - opts.horizon) > 1e-9 * std::max(1.0, opts.horizon))
        throw Error(ErrorClass::validation, "horizon must be a multiple of dt");
    if (opts.record_stride < 1)
        throw Error(ErrorClass::validation, "record_stride must be >= 1");
    if (!pert.in_domain(y0))
        throw Error(ErrorClass::domain, "y0 outside the perturbation domain");

    const int n = model.n, dim = 2 * n;
    const SdeKernel& kern = *model.kernel;  // kernels own the drift V via cV
    const PerturbKernel& pk = *pert.kernel;

    TrajectoryRecord rec;
    rec.epsilon = epsilon;
    const auto n_rec = static_cast<size_t>(n_steps / opts.record_stride) + 1;
    rec.times.reserve(n_rec);
    rec.states.reserve(n_rec);
    rec.energies.reserve(n_rec);

    Vec x = y0, xn(dim), dB(static_cast<size_t>(n), 0.0), h(n), h0(n);
    kern.energies(x.data(), h0.data());
    h = h0;

    auto record = [&](double t) {
        rec.times.push_back(t);
        rec.states.push_back(x);
        rec.energies.push_back(h);
    };
    record(0.0);

    StepWorkspace w(dim);
    const double eps_dt = epsilon * dt;
    const bool detect_exit = opts.exit_radius > 0;

    for (std::int64_t j = 0; j < n_steps; ++j) {
        for (int k = 0; k < n; ++k) dB[k] = increment(j, k);
        if (!step_state(kern, pk, eps_dt, x.data(), dB.data(), dt, opts.scheme,
                        opts.max_iters, opts.fp_tol, w, xn.data()))
            throw Error(ErrorClass::numeric, "midpoint iteration did not converge");
        for (int i = 0; i < dim; ++i)
            if (!std::isfinite(xn[i]))
                throw Error(ErrorClass::numeric, "state became non-finite");
        x.swap(xn);
        if (!pk.in_domain(x.data()))
            throw Error(ErrorClass::domain, "trajectory hit a perturbation singularity");
        kern.energies(x.data(), h.data());
        const double t = static_cast<double>(j + 1) * dt;

        if (detect_exit) {
            double d2 = 0;
            for (int i = 0; i < n; ++i) {
                const double di = h[i] - h0[i];
                d2 += di * di;
            }
            if (d2 >= opts.exit_radius * opts.exit_radius) {
                rec.exited = true;
                rec.exit_time = t;
                rec.exit_energies = h;
                record(t);
                return rec;
            }
        }
        if ((j + 1) % opts.record_stride == 0) record(t);
    }
    const double t_end = static_cast<double>(n_steps) * dt;
    if (rec.times.back() != t_end) record(t_end);
    return rec;
}

}  // namespace

TrajectoryRecord integrate(const IntegrableModel& model, const Perturbation& pert,
                           double epsilon, const Vec& y0, const NoiseSpec& noise,
                           const IntegrateOptions& opts) {
    if (noise.n_streams != model.n)
        throw Error(ErrorClass::validation, "noise stream count must equal model dof");
    const double sdt = noise.sqrt_dt();
    return integrate_impl(
        model, pert, epsilon, y0, noise.dt,
        [&noise, sdt](std::int64_t j, int k) {
            return sdt * gaussian_at(noise.master_seed, noise.stream,
                                     static_cast<std::uint32_t>(k),
                                     static_cast<std::uint64_t>(j));
        },
        opts);
}

TrajectoryRecord integrate(const IntegrableModel& model, const Perturbation& pert,
                           double epsilon, const Vec& y0, const NoisePath& path,
                           const IntegrateOptions& opts) {
    if (path.spec.n_streams != model.n)
        throw Error(ErrorClass::validation, "noise stream count must equal model dof");
    const auto need = static_cast<std::int64_t>(std::llround(opts.horizon / path.spec.dt));
    if (need > path.n_steps)
        throw Error(ErrorClass::validation, "noise path shorter than horizon");
    return integrate_impl(
        model, pert, epsilon, y0, path.spec.dt,
        [&path](std::int64_t j, int k) { return path.at(j, k); }, opts);
}

std::pair<TrajectoryRecord, TrajectoryRecord> integrate_coupled(
    const IntegrableModel& model, const Perturbation& pert, double epsilon,
    const Vec& y0, const NoiseSpec& noise, const IntegrateOptions& opts) {
    TrajectoryRecord perturbed = integrate(model, pert, epsilon, y0, noise, opts);
    Perturbation none = zero_perturbation(model.n);
    TrajectoryRecord unperturbed = integrate(model, none, 0.0, y0, noise, opts);
    return {std::move(perturbed), std::move(unperturbed)};
}

Vec exact_rotation_sample(const IntegrableModel& r4, const Vec& y0, double t,
                          const NoisePath& path) {
    if (r4.name != "r4")
        throw Error(ErrorClass::validation, "exact_rotation_sample: model must be r4");
    check_phase_point(y0, 2);
    const auto steps = static_cast<std::int64_t>(std::llround(t / path.spec.dt));
    if (std::abs(steps * path.spec.dt - t) > 1e-9 * std::max(1.0, t))
        throw Error(ErrorClass::validation, "t must be a multiple of the path step");
    const double B = path.sum(0, steps);
    const double W = path.sum(1, steps);
    // (x1 + i x3)(t) = e^{-iB_t} (x1 + i x3)(0); second plane by -(B_t + W_t)
    auto rotate = [](double q, double p, double angle, double& qo, double& po) {
        const double c = std::cos(angle), s = std::sin(angle);
        qo = c * q - s * p;
        po = s * q + c * p;
    };
    Vec out(4);
    rotate(y0[0], y0[2], -B, out[0], out[2]);
    rotate(y0[1], y0[3], -(B + W), out[1], out[3]);
    return out;
}

}  // namespace stochav
