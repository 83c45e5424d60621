#include "stochav/diffusion.hpp"

#include <algorithm>

#include "stochav/parallel.hpp"

namespace stochav {

namespace {
constexpr std::uint64_t kLimitSeedSalt = 0x9E3779B97F4A7C15ull;
}

Vec ActionGridSpec::node(std::int64_t flat) const {
    const int n = static_cast<int>(nodes.size());
    Vec I(n);
    for (int d = n - 1; d >= 0; --d) {
        const int id = static_cast<int>(flat % nodes[d]);
        flat /= nodes[d];
        I[d] = lo[d] + spacing(d) * id;
    }
    return I;
}

void ActionGridSpec::validate(int n) const {
    if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n ||
        static_cast<int>(nodes.size()) != n)
        throw Error(ErrorClass::validation, "action grid: dimension mismatch");
    for (int d = 0; d < n; ++d) {
        if (nodes[d] < 3)
            throw Error(ErrorClass::validation, "action grid needs >= 3 nodes per dimension");
        if (!(lo[d] < hi[d]))
            throw Error(ErrorClass::validation, "action grid: empty range");
        if (!(lo[d] > 0))
            throw Error(ErrorClass::validation, "action grid leaves the chart domain (I <= 0)");
    }
}

bool ActionGridSpec::contains(const Vec& I, double slack_frac) const {
    for (size_t d = 0; d < nodes.size(); ++d) {
        const double slack = slack_frac * (hi[d] - lo[d]);
        if (I[d] < lo[d] - slack || I[d] > hi[d] + slack) return false;
    }
    return true;
}

LimitForm limit_form_from_name(const std::string& name) {
    if (name == "stratonovich") return LimitForm::stratonovich;
    if (name == "ito") return LimitForm::ito;
    throw Error(ErrorClass::validation, "unknown limit SDE form '" + name + "'");
}

namespace {

// multilinear interpolation support; points beyond the box evaluate the
// clamped boundary value (transient predictor overshoot near the stopping
// sphere), genuine domain violations are caught on the integrated state
struct CellLocator {
    std::vector<int> base;
    Vec weight;
    void locate(const ActionGridSpec& g, const Vec& I) {
        const int n = static_cast<int>(g.nodes.size());
        base.assign(n, 0);
        weight.assign(n, 0.0);
        for (int d = 0; d < n; ++d) {
            double u = (I[d] - g.lo[d]) / g.spacing(d);
            const double cells = static_cast<double>(g.nodes[d] - 1);
            u = std::clamp(u, 0.0, cells);
            int idx = static_cast<int>(u);
            if (idx >= g.nodes[d] - 1) idx = g.nodes[d] - 2;
            base[d] = idx;
            weight[d] = u - idx;
        }
    }
};

std::int64_t flat_index(const ActionGridSpec& g, const std::vector<int>& idx) {
    std::int64_t flat = 0;
    for (size_t d = 0; d < idx.size(); ++d) flat = flat * g.nodes[d] + idx[d];
    return flat;
}

template <class Getter>
void interpolate(const ActionGridSpec& g, const Vec& I, std::int64_t value_size,
                 const Getter& get, double* out) {
    CellLocator loc;
    loc.locate(g, I);
    const int n = static_cast<int>(g.nodes.size());
    std::fill(out, out + value_size, 0.0);
    std::vector<int> idx(n);
    const int corners = 1 << n;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        for (int d = 0; d < n; ++d) {
            const bool hi = (c >> d) & 1;
            idx[d] = loc.base[d] + (hi ? 1 : 0);
            w *= hi ? loc.weight[d] : 1.0 - loc.weight[d];
        }
        if (w == 0.0) continue;
        const double* v = get(flat_index(g, idx));
        for (std::int64_t i = 0; i < value_size; ++i) out[i] += w * v[i];
    }
}

}  // namespace

Mat DiffusionModel::a_at(const Vec& actions) const {
    Mat out(n, n);
    interpolate(grid, actions, static_cast<std::int64_t>(n) * n,
                [this](std::int64_t f) { return a[f].data.data(); }, out.data.data());
    return out;
}

Mat DiffusionModel::sigma_at(const Vec& actions) const {
    Mat out(n, n);
    interpolate(grid, actions, static_cast<std::int64_t>(n) * n,
                [this](std::int64_t f) { return sigma[f].data.data(); }, out.data.data());
    return out;
}

Vec DiffusionModel::b_at(const Vec& actions) const {
    Vec out(n);
    interpolate(grid, actions, n,
                [this](std::int64_t f) { return b[f].data(); }, out.data());
    return out;
}

DiffusionModel assemble_diffusion(const IntegrableModel& model, const Perturbation& pert,
                                  const ActionGridSpec& grid, const TorusGrid& torus,
                                  const AssembleOptions& opts) {
    if (!pert.hamiltonian_k)
        throw Error(ErrorClass::validation,
                    "assemble_diffusion requires a Hamiltonian perturbation (K = X_k)");
    grid.validate(model.n);
    if (torus.n != model.n)
        throw Error(ErrorClass::validation, "assemble_diffusion: torus grid dimension mismatch");

    const int n = model.n;
    const std::int64_t total = grid.size();
    const std::int64_t gsize = torus.size();
    const double gw = torus.weight();

    DiffusionModel dm;
    dm.n = n;
    dm.grid = grid;
    dm.actions_of_energies = model.actions_of_energies;
    dm.a.assign(total, Mat(n, n));
    dm.sigma.assign(total, Mat(n, n));
    dm.b.assign(total, Vec(n, 0.0));

    // h~_j = L0^{-1}(w(X_{H_j},K)) = -h_j and the action components of K on
    // every fiber; both feed the cross-fiber derivative in the b pass.
    std::vector<Vec> h_tilde(total);   // [node] -> n * gsize
    std::vector<Vec> k_action(total);  // [node] -> n * gsize
    Vec neg_eigs(total, 0.0), band_tails(total, 0.0);

    parallel_for(total, opts.workers, [&](std::int64_t node) {
        const Vec I = grid.node(node);
        GeneratorSpec gen{model.freq_matrix(I), model.drift_freq(I)};

        Vec fvals(static_cast<size_t>(n) * gsize);
        Vec ktheta(static_cast<size_t>(n) * gsize);
        k_action[node].resize(static_cast<size_t>(n) * gsize);
        h_tilde[node].resize(static_cast<size_t>(n) * gsize);

        ActionAngle aa;
        aa.actions = I;
        torus.for_each([&](std::int64_t gidx, const Vec& theta) {
            aa.angles = theta;
            const Vec x = model.from_action_angle(aa);
            if (!pert.in_domain(x))
                throw Error(ErrorClass::domain, "assemble_diffusion: fiber meets a singularity");
            const Vec k = pert.field(x);
            const Mat J = model.chart_jacobian(x);
            for (int d = 0; d < n; ++d) {
                double ki = 0, kt = 0;
                for (int c = 0; c < 2 * n; ++c) {
                    ki += J(d, c) * k[c];
                    kt += J(n + d, c) * k[c];
                }
                k_action[node][static_cast<size_t>(d) * gsize + gidx] = ki;
                ktheta[static_cast<size_t>(d) * gsize + gidx] = kt;
            }
            for (int i = 0; i < n; ++i)
                fvals[static_cast<size_t>(i) * gsize + gidx] =
                    -dot(model.hamiltonians[i].gradient(x), k);  // w(K, X_{H_i})
        });

        std::vector<TorusFunction> h(n);
        double tail = 0;
        for (int i = 0; i < n; ++i) {
            TorusFunction f;
            f.grid = torus;
            f.actions = I;
            f.values.assign(fvals.begin() + i * gsize, fvals.begin() + (i + 1) * gsize);
            PoissonResult pr = solve_poisson(f, gen, opts.poisson);
            tail = std::max(tail, pr.band_tail);
            h[i] = std::move(pr.h);
        }
        band_tails[node] = tail;

        Mat& A = dm.a[node];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0;
                for (std::int64_t g = 0; g < gsize; ++g)
                    s += fvals[static_cast<size_t>(j) * gsize + g] * h[i].values[g].real();
                A(i, j) = -s * gw;
            }
        // only the symmetric part enters the generator's second-order term
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double sym = 0.5 * (A(i, j) + A(j, i));
                A(i, j) = sym;
                A(j, i) = sym;
            }
        dm.sigma[node] = psd_sqrt(A, opts.neg_eig_tol, &neg_eigs[node]);

        // angle part of b_j: 1/2 avg( sum_d dh~_j/dtheta_d K_theta^d )
        for (int j = 0; j < n; ++j) {
            for (std::int64_t g = 0; g < gsize; ++g)
                h_tilde[node][static_cast<size_t>(j) * gsize + g] = -h[j].values[g].real();
            TorusFunction ht;
            ht.grid = torus;
            ht.values.assign(h_tilde[node].begin() + j * gsize,
                             h_tilde[node].begin() + (j + 1) * gsize);
            double s = 0;
            for (int d = 0; d < n; ++d) {
                const TorusFunction dh = angle_derivative(ht, d);
                for (std::int64_t g = 0; g < gsize; ++g)
                    s += dh.values[g].real() * ktheta[static_cast<size_t>(d) * gsize + g];
            }
            dm.b[node][j] = 0.5 * s * gw;
        }
    });

    // cross-fiber part of b_j: 1/2 avg( sum_d dh~_j/dI_d K_I^d ), centered
    // differences across neighbouring action nodes (one-sided at the edges)
    std::vector<std::int64_t> stride(n, 1);
    for (int d = n - 2; d >= 0; --d) stride[d] = stride[d + 1] * grid.nodes[d + 1];
    parallel_for(total, opts.workers, [&](std::int64_t node) {
        for (int d = 0; d < n; ++d) {
            const int nd = grid.nodes[d];
            const int id = static_cast<int>((node / stride[d]) % nd);
            const double dI = grid.spacing(d);
            const std::int64_t s = stride[d];
            for (int j = 0; j < n; ++j) {
                double acc = 0;
                const std::int64_t off = static_cast<std::int64_t>(j) * gsize;
                for (std::int64_t g = 0; g < gsize; ++g) {
                    double der;
                    if (id == 0)
                        der = (-3.0 * h_tilde[node][off + g] + 4.0 * h_tilde[node + s][off + g] -
                               h_tilde[node + 2 * s][off + g]) /
                              (2.0 * dI);
                    else if (id == nd - 1)
                        der = (3.0 * h_tilde[node][off + g] - 4.0 * h_tilde[node - s][off + g] +
                               h_tilde[node - 2 * s][off + g]) /
                              (2.0 * dI);
                    else
                        der = (h_tilde[node + s][off + g] - h_tilde[node - s][off + g]) /
                              (2.0 * dI);
                    acc += der * k_action[node][static_cast<size_t>(d) * gsize + g];
                }
                dm.b[node][j] += 0.5 * acc * gw;
            }
        }
    });

    for (std::int64_t i = 0; i < total; ++i) {
        dm.min_eigenvalue = std::min(dm.min_eigenvalue, neg_eigs[i]);
        dm.band_tail_max = std::max(dm.band_tail_max, band_tails[i]);
    }
    if (dm.min_eigenvalue < -opts.neg_eig_tol)
        dm.flags.push_back("psd_clamped_eigenvalue=" + std::to_string(dm.min_eigenvalue));
    if (dm.band_tail_max > opts.poisson.band_tol)
        dm.flags.push_back("band_limit_tail=" + std::to_string(dm.band_tail_max));
    return dm;
}

namespace {

struct LimitField {
    const DiffusionModel& dm;
    bool effective;
    // dispersion S and drift D at energies z under the Ito reading
    Mat S(const Vec& z) const {
        Mat s = dm.sigma_at(dm.actions_of_energies(z));
        if (effective) {
            const double r2 = std::sqrt(2.0);
            for (double& v : s.data) v *= r2;  // S S^T = 2a
        }
        return s;
    }
    Vec D_ito(const Vec& z) const {
        Vec b = dm.b_at(dm.actions_of_energies(z));
        if (effective)
            for (double& v : b) v *= -2.0;
        return b;
    }
    // Stratonovich drift: D_ito - 1/2 sum_{i,k} S_ik dS_jk/dz_i
    Vec D_strat(const Vec& z) const {
        Vec b = D_ito(z);
        const int n = dm.n;
        double h = std::numeric_limits<double>::infinity();
        for (int d = 0; d < n; ++d) h = std::min(h, 0.45 * dm.grid.spacing(d));
        for (int i = 0; i < n; ++i) {
            Vec zp = z, zm = z;
            zp[i] += h;
            zm[i] -= h;
            const Mat sp = S(zp), sm = S(zm), s0 = S(z);
            for (int j = 0; j < n; ++j) {
                double corr = 0;
                for (int k = 0; k < n; ++k)
                    corr += s0(i, k) * (sp(j, k) - sm(j, k)) / (2.0 * h);
                b[j] -= 0.5 * corr;
            }
        }
        return b;
    }
};

}  // namespace

LimitPath simulate_limit_sde(const DiffusionModel& dm, const Vec& z0,
                             const NoiseSpec& noise, const LimitOptions& opts) {
    if (static_cast<int>(z0.size()) != dm.n)
        throw Error(ErrorClass::validation, "simulate_limit_sde: bad initial point");
    if (noise.n_streams != dm.n)
        throw Error(ErrorClass::validation, "simulate_limit_sde: noise stream count mismatch");
    const auto n_steps = static_cast<std::int64_t>(std::llround(opts.horizon / opts.dt));
    if (std::abs(n_steps * opts.dt - opts.horizon) > 1e-9 * std::max(1.0, opts.horizon))
        throw Error(ErrorClass::validation, "simulate_limit_sde: horizon must be a multiple of dt");

    const int n = dm.n;
    const Vec center = opts.stop_center.empty() ? z0 : opts.stop_center;
    const bool stopping = opts.stop_radius > 0;
    const LimitField field{dm, opts.effective};
    const double sdt = noise.sqrt_dt();

    LimitPath path;
    Vec z = z0, dW(n), zp(n), zn(n), drift0, drift1;
    Mat s0, s1;
    path.times.push_back(0.0);
    path.values.push_back(z);

    auto do_record = [&](double t) {
        path.times.push_back(t);
        path.values.push_back(z);
    };

    for (std::int64_t j = 0; j < n_steps; ++j) {
        for (int k = 0; k < n; ++k)
            dW[k] = sdt * gaussian_at(noise.master_seed, noise.stream,
                                      static_cast<std::uint32_t>(k),
                                      static_cast<std::uint64_t>(j));
        if (opts.form == LimitForm::ito) {
            s0 = field.S(z);
            drift0 = field.D_ito(z);
            for (int i = 0; i < n; ++i) {
                double d = drift0[i] * opts.dt;
                for (int k = 0; k < n; ++k) d += s0(i, k) * dW[k];
                zn[i] = z[i] + d;
            }
        } else {
            // Heun on the Stratonovich reading
            s0 = field.S(z);
            drift0 = field.D_strat(z);
            for (int i = 0; i < n; ++i) {
                double d = drift0[i] * opts.dt;
                for (int k = 0; k < n; ++k) d += s0(i, k) * dW[k];
                zp[i] = z[i] + d;
            }
            s1 = field.S(zp);
            drift1 = field.D_strat(zp);
            for (int i = 0; i < n; ++i) {
                double d = 0.5 * (drift0[i] + drift1[i]) * opts.dt;
                for (int k = 0; k < n; ++k) d += 0.5 * (s0(i, k) + s1(i, k)) * dW[k];
                zn[i] = z[i] + d;
            }
        }
        for (int i = 0; i < n; ++i)
            if (!std::isfinite(zn[i]))
                throw Error(ErrorClass::numeric, "limit SDE state became non-finite");
        z = zn;
        const double t = static_cast<double>(j + 1) * opts.dt;
        if (!stopping && !dm.grid.contains(dm.actions_of_energies(z), 0.1))
            throw Error(ErrorClass::domain, "limit SDE state left the assembled action domain");
        if (stopping) {
            double d2 = 0;
            for (int i = 0; i < n; ++i) d2 += (z[i] - center[i]) * (z[i] - center[i]);
            if (d2 >= opts.stop_radius * opts.stop_radius) {
                path.exited = true;
                path.exit_time = t;
                do_record(t);
                const double dist = std::sqrt(d2);
                path.stopped_value.resize(n);
                for (int i = 0; i < n; ++i)
                    path.stopped_value[i] =
                        center[i] + opts.stop_radius * (z[i] - center[i]) / dist;
                return path;
            }
        }
        if ((j + 1) % opts.record_stride == 0 || j + 1 == n_steps) do_record(t);
    }
    path.stopped_value = z;
    return path;
}

WeakResult weak_convergence_experiment(const IntegrableModel& model,
                                       const Perturbation& pert, const Vec& y0,
                                       double t, const Vec& epsilons,
                                       const WeakOptions& opts) {
    if (!pert.hamiltonian_k)
        throw Error(ErrorClass::validation,
                    "weak_convergence_experiment requires a Hamiltonian perturbation");
    if (epsilons.empty())
        throw Error(ErrorClass::validation, "weak_convergence_experiment: empty epsilon grid");
    if (opts.n_paths < 2)
        throw Error(ErrorClass::validation, "weak_convergence_experiment: n_paths too small");

    const int n = model.n;
    const Vec h0 = model.energies(y0);
    const double radius = opts.radius > 0 ? opts.radius : default_chart_radius(model, h0);

    WeakResult res;
    res.epsilons = epsilons;
    res.radius = radius;

    // action box bounding the chart ball, with margin for predictor overshoot
    const Vec I0 = model.actions_of_energies(h0);
    const Vec rho = action_halfwidths(model, h0, radius);
    ActionGridSpec gspec;
    gspec.lo.resize(n);
    gspec.hi.resize(n);
    gspec.nodes.assign(n, opts.action_nodes);
    for (int d = 0; d < n; ++d) {
        gspec.lo[d] = I0[d] - 1.10 * rho[d];
        gspec.hi[d] = I0[d] + 1.10 * rho[d];
        if (gspec.lo[d] <= 0) {
            gspec.lo[d] = 0.02 * I0[d];
            res.flags.push_back("action_grid_clipped_dim=" + std::to_string(d));
        }
    }

    const TorusGrid torus(n, opts.torus_m);
    AssembleOptions aopts;
    aopts.workers = opts.workers;
    const DiffusionModel dm = assemble_diffusion(model, pert, gspec, torus, aopts);
    for (const auto& f : dm.flags) res.flags.push_back(f);

    // limit-SDE sample (independent of epsilon, reused for every comparison)
    std::vector<Vec> limit_samples(n, Vec(opts.n_paths));
    std::int64_t limit_exits = 0;
    {
        std::vector<char> exited(opts.n_paths, 0);
        const auto lim_steps =
            static_cast<std::int64_t>(std::llround(t / opts.limit_dt));
        const double lim_dt = t / static_cast<double>(lim_steps);
        parallel_for(opts.n_paths, opts.workers, [&](std::int64_t path) {
            NoiseSpec noise;
            noise.master_seed = opts.seed ^ kLimitSeedSalt;
            noise.stream = static_cast<std::uint64_t>(path);
            noise.n_streams = n;
            noise.dt = lim_dt;
            LimitOptions lo;
            lo.horizon = t;
            lo.dt = lim_dt;
            lo.record_stride = lim_steps;
            lo.form = opts.limit_form;
            lo.effective = true;
            lo.stop_center = h0;
            lo.stop_radius = radius;
            const LimitPath lp = simulate_limit_sde(dm, h0, noise, lo);
            exited[path] = lp.exited ? 1 : 0;
            for (int i = 0; i < n; ++i) limit_samples[i][path] = lp.stopped_value[i];
        });
        for (char e : exited) limit_exits += e;
    }
    res.exit_fraction_limit =
        static_cast<double>(limit_exits) / static_cast<double>(opts.n_paths);

    for (int i = 0; i < n; ++i) {
        const Moments m = moments(limit_samples[i]);
        WeakRow row;
        row.epsilon = 0.0;
        row.component = i + 1;
        row.mean = m.mean;
        row.mean_se = m.se_mean;
        row.var = m.var;
        row.var_se = m.se_var;
        row.cdf_distance = 0.0;
        res.rows.push_back(row);
    }

    for (double eps : epsilons) {
        const double horizon = t / (eps * eps);
        const double dt_target = std::min(opts.dt_cap, eps * eps * opts.dt_eps_scale);
        const auto n_steps =
            std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(horizon / dt_target)));
        const double dt = horizon / static_cast<double>(n_steps);

        std::vector<Vec> samples(n, Vec(opts.n_paths));
        std::vector<char> exited(opts.n_paths, 0);
        parallel_for(opts.n_paths, opts.workers, [&](std::int64_t path) {
            NoiseSpec noise;
            noise.master_seed = opts.seed;
            noise.stream = static_cast<std::uint64_t>(path);
            noise.n_streams = n;
            noise.dt = dt;
            IntegrateOptions io;
            io.horizon = horizon;
            io.dt = dt;
            io.record_stride = n_steps;
            io.scheme = opts.scheme;
            io.exit_radius = radius;
            const TrajectoryRecord rec = integrate(model, pert, eps, y0, noise, io);
            Vec h = rec.exited ? rec.exit_energies : rec.energies.back();
            if (rec.exited) {
                // project the stopped value onto the chart sphere
                double d2 = 0;
                for (int i = 0; i < n; ++i) d2 += (h[i] - h0[i]) * (h[i] - h0[i]);
                const double dist = std::sqrt(d2);
                for (int i = 0; i < n; ++i)
                    h[i] = h0[i] + radius * (h[i] - h0[i]) / dist;
                exited[path] = 1;
            }
            for (int i = 0; i < n; ++i) samples[i][path] = h[i];
        });

        std::int64_t n_exits = 0;
        for (char e : exited) n_exits += e;
        const double frac = static_cast<double>(n_exits) / static_cast<double>(opts.n_paths);
        res.exit_fraction.push_back(frac);
        if (frac > 0.5)
            res.flags.push_back("early_exit_eps=" + std::to_string(eps));

        for (int i = 0; i < n; ++i) {
            const Moments m = moments(samples[i]);
            WeakRow row;
            row.epsilon = eps;
            row.component = i + 1;
            row.mean = m.mean;
            row.mean_se = m.se_mean;
            row.var = m.var;
            row.var_se = m.se_var;
            row.cdf_distance = ks_two_sample(samples[i], limit_samples[i]);
            res.rows.push_back(row);
        }
    }
    return res;
}

}  // namespace stochav
