#include "stochav/harness.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stochav/parallel.hpp"
#include "stochav/version.hpp"

namespace stochav {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

class CsvBuilder {
public:
    explicit CsvBuilder(const std::vector<std::string>& header) {
        for (size_t i = 0; i < header.size(); ++i) {
            if (i) out_ += ',';
            out_ += header[i];
        }
        out_ += '\n';
        cols_ = header.size();
    }
    void row(const std::vector<std::string>& cells) {
        if (cells.size() != cols_)
            throw Error(ErrorClass::io, "csv row width mismatch");
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ += ',';
            out_ += cells[i];
        }
        out_ += '\n';
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
    size_t cols_ = 0;
};

std::string fd(double v) { return format_double(v); }

Vec get_vec(const Json& j, const char* key, const Vec& fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<Vec>();
}

struct Instruments {
    IntegrableModel model;
    Perturbation pert;
    Vec y0;
    Vec h0;
    double radius;
};

Instruments instantiate(const ExperimentConfig& c) {
    Instruments ins{make_model(c.model, c.model_params), Perturbation{}, {}, {}, 0.0};
    ins.pert = make_perturbation(ins.model, c.perturbation);
    if (!c.y0.empty()) {
        ins.y0 = c.y0;
    } else if (!c.actions0.empty()) {
        ActionAngle aa;
        aa.actions = c.actions0;
        aa.angles = c.angles0.empty() ? Vec(ins.model.n, 0.0) : c.angles0;
        ins.y0 = ins.model.from_action_angle(aa);
    } else {
        // model default: the chart base fiber at a fixed angle offset
        ActionAngle aa;
        aa.actions = ins.model.actions_of_energies(ins.model.chart_center);
        aa.angles.assign(ins.model.n, 0.0);
        for (int i = 0; i < ins.model.n; ++i) aa.angles[i] = 0.5 + 1.0 * i;
        ins.y0 = ins.model.from_action_angle(aa);
    }
    check_phase_point(ins.y0, ins.model.n);
    ins.h0 = ins.model.energies(ins.y0);
    ins.radius = c.radius > 0 ? c.radius : default_chart_radius(ins.model, ins.h0);
    // y0 must sit inside the chart and the perturbation domain
    if (!ins.pert.in_domain(ins.y0))
        throw Error(ErrorClass::validation, "y0 lies outside the perturbation domain");
    return ins;
}

ActionGridSpec action_grid_for(const ExperimentConfig& c, const Instruments& ins) {
    ActionGridSpec g;
    const int n = ins.model.n;
    if (!c.action_lo.empty()) {
        g.lo = c.action_lo;
        g.hi = c.action_hi;
        g.nodes = c.action_nodes;
        if (g.nodes.empty()) g.nodes.assign(n, c.action_nodes_default);
    } else {
        const Vec I0 = ins.model.actions_of_energies(ins.h0);
        const Vec rho = action_halfwidths(ins.model, ins.h0, ins.radius);
        g.lo.resize(n);
        g.hi.resize(n);
        g.nodes.assign(n, c.action_nodes_default);
        for (int d = 0; d < n; ++d) {
            g.lo[d] = I0[d] - 1.10 * rho[d];
            g.hi[d] = I0[d] + 1.10 * rho[d];
            if (g.lo[d] <= 0) g.lo[d] = 0.02 * I0[d];
        }
    }
    g.validate(n);
    return g;
}

RateOptions rate_options(const ExperimentConfig& c) {
    RateOptions o;
    o.beta = c.beta;
    o.n_paths = c.n_paths;
    o.seed = c.seed;
    o.workers = resolve_workers(c.workers);
    o.scheme = scheme_from_name(c.scheme);
    o.radius = c.radius;
    o.dt_cap = c.dt > 0 ? c.dt : c.dt_cap;
    o.dt_eps_scale = c.dt > 0 ? std::numeric_limits<double>::infinity() : c.dt_eps_scale;
    o.ode_dt = c.ode_dt;
    o.torus_m = c.torus_m;
    o.record_samples = c.record_samples;
    return o;
}

void run_simulate(const ExperimentConfig& c, const Instruments& ins, ResultBundle& out) {
    const double eps = c.epsilons.empty() ? 0.0 : c.epsilons.front();
    const double dt = c.dt > 0 ? c.dt : c.dt_cap;
    const auto n_steps = static_cast<std::int64_t>(std::llround(c.t / dt));
    IntegrateOptions io;
    io.horizon = c.t;
    io.dt = dt;
    io.record_stride = std::max<std::int64_t>(1, n_steps / c.record_samples);
    io.scheme = scheme_from_name(c.scheme);
    io.exit_radius = ins.radius;
    NoiseSpec noise{c.seed, 0, ins.model.n, dt};
    const TrajectoryRecord rec = integrate(ins.model, ins.pert, eps, ins.y0, noise, io);

    std::vector<std::string> header = {"t"};
    for (int i = 0; i < 2 * ins.model.n; ++i) header.push_back("x" + std::to_string(i + 1));
    for (int i = 0; i < ins.model.n; ++i) header.push_back("H" + std::to_string(i + 1));
    CsvBuilder csv(header);
    for (size_t j = 0; j < rec.times.size(); ++j) {
        std::vector<std::string> row = {fd(rec.times[j])};
        for (double v : rec.states[j]) row.push_back(fd(v));
        for (double v : rec.energies[j]) row.push_back(fd(v));
        csv.row(row);
    }
    out.files.emplace_back("trajectory.csv", csv.take());
    out.manifest["summary"] = {{"exited", rec.exited},
                               {"exit_time", rec.exited ? rec.exit_time : -1.0},
                               {"epsilon", eps},
                               {"dt", dt},
                               {"radius", ins.radius}};
}

void run_average(const ExperimentConfig& c, const Instruments& ins, ResultBundle& out) {
    const TorusGrid grid(ins.model.n, c.torus_m);
    AveragedODE ode = averaged_rhs(ins.model, ins.pert, grid);
    ode.a0 = ins.h0;
    const OdePath path = solve_averaged_ode(ode, c.t, c.ode_dt, ins.radius);

    std::vector<std::string> header = {"t"};
    for (int i = 0; i < ins.model.n; ++i) header.push_back("Hbar" + std::to_string(i + 1));
    for (int i = 0; i < ins.model.n; ++i) header.push_back("rhs" + std::to_string(i + 1));
    CsvBuilder csv(header);
    const size_t stride = std::max<size_t>(1, path.times.size() / c.record_samples);
    for (size_t j = 0; j < path.times.size(); ++j) {
        if (j % stride != 0 && j + 1 != path.times.size()) continue;
        std::vector<std::string> row = {fd(path.times[j])};
        for (double v : path.values[j]) row.push_back(fd(v));
        for (double v : ode.rhs(path.values[j])) row.push_back(fd(v));
        csv.row(row);
    }
    out.files.emplace_back("averaged.csv", csv.take());
    out.manifest["summary"] = {
        {"exit_time", std::isfinite(path.exit_time) ? path.exit_time : -1.0},
        {"radius", ins.radius}};
}

void run_rate(const ExperimentConfig& c, const Instruments& ins, ResultBundle& out) {
    const RateFitResult r =
        rate_experiment(ins.model, ins.pert, ins.y0, c.t, c.epsilons, rate_options(c));
    CsvBuilder csv({"epsilon", "error", "stderr", "n_paths"});
    for (size_t i = 0; i < r.epsilons.size(); ++i)
        csv.row({fd(r.epsilons[i]), fd(r.errors[i]), fd(r.stderrs[i]),
                 std::to_string(r.n_paths)});
    out.files.emplace_back("rate.csv", csv.take());
    for (const auto& f : r.flags) out.manifest["flags"].push_back(f);
    out.manifest["summary"] = {{"slope", r.slope},
                               {"slope_ci95", r.slope_ci95},
                               {"beta", r.beta},
                               {"t", c.t}};
}

void run_exitprob(const ExperimentConfig& c, const Instruments& ins, ResultBundle& out) {
    const double delta = c.delta > 0 ? c.delta : 0.25 * ins.radius;
    const ExitProbResult r = exit_probability_experiment(ins.model, ins.pert, ins.y0,
                                                         delta, c.epsilons, rate_options(c));
    CsvBuilder csv({"epsilon", "p_exit", "stderr", "n_paths"});
    for (size_t i = 0; i < r.epsilons.size(); ++i)
        csv.row({fd(r.epsilons[i]), fd(r.p_exit[i]), fd(r.stderrs[i]),
                 std::to_string(c.n_paths)});
    out.files.emplace_back("exitprob.csv", csv.take());
    for (const auto& f : r.flags) out.manifest["flags"].push_back(f);
    out.manifest["summary"] = {{"t_delta", r.not_applicable ? -1.0 : r.t_delta},
                               {"delta", delta},
                               {"radius", r.radius},
                               {"not_applicable", r.not_applicable}};
}

void run_limit2(const ExperimentConfig& c, const Instruments& ins, ResultBundle& out) {
    const ActionGridSpec grid = action_grid_for(c, ins);
    const TorusGrid torus(ins.model.n, c.torus_m);
    AssembleOptions ao;
    ao.workers = resolve_workers(c.workers);
    const DiffusionModel dm = assemble_diffusion(ins.model, ins.pert, grid, torus, ao);
    out.files.emplace_back("diffusion.json", diffusion_to_json(dm, c).dump(2) + "\n");

    // moment table of the stopped limit-SDE sample at the horizon
    const int n = ins.model.n;
    const auto steps = static_cast<std::int64_t>(std::llround(c.t / c.limit_dt));
    const double dt = c.t / static_cast<double>(steps);
    std::vector<Vec> samples(n, Vec(c.n_paths));
    std::vector<char> exited(c.n_paths, 0);
    parallel_for(c.n_paths, resolve_workers(c.workers), [&](std::int64_t p) {
        NoiseSpec noise{c.seed, static_cast<std::uint64_t>(p), n, dt};
        LimitOptions lo;
        lo.horizon = c.t;
        lo.dt = dt;
        lo.record_stride = steps;
        lo.form = limit_form_from_name(c.limit_form);
        lo.effective = c.limit_effective;
        lo.stop_center = ins.h0;
        lo.stop_radius = ins.radius;
        const LimitPath lp = simulate_limit_sde(dm, ins.h0, noise, lo);
        exited[p] = lp.exited;
        for (int i = 0; i < n; ++i) samples[i][p] = lp.stopped_value[i];
    });
    CsvBuilder csv({"component", "mean", "mean_se", "var", "var_se"});
    for (int i = 0; i < n; ++i) {
        const Moments m = moments(samples[i]);
        csv.row({std::to_string(i + 1), fd(m.mean), fd(m.se_mean), fd(m.var), fd(m.se_var)});
    }
    out.files.emplace_back("limit_moments.csv", csv.take());
    std::int64_t ne = 0;
    for (char e : exited) ne += e;
    for (const auto& f : dm.flags) out.manifest["flags"].push_back(f);
    out.manifest["summary"] = {
        {"exit_fraction", static_cast<double>(ne) / c.n_paths},
        {"min_eigenvalue", dm.min_eigenvalue},
        {"effective", c.limit_effective},
        {"form", c.limit_form}};
}

void run_weak2(const ExperimentConfig& c, const Instruments& ins, ResultBundle& out) {
    WeakOptions wo;
    wo.n_paths = c.n_paths;
    wo.seed = c.seed;
    wo.workers = resolve_workers(c.workers);
    wo.scheme = scheme_from_name(c.scheme);
    wo.radius = c.radius;
    wo.dt_cap = c.dt > 0 ? c.dt : c.dt_cap;
    wo.dt_eps_scale = c.dt > 0 ? std::numeric_limits<double>::infinity() : c.dt_eps_scale;
    wo.limit_dt = c.limit_dt;
    wo.limit_form = limit_form_from_name(c.limit_form);
    wo.torus_m = c.torus_m;
    wo.action_nodes = c.action_nodes_default;
    const WeakResult r =
        weak_convergence_experiment(ins.model, ins.pert, ins.y0, c.t, c.epsilons, wo);

    CsvBuilder csv({"epsilon", "component", "mean", "mean_se", "var", "var_se",
                    "cdf_distance"});
    for (const WeakRow& row : r.rows)
        csv.row({fd(row.epsilon), std::to_string(row.component), fd(row.mean),
                 fd(row.mean_se), fd(row.var), fd(row.var_se), fd(row.cdf_distance)});
    out.files.emplace_back("moments.csv", csv.take());
    for (const auto& f : r.flags) out.manifest["flags"].push_back(f);
    Json exits = Json::array();
    for (double e : r.exit_fraction) exits.push_back(e);
    out.manifest["summary"] = {{"radius", r.radius},
                               {"exit_fraction", exits},
                               {"exit_fraction_limit", r.exit_fraction_limit}};
}

void run_poisson_check(const ExperimentConfig& c, const Instruments& ins, ResultBundle& out) {
    const int n = ins.model.n;
    const TorusGrid grid(n, c.torus_m);
    const Vec I0 = ins.model.actions_of_energies(ins.h0);
    GeneratorSpec gen{ins.model.freq_matrix(I0), ins.model.drift_freq(I0)};

    CsvBuilder csv({"trial", "n", "m", "residual"});
    double worst = 0;
    const int trials = std::max(1, c.n_paths);
    for (int trial = 0; trial < trials; ++trial) {
        // random band-limited centered f from counter-based draws
        TorusFunction f;
        f.grid = grid;
        f.actions = I0;
        f.values.assign(grid.size(), 0.0);
        const int kmax = std::min(4, grid.m / 8);
        std::uint64_t draw = 0;
        std::vector<int> mode(n);
        auto add_mode = [&](const std::vector<int>& mv, double re, double im) {
            grid.for_each([&](std::int64_t flat, const Vec& theta) {
                double phase = 0;
                for (int d = 0; d < n; ++d) phase += mv[d] * theta[d];
                f.values[flat] += re * std::cos(phase) + im * std::sin(phase);
            });
        };
        const int n_modes = 3;
        for (int q = 0; q < n_modes; ++q) {
            bool nonzero = false;
            for (int d = 0; d < n; ++d) {
                const double u = gaussian_at(c.seed, 7777 + trial, 0, draw++);
                mode[d] = static_cast<int>(std::floor(std::abs(u) * 2.0)) % (2 * kmax + 1) - kmax;
                if (mode[d] != 0) nonzero = true;
            }
            if (!nonzero) mode[0] = 1;
            const double re = gaussian_at(c.seed, 7777 + trial, 1, draw);
            const double im = gaussian_at(c.seed, 7777 + trial, 2, draw);
            ++draw;
            add_mode(mode, re, im);
        }
        const PoissonResult pr = solve_poisson(f, gen, {});
        const TorusFunction back = apply_generator(pr.h, gen);
        double resid = 0;
        for (std::int64_t g = 0; g < grid.size(); ++g)
            resid = std::max(resid, std::abs(back.values[g] - f.values[g]));
        worst = std::max(worst, resid);
        csv.row({std::to_string(trial), std::to_string(n), std::to_string(grid.m), fd(resid)});
    }
    out.files.emplace_back("poisson.csv", csv.take());
    out.manifest["summary"] = {{"worst_residual", worst}, {"trials", trials}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    ExperimentConfig c;
    auto get = [&](const char* key, auto fallback) {
        using T = decltype(fallback);
        return j.contains(key) ? j.at(key).get<T>() : fallback;
    };
    c.experiment = get("experiment", c.experiment);
    c.model = get("model", c.model);
    c.model_params = get_vec(j, "model_params", c.model_params);
    c.perturbation = get("perturbation", c.perturbation);
    c.y0 = get_vec(j, "y0", c.y0);
    c.actions0 = get_vec(j, "actions0", c.actions0);
    c.angles0 = get_vec(j, "angles0", c.angles0);
    if (j.contains("epsilon"))
        c.epsilons = {j.at("epsilon").get<double>()};
    else
        c.epsilons = get_vec(j, "epsilons", c.epsilons);
    c.t = get("t", c.t);
    c.dt = get("dt", c.dt);
    c.dt_cap = get("dt_cap", c.dt_cap);
    c.dt_eps_scale = get("dt_eps_scale", c.dt_eps_scale);
    c.beta = get("beta", c.beta);
    c.n_paths = get("n_paths", c.n_paths);
    c.torus_m = get("torus_m", c.torus_m);
    c.record_samples = get("record_samples", c.record_samples);
    c.action_lo = get_vec(j, "action_lo", c.action_lo);
    c.action_hi = get_vec(j, "action_hi", c.action_hi);
    c.action_nodes = j.contains("action_nodes")
                         ? j.at("action_nodes").get<std::vector<int>>()
                         : c.action_nodes;
    c.action_nodes_default = get("action_nodes_default", c.action_nodes_default);
    c.radius = get("radius", c.radius);
    c.delta = get("delta", c.delta);
    c.ode_dt = get("ode_dt", c.ode_dt);
    c.limit_dt = get("limit_dt", c.limit_dt);
    c.scheme = get("scheme", c.scheme);
    c.limit_form = get("limit_form", c.limit_form);
    c.limit_effective = get("limit_effective", c.limit_effective);
    c.seed = get("seed", c.seed);
    c.workers = get("workers", c.workers);
    c.out_dir = get("out", c.out_dir);
    return c;
}

Json ExperimentConfig::to_json() const {
    Json j;
    j["experiment"] = experiment;
    j["model"] = model;
    j["model_params"] = model_params;
    j["perturbation"] = perturbation;
    j["y0"] = y0;
    j["actions0"] = actions0;
    j["angles0"] = angles0;
    j["epsilons"] = epsilons;
    j["t"] = t;
    j["dt"] = dt;
    j["dt_cap"] = dt_cap;
    j["dt_eps_scale"] = dt_eps_scale;
    j["beta"] = beta;
    j["n_paths"] = n_paths;
    j["torus_m"] = torus_m;
    j["record_samples"] = record_samples;
    j["action_lo"] = action_lo;
    j["action_hi"] = action_hi;
    j["action_nodes"] = action_nodes;
    j["action_nodes_default"] = action_nodes_default;
    j["radius"] = radius;
    j["delta"] = delta;
    j["ode_dt"] = ode_dt;
    j["limit_dt"] = limit_dt;
    j["scheme"] = scheme;
    j["limit_form"] = limit_form;
    j["limit_effective"] = limit_effective;
    j["seed"] = seed;
    j["workers"] = workers;
    j["out"] = out_dir;
    return j;
}

void ExperimentConfig::validate() const {
    static const std::vector<std::string> known = {
        "simulate", "average", "rate", "exitprob", "limit2", "weak2", "poisson-check"};
    if (std::find(known.begin(), known.end(), experiment) == known.end())
        throw Error(ErrorClass::validation, "unknown experiment '" + experiment + "'");
    if (epsilons.empty() && experiment != "average" && experiment != "poisson-check")
        throw Error(ErrorClass::validation, "epsilon grid must not be empty");
    for (size_t i = 1; i < epsilons.size(); ++i)
        if (!(epsilons[i] < epsilons[i - 1]))
            throw Error(ErrorClass::validation, "epsilons must be strictly decreasing");
    for (double e : epsilons)
        if (!(e >= 0) || !std::isfinite(e))
            throw Error(ErrorClass::validation, "epsilons must be finite and >= 0");
    if (!(t > 0)) throw Error(ErrorClass::validation, "t must be positive");
    if (dt < 0 || !(dt_cap > 0))
        throw Error(ErrorClass::validation, "dt must be >= 0 and dt_cap positive");
    if (n_paths < 1) throw Error(ErrorClass::validation, "n_paths must be positive");
    if (!(beta > 1.0)) throw Error(ErrorClass::validation, "beta must exceed 1");
    if (torus_m < 2 || (torus_m & (torus_m - 1)) != 0)
        throw Error(ErrorClass::validation, "torus_m must be a power of two");
    if (radius < 0 || delta < 0)
        throw Error(ErrorClass::validation, "radius and delta must be >= 0");
    if (workers < 0) throw Error(ErrorClass::validation, "workers must be >= 0");
    scheme_from_name(scheme);
    limit_form_from_name(limit_form);
}

ResultBundle run(const ExperimentConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    Instruments ins = instantiate(config);

    ResultBundle out;
    out.manifest["artifact"] = "stochav";
    out.manifest["version"] = kVersion;
    out.manifest["experiment"] = config.experiment;
    out.manifest["config"] = config.to_json();
    out.manifest["seed"] = config.seed;
    out.manifest["workers"] = resolve_workers(config.workers);
    out.manifest["flags"] = Json::array();

    if (config.experiment == "simulate")
        run_simulate(config, ins, out);
    else if (config.experiment == "average")
        run_average(config, ins, out);
    else if (config.experiment == "rate")
        run_rate(config, ins, out);
    else if (config.experiment == "exitprob")
        run_exitprob(config, ins, out);
    else if (config.experiment == "limit2")
        run_limit2(config, ins, out);
    else if (config.experiment == "weak2")
        run_weak2(config, ins, out);
    else if (config.experiment == "poisson-check")
        run_poisson_check(config, ins, out);

    const auto t1 = std::chrono::steady_clock::now();
    out.manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(t1 - t0).count();
    Json files = Json::array();
    for (const auto& [name, bytes] : out.files)
        files.push_back({{"name", name}, {"fnv1a64", fnv1a64_hex(bytes)}});
    out.manifest["files"] = files;
    return out;
}

void emit_tables(const ResultBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorClass::io, "cannot create output directory " + dir);
    for (const auto& [name, bytes] : bundle.files) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw Error(ErrorClass::io, "cannot open " + name + " for writing");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw Error(ErrorClass::io, "short write on " + name);
    }
    std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!mf) throw Error(ErrorClass::io, "cannot write manifest.json");
    mf << bundle.manifest.dump(2) << "\n";
}

Json diffusion_to_json(const DiffusionModel& dm, const ExperimentConfig& config) {
    Json j;
    j["model"] = config.model;
    j["perturbation"] = config.perturbation;
    j["n"] = dm.n;
    j["grid"] = {{"lo", dm.grid.lo}, {"hi", dm.grid.hi}, {"nodes", dm.grid.nodes}};
    j["torus_m"] = config.torus_m;
    Json nodes = Json::array();
    for (std::int64_t f = 0; f < dm.grid.size(); ++f) {
        Json nj;
        nj["actions"] = dm.grid.node(f);
        nj["a"] = dm.a[f].data;          // row-major
        nj["sigma"] = dm.sigma[f].data;  // row-major
        nj["b"] = dm.b[f];
        nodes.push_back(std::move(nj));
    }
    j["nodes"] = std::move(nodes);
    j["metadata"] = {
        {"a_symmetrized", true},
        {"min_eigenvalue_before_clamp", dm.min_eigenvalue},
        {"band_tail_max", dm.band_tail_max},
        {"flags", dm.flags},
        // scaling that maps the tabulated (sigma, b) to the SDE whose law the
        // rescaled system follows: S S^T = 2a and drift = -2b
        {"effective_transform", {{"sigma_scale", std::sqrt(2.0)}, {"drift_scale", -2.0}}},
    };
    return j;
}

}  // namespace stochav
