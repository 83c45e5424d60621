/** \file averaging.hpp
    \brief First-scaling machinery: torus averages Q^g, the averaged ODE
           dHbar_i/dt = avg omega(X_{H_i}, K), and the Monte Carlo experiments
           for the eps^(1/4) rate bound and the exit-probability bound.
*/
#pragma once

#include "stochav/integrator.hpp"
#include "stochav/stats.hpp"
#include "stochav/torus_grid.hpp"

namespace stochav {

/// Average of g over the fiber with actions `a` (uniform tensor quadrature).
double torus_average(const std::function<double(const Vec&)>& g,
                     const IntegrableModel& model, const Vec& actions,
                     const TorusGrid& grid);

/// Average over the fiber with *energies* h (chart converts to actions).
double torus_average_energy(const std::function<double(const Vec&)>& g,
                            const IntegrableModel& model, const Vec& energies,
                            const TorusGrid& grid);

/// The averaged deterministic system in energy coordinates.
struct AveragedODE {
    int n = 0;
    Vec a0;                                ///< initial energies H(y0)
    std::function<Vec(const Vec&)> rhs;    ///< field on the chart domain
};

/// rhs(a)_i = average over the fiber of omega(X_{H_i}, K) = dH_i(K).
AveragedODE averaged_rhs(const IntegrableModel& model, const Perturbation& pert,
                         const TorusGrid& grid);

struct OdePath {
    Vec times;
    std::vector<Vec> values;
    /// First time ||Hbar - Hbar(0)|| >= radius (linearly interpolated), or +inf.
    double exit_time = std::numeric_limits<double>::infinity();
    /// Value at time t: linear interpolation of the stored samples, frozen
    /// after the final sample.
    Vec at(double t) const;
    /// First time ||Hbar - Hbar(0)|| >= rho (for rho <= solve radius), or +inf.
    double crossing_time(double rho) const;
};

/// Classical RK4 on the averaged ODE, stopped at the chart ball of `radius`.
OdePath solve_averaged_ode(const AveragedODE& ode, double horizon, double dt,
                           double radius);

struct RateFitResult {
    Vec epsilons;
    Vec errors;        ///< (E sup ||H^eps - Hbar||^beta)^(1/beta)
    Vec stderrs;
    double beta = 2.0;
    int n_paths = 0;
    double slope = 0.0;        ///< log-log least squares
    double slope_ci95 = 0.0;   ///< half-width of the 95% CI
    std::vector<std::string> flags;
};

struct RateOptions {
    double beta = 2.0;
    int n_paths = 200;
    std::uint64_t seed = 0;
    int workers = 1;
    Scheme scheme = Scheme::midpoint;
    double radius = 0.0;        ///< 0: model default at H(y0)
    double dt_cap = 1e-3;       ///< dt = min(dt_cap, eps^2 * dt_eps_scale)
    double dt_eps_scale = 0.1;
    double ode_dt = 1e-3;
    int torus_m = 64;
    std::int64_t record_samples = 512;  ///< recorded samples per path for the sup
};

/// Monte Carlo sup-norm error of H^eps against the averaged path at
/// rescaled time t, with a log-log slope fit of error against epsilon.
RateFitResult rate_experiment(const IntegrableModel& model, const Perturbation& pert,
                              const Vec& y0, double t, const Vec& epsilons,
                              const RateOptions& opts);

struct ExitProbResult {
    Vec epsilons;
    Vec p_exit;
    Vec stderrs;
    double t_delta = 0.0;
    double radius = 0.0;
    double delta = 0.0;
    bool not_applicable = false;   ///< T_delta infinite (vanishing averaged field)
    std::vector<std::string> flags;
};

/// Estimated P(T^eps < T_delta) per epsilon: the chance the perturbed
/// energies leave the chart ball before the averaged path comes within
/// delta of its boundary.
ExitProbResult exit_probability_experiment(const IntegrableModel& model,
                                           const Perturbation& pert, const Vec& y0,
                                           double delta, const Vec& epsilons,
                                           const RateOptions& opts);

}  // namespace stochav
