/** \file diffusion.hpp
    \brief Second-order (1/eps^2) machinery for Hamiltonian perturbations:
           assembly of the diffusion coefficients over an action grid, the
           limiting SDE across the level sets, and the weak-convergence
           diagnostics against the rescaled perturbed system.

    assemble_diffusion evaluates the integrals exactly as printed in the
    source formulas,
        a_ij(a) = -avg[ w(K,X_{H_j}) . L0^{-1} w(K,X_{H_i}) ],   sigma = sqrt(a),
        b_j(a)  = 1/2 avg[ L_K L0^{-1} w(X_{H_j},K) ],
    (1-dof closed form: a = 2I, b = -1).  The generator actually governing
    H(y^eps_{t/eps^2}), however, is  1/2 sum (2 a_ij) didj + sum (-2 b_j) dj —
    the printed pairing carries a factor-2 and drift-sign slip, which the
    Monte Carlo harness resolves empirically (see tests/test_diffusion.cpp).
    DiffusionModel therefore exposes both the printed fields and the
    `effective` coefficients that reproduce the weak limit.
*/
#pragma once

#include "stochav/averaging.hpp"
#include "stochav/poisson.hpp"

namespace stochav {

struct ActionGridSpec {
    Vec lo, hi;              ///< per-dimension action bounds
    std::vector<int> nodes;  ///< per-dimension node counts (>= 3)

    std::int64_t size() const {
        std::int64_t s = 1;
        for (int k : nodes) s *= k;
        return s;
    }
    double spacing(int d) const { return (hi[d] - lo[d]) / (nodes[d] - 1); }
    Vec node(std::int64_t flat) const;
    void validate(int n) const;
    /// Inside the box, up to slack_frac of the per-dimension range.
    bool contains(const Vec& I, double slack_frac) const;
};

enum class LimitForm { stratonovich, ito };
LimitForm limit_form_from_name(const std::string& name);

struct DiffusionModel {
    int n = 0;
    ActionGridSpec grid;
    std::vector<Mat> a;      ///< symmetrized a_ij per node
    std::vector<Mat> sigma;  ///< PSD square root per node
    std::vector<Vec> b;      ///< b_j per node

    std::function<Vec(const Vec&)> actions_of_energies;  ///< copied from the model

    double min_eigenvalue = 0.0;  ///< most negative eigenvalue met before clamping
    double band_tail_max = 0.0;
    std::vector<std::string> flags;

    /// Multilinear interpolation in action space.
    Mat a_at(const Vec& actions) const;
    Mat sigma_at(const Vec& actions) const;
    Vec b_at(const Vec& actions) const;

    /// Same fields addressed by energy coordinates z.
    Mat sigma_at_energy(const Vec& z) const { return sigma_at(actions_of_energies(z)); }
    Vec b_at_energy(const Vec& z) const { return b_at(actions_of_energies(z)); }
};

struct AssembleOptions {
    PoissonOptions poisson;
    double neg_eig_tol = 1e-8;  ///< warn when an eigenvalue is below -tol
    int workers = 1;
};

/// Build (a, sigma, b) on the action grid for a Hamiltonian perturbation.
DiffusionModel assemble_diffusion(const IntegrableModel& model, const Perturbation& pert,
                                  const ActionGridSpec& grid, const TorusGrid& torus,
                                  const AssembleOptions& opts = {});

struct LimitOptions {
    double horizon = 1.0;
    double dt = 1e-4;
    std::int64_t record_stride = 1;
    LimitForm form = LimitForm::stratonovich;
    /// Integrate the generator-matched (effective) coefficients instead of
    /// the printed ones.
    bool effective = false;
    Vec stop_center;          ///< energies; empty = z0
    double stop_radius = 0.0; ///< <= 0 disables stopping
};

struct LimitPath {
    Vec times;
    std::vector<Vec> values;  ///< z in energy coordinates
    double exit_time = std::numeric_limits<double>::infinity();
    bool exited = false;
    /// Stopped value: radial projection onto the stopping sphere when the
    /// step overshoots it (the continuous stopped process lives on the
    /// sphere), otherwise the final state.
    Vec stopped_value;
};

/// Integrate dz = sigma(z) o dW + b(z) dt (Heun) or its Ito reading (Euler-
/// Maruyama), stopped at the chart ball.
LimitPath simulate_limit_sde(const DiffusionModel& dm, const Vec& z0,
                             const NoiseSpec& noise, const LimitOptions& opts);

struct WeakOptions {
    int n_paths = 1000;
    std::uint64_t seed = 0;
    int workers = 1;
    Scheme scheme = Scheme::midpoint;
    double radius = 0.0;  ///< 0: model default at H(y0)
    double dt_cap = 1e-3;
    double dt_eps_scale = 0.1;
    double limit_dt = 1e-5;
    LimitForm limit_form = LimitForm::stratonovich;
    int torus_m = 64;
    int action_nodes = 257;  ///< per dimension
};

struct WeakRow {
    double epsilon = 0.0;  ///< 0 marks the limit-SDE side
    int component = 0;
    double mean = 0.0, mean_se = 0.0;
    double var = 0.0, var_se = 0.0;
    double cdf_distance = 0.0;  ///< two-sample KS against the limit side
};

struct WeakResult {
    std::vector<WeakRow> rows;
    Vec epsilons;
    Vec exit_fraction;          ///< perturbed side, per epsilon
    double exit_fraction_limit = 0.0;
    double radius = 0.0;
    std::vector<std::string> flags;
};

/// Second-scaling diagnostics: the law of H(y^eps_{t/eps^2}) stopped at
/// the chart ball against the limiting SDE, per epsilon.
WeakResult weak_convergence_experiment(const IntegrableModel& model,
                                       const Perturbation& pert, const Vec& y0,
                                       double t, const Vec& epsilons,
                                       const WeakOptions& opts);

}  // namespace stochav
