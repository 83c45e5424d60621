/** \file model.hpp
    \brief Integrable model library: an integrable family {H_i} with its exact
           action-angle chart and frequency data, plus transversal perturbations.

    Shipped systems:
      "harmonic"  the oscillator family H_1 = 1/2 sum a_i^2 q_i^2 + 1/2 sum p_i^2,
                  H_k = 1/2 a_k q_k^2 + 1/2 p_k^2 / a_k (k >= 2), chart
                  q_i = sqrt(2 I_i / a_i) cos th_i, p_i = sqrt(2 a_i I_i) sin th_i
      "r4"        the two-oscillator system on R^4 driven by B and W with
                  G_1 = 1/2(x1^2+x3^2) + 1/2(x2^2+x4^2), G_2 = 1/2(x2^2+x4^2),
                  and the perturbations K1, K2, K3
      "1dof"      H = 1/2(q^2+p^2) with perturbation Hamiltonian k(q,p) = q,
                  the desk-scale instance with closed-form second-order data

    Models are immutable after construction and safe to share across workers.
*/
#pragma once

#include <memory>
#include <optional>
#include <string>

#include "stochav/symplectic.hpp"
#include "stochav/types.hpp"

namespace stochav {

/// Allocation-free evaluator for the SDE right-hand side; the hot path of the
/// Monte Carlo harness.  out = sum_k cB[k] X_{H_k}(x) + cV V(x), length 2n.
struct SdeKernel {
    int n = 0;
    virtual ~SdeKernel() = default;
    virtual void eval(const double* x, const double* cB, double cV, double* out) const = 0;
    /// H_1..H_n at x (used for per-step exit detection).
    virtual void energies(const double* x, double* H) const = 0;
};

/// Allocation-free perturbation evaluator: out += c * K(x).
struct PerturbKernel {
    int n = 0;
    virtual ~PerturbKernel() = default;
    virtual void add(const double* x, double c, double* out) const = 0;
    virtual bool in_domain(const double* /*x*/) const { return true; }
};

struct Perturbation {
    std::string name;
    SmoothField field;                            ///< K
    std::optional<ScalarFunction> hamiltonian_k;  ///< k with K = X_k, when known
    std::function<bool(const Vec&)> domain;       ///< singularity predicate
    /// Printed verbatim from a source whose closedness did not verify; kept
    /// with vanishing averages checked numerically instead of assumed.
    bool unverified_hamiltonian = false;
    std::shared_ptr<const PerturbKernel> kernel;

    bool in_domain(const Vec& x) const { return !domain || domain(x); }
};

struct IntegrableModel {
    std::string name;
    int n = 0;                                  ///< degrees of freedom
    std::vector<ScalarFunction> hamiltonians;   ///< H_1..H_n
    SmoothField drift;                          ///< V (zero for all shipped systems)

    std::function<ActionAngle(const Vec&)> to_action_angle;
    std::function<Vec(const ActionAngle&)> from_action_angle;
    /// Row k = d(H_k o phi)/dI — the fiber frequency data omega_k^i(I).
    std::function<Mat(const Vec&)> freq_matrix;
    /// omega_0(I) from the drift V; identically zero when V = 0.
    std::function<Vec(const Vec&)> drift_freq;
    /// d(I,theta)/dx at x: rows 0..n-1 are dI_i, rows n..2n-1 are dtheta_i.
    std::function<Mat(const Vec&)> chart_jacobian;

    Vec chart_center;          ///< a0 = H at the chart base point (energy coordinates)
    double chart_radius = 0;   ///< r with U0 = { x : ||H(x) - a0|| <= r }

    std::shared_ptr<const SdeKernel> kernel;

    Vec energies(const Vec& x) const {
        Vec H(n);
        kernel->energies(x.data(), H.data());
        return H;
    }
    /// Actions of the fiber with energies a (inverse of I -> H(phi(I,.))).
    std::function<Vec(const Vec&)> actions_of_energies;
};

/// The harmonic-oscillator family for frequency parameters a_i > 0.
IntegrableModel build_harmonic_family(const Vec& a);

struct R4Example {
    IntegrableModel model;
    Perturbation k1, k2, k3;
};
/// The R^4 two-oscillator system with its three printed perturbations.
R4Example build_r4_example();

struct OneDofCase {
    IntegrableModel model;
    Perturbation pert;   ///< K = X_q = (0,-1), k(q,p) = q
};
OneDofCase build_1dof_case();

/// Perturbation K = X_k for a closed-form Hamiltonian k.
Perturbation hamiltonian_perturbation(std::string name, const ScalarFunction& k);

/// K identically zero.
Perturbation zero_perturbation(int n);

/// Half the distance from energies h0 to the critical set {some I_i = 0},
/// the default chart-ball radius around H(y0).
double default_chart_radius(const IntegrableModel& model, const Vec& h0);

/// Per-dimension half-widths of the action box bounding the chart ball
/// { ||h - h0|| <= r } under the (locally linear) energy-action change.
Vec action_halfwidths(const IntegrableModel& model, const Vec& h0, double r);

/// Registry used by the CLI: model by name + parameter vector.
IntegrableModel make_model(const std::string& name, const Vec& params = {});
/// Named perturbation for a model.  Every model accepts "none", "xq1"
/// (k = q_1) and "xh1sq" (k = H_1^2); "r4" adds "k1","k2","k3"; "1dof" adds "kq".
Perturbation make_perturbation(const IntegrableModel& model, const std::string& name);
std::vector<std::string> list_models();
std::vector<std::string> list_perturbations(const std::string& model_name);

}  // namespace stochav
