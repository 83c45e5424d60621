/** \file symplectic.hpp
    \brief Canonical symplectic operations on R^(2n) with omega = sum dq_i ^ dp_i:
           Hamiltonian vector fields X_H = (dH/dp, -dH/dq), Poisson brackets, and
           the pairing omega(X_H, K) = dH(K) that drives every averaged quantity.
*/
#pragma once

#include "stochav/types.hpp"

namespace stochav {

/// X_H(x) = (dH/dp, -dH/dq); satisfies omega(X_H, v) = dH(v) for all v.
Vec symplectic_gradient(const ScalarFunction& H, const Vec& x);

/// Wraps X_H as a SmoothField (closed-form components via H's gradient).
SmoothField hamiltonian_field(const ScalarFunction& H);

/// {F,G}(x) = sum_i (dF/dp_i dG/dq_i - dF/dq_i dG/dp_i), so {p_1,q_1} = 1.
/// Antisymmetric; vanishes for commuting Hamiltonians.  With this convention
/// {F,G} = dG(X_F) = omega(X_G, X_F).
double poisson_bracket(const ScalarFunction& F, const ScalarFunction& G, const Vec& x);

/// omega(X_H, K)(x) = dH(x)(K(x)): the rate of change of H along K.
/// When K = X_k this equals poisson_bracket(k, H, x).
double omega_pairing(const ScalarFunction& H, const SmoothField& K, const Vec& x);

/// Same pairing against an already-evaluated field value.
double omega_pairing(const ScalarFunction& H, const Vec& k_value, const Vec& x);

}  // namespace stochav
