#include "stochav/symplectic.hpp"

namespace stochav {

Vec symplectic_gradient(const ScalarFunction& H, const Vec& x) {
    const int n = H.dof();
    Vec g = H.gradient(x);
    Vec out(2 * n);
    for (int i = 0; i < n; ++i) {
        out[i] = g[n + i];       // dq_i/dt =  dH/dp_i
        out[n + i] = -g[i];      // dp_i/dt = -dH/dq_i
    }
    return out;
}

SmoothField hamiltonian_field(const ScalarFunction& H) {
    const int n = H.dof();
    return SmoothField(n, [H, n](const Vec& x) {
        Vec g = H.gradient(x);
        Vec out(2 * n);
        for (int i = 0; i < n; ++i) {
            out[i] = g[n + i];
            out[n + i] = -g[i];
        }
        return out;
    });
}

double poisson_bracket(const ScalarFunction& F, const ScalarFunction& G, const Vec& x) {
    if (F.dof() != G.dof())
        throw Error(ErrorClass::validation, "poisson_bracket: dimension mismatch");
    const int n = F.dof();
    Vec gf = F.gradient(x), gg = G.gradient(x);
    double s = 0;
    for (int i = 0; i < n; ++i)
        s += gf[n + i] * gg[i] - gf[i] * gg[n + i];
    if (!std::isfinite(s)) throw Error(ErrorClass::numeric, "poisson_bracket: non-finite");
    return s;
}

double omega_pairing(const ScalarFunction& H, const SmoothField& K, const Vec& x) {
    return omega_pairing(H, K(x), x);
}

double omega_pairing(const ScalarFunction& H, const Vec& k_value, const Vec& x) {
    Vec g = H.gradient(x);
    if (g.size() != k_value.size())
        throw Error(ErrorClass::validation, "omega_pairing: dimension mismatch");
    double s = dot(g, k_value);
    if (!std::isfinite(s)) throw Error(ErrorClass::numeric, "omega_pairing: non-finite");
    return s;
}

}  // namespace stochav
