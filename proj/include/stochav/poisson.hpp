/** \file poisson.hpp
    \brief Spectral solution of the fiber Poisson equation L0 h = f on T^n.

    In the action-angle chart the fiber generator is
        L0 = 1/2 sum_k (sum_i w_k^i d/dtheta_i)^2 + sum_i w0^i d/dtheta_i,
    so e^{i m.theta} is an eigenfunction with eigenvalue
        lambda(m) = -1/2 sum_k (m . w_k)^2 + i (m . w0).
    For centered f the unique centered solution has coefficients
    h_hat(m) = f_hat(m) / lambda(m), h_hat(0) = 0.
*/
#pragma once

#include "stochav/fft.hpp"
#include "stochav/torus_grid.hpp"

namespace stochav {

/// Fiber frequency data: rows of `freq` are the vectors w_k, `drift_freq`
/// is w0 (zero for every shipped model).
struct GeneratorSpec {
    Mat freq;
    Vec drift_freq;

    /// L0 eigenvalue on the mode with integer vector m.
    Cplx eigenvalue(const std::vector<int>& m) const;
    /// Nonsingularity of the frequency matrix (fiber ellipticity).
    bool elliptic(double tol = 1e-12) const;
};

/// Grid samples of a function on one fiber.
struct TorusFunction {
    TorusGrid grid;
    std::vector<Cplx> values;  ///< row-major over the tensor grid
    Vec actions;               ///< the fiber it lives over (metadata)

    static TorusFunction sample(const TorusGrid& grid,
                                const std::function<double(const Vec&)>& f);

    Cplx mean() const;
    double max_abs() const;
    /// Largest |coefficient| carried by modes with |m_d| >= m/4 in some
    /// dimension, relative to the largest coefficient overall.
    double band_tail(const std::vector<Cplx>& coeffs) const;
    bool is_real(double tol = 1e-9) const;
};

struct PoissonOptions {
    double centering_tol = 1e-10;   ///< |mean f| <= tol * max(1, ||f||_inf)
    double resonance_tol = 1e-10;   ///< |lambda(m)| < tol * max |lambda| with f_hat(m) != 0
    double coeff_floor = 1e-13;     ///< f_hat(m) treated as zero below floor * max
    double band_tol = 1e-8;         ///< band-limitedness warning threshold
    double gauge_offset = 0.0;      ///< added to h (inverse-choice test hook)
};

struct PoissonResult {
    TorusFunction h;
    double band_tail = 0.0;         ///< measured tail of f
    bool band_limited = true;
};

/// Solve L0 h = f for centered f; h is returned centered (plus any requested
/// gauge offset).  Real input produces real values.
PoissonResult solve_poisson(const TorusFunction& f, const GeneratorSpec& gen,
                            const PoissonOptions& opts = {});

/// Spectral application of L0 (roundtrip oracle for the solver).
TorusFunction apply_generator(const TorusFunction& h, const GeneratorSpec& gen);

/// Spectral d/dtheta_axis.
TorusFunction angle_derivative(const TorusFunction& h, int axis);

}  // namespace stochav
