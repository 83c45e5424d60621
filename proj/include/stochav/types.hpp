/** \file types.hpp
    \brief Core value types: phase points, small dense matrices, smooth
           functions and vector fields on R^(2n), and the error taxonomy.
*/
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochav {

/// Phase points and action points are plain coordinate vectors.
/// A phase point has length 2n ordered (q_1..q_n, p_1..p_n).
using Vec = std::vector<double>;

enum class ErrorClass {
    validation,   ///< bad config or argument
    domain,       ///< point outside a declared domain / singularity hit
    resonance,    ///< Poisson solve hit a (near-)resonant mode
    numeric,      ///< non-finite value or failed iteration
    io,           ///< filesystem failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& msg) : std::runtime_error(msg), cls_(cls) {}
    ErrorClass error_class() const { return cls_; }
private:
    ErrorClass cls_;
};

inline const char* error_class_name(ErrorClass c) {
    switch (c) {
        case ErrorClass::validation: return "validation";
        case ErrorClass::domain:     return "domain";
        case ErrorClass::resonance:  return "resonance";
        case ErrorClass::numeric:    return "numeric";
        case ErrorClass::io:         return "io";
    }
    return "unknown";
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Checks the PhasePoint invariants: length 2n with n >= 1, all entries finite.
inline void check_phase_point(const Vec& x, int n) {
    if (n < 1 || x.size() != static_cast<size_t>(2 * n))
        throw Error(ErrorClass::validation,
                    "phase point has length " + std::to_string(x.size()) +
                    ", expected " + std::to_string(2 * n));
    if (!all_finite(x))
        throw Error(ErrorClass::numeric, "phase point has non-finite entries");
}

/// Dense row-major matrix, sized for n x n frequency data and chart Jacobians.
struct Mat {
    int rows = 0, cols = 0;
    Vec data;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}
    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    Vec apply(const Vec& v) const {
        Vec out(rows, 0.0);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) out[i] += (*this)(i, j) * v[j];
        return out;
    }
    Mat transposed() const {
        Mat t(cols, rows);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }
    Mat operator*(const Mat& o) const {
        Mat out(rows, o.cols);
        for (int i = 0; i < rows; ++i)
            for (int k = 0; k < cols; ++k) {
                double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (int j = 0; j < o.cols; ++j) out(i, j) += a * o(k, j);
            }
        return out;
    }
};

/// Default central-difference step: eps^(1/3) scaled by the point size.
inline double fd_step(const Vec& x) {
    double amax = 1.0;
    for (double v : x) amax = std::max(amax, std::abs(v));
    return std::cbrt(std::numeric_limits<double>::epsilon()) * amax;
}

/// A scalar observable H(x) on R^(2n) with an optional closed-form gradient.
/// Without one, gradients fall back to central differences with step h_fd.
class ScalarFunction {
public:
    ScalarFunction() = default;
    ScalarFunction(int n, std::function<double(const Vec&)> f,
                   std::function<Vec(const Vec&)> grad = nullptr)
        : n_(n), f_(std::move(f)), grad_(std::move(grad)) {}

    int dof() const { return n_; }
    bool has_gradient() const { return static_cast<bool>(grad_); }

    double operator()(const Vec& x) const {
        check_phase_point(x, n_);
        double v = f_(x);
        if (!std::isfinite(v)) throw Error(ErrorClass::numeric, "scalar function evaluated non-finite");
        return v;
    }

    Vec gradient(const Vec& x) const {
        check_phase_point(x, n_);
        Vec g = grad_ ? grad_(x) : fd_gradient(x);
        if (!all_finite(g)) throw Error(ErrorClass::numeric, "gradient evaluated non-finite");
        return g;
    }

    /// Central-difference gradient, bypassing any closed form (test oracle hook).
    Vec fd_gradient(const Vec& x, double h = 0.0) const {
        if (h <= 0.0) h = fd_step(x);
        Vec g(x.size()), xp = x, xm = x;
        for (size_t i = 0; i < x.size(); ++i) {
            xp[i] = x[i] + h;
            xm[i] = x[i] - h;
            g[i] = (f_(xp) - f_(xm)) / (2.0 * h);
            xp[i] = x[i];
            xm[i] = x[i];
        }
        return g;
    }

private:
    int n_ = 0;
    std::function<double(const Vec&)> f_;
    std::function<Vec(const Vec&)> grad_;
};

/// A vector field on R^(2n): 2n component evaluators, optional closed-form
/// Jacobian, and the same central-difference fallback as ScalarFunction.
class SmoothField {
public:
    SmoothField() = default;
    SmoothField(int n, std::function<Vec(const Vec&)> f,
                std::function<Mat(const Vec&)> jac = nullptr)
        : n_(n), f_(std::move(f)), jac_(std::move(jac)) {}

    static SmoothField zero(int n) {
        return SmoothField(n, [n](const Vec&) { return Vec(2 * n, 0.0); });
    }

    int dof() const { return n_; }
    bool empty() const { return !f_; }

    Vec operator()(const Vec& x) const {
        check_phase_point(x, n_);
        Vec v = f_(x);
        if (v.size() != x.size())
            throw Error(ErrorClass::validation, "field component count mismatch");
        if (!all_finite(v)) throw Error(ErrorClass::numeric, "field evaluated non-finite");
        return v;
    }

    /// Jacobian J_ij = d f_i / d x_j, closed form or central differences.
    Mat jacobian(const Vec& x, double h = 0.0) const {
        check_phase_point(x, n_);
        if (jac_) return jac_(x);
        if (h <= 0.0) h = fd_step(x);
        const int d = static_cast<int>(x.size());
        Mat J(d, d);
        Vec xp = x, xm = x;
        for (int j = 0; j < d; ++j) {
            xp[j] = x[j] + h;
            xm[j] = x[j] - h;
            Vec fp = f_(xp), fm = f_(xm);
            for (int i = 0; i < d; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * h);
            xp[j] = x[j];
            xm[j] = x[j];
        }
        return J;
    }

private:
    int n_ = 0;
    std::function<Vec(const Vec&)> f_;
    std::function<Mat(const Vec&)> jac_;
};

/// Action-angle coordinates: actions I in the chart domain D, angles in [0, 2pi).
struct ActionAngle {
    Vec actions;
    Vec angles;
};

inline double wrap_angle(double t) {
    const double two_pi = 2.0 * M_PI;
    double w = std::fmod(t, two_pi);
    if (w < 0) w += two_pi;
    return w;
}

inline double norm2(const Vec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace stochav
