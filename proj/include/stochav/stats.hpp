/** \file stats.hpp
    \brief Monte Carlo summaries, empirical-distribution distances, the
           log-log regression used by the rate fit, and the symmetric
           eigensolver backing PSD matrix square roots.
*/
#pragma once

#include "stochav/types.hpp"

namespace stochav {

struct Moments {
    std::int64_t count = 0;
    double mean = 0.0;
    double var = 0.0;       ///< unbiased sample variance
    double se_mean = 0.0;   ///< sqrt(var / count)
    double se_var = 0.0;    ///< normal-theory standard error of the variance
};

/// Two-pass moments in a fixed summation order, so results do not depend on
/// worker count.
Moments moments(const Vec& samples);

/// Kolmogorov-Smirnov distance of samples (reduced mod 2 pi) from the uniform
/// distribution on [0, 2 pi).
double ks_uniform_angle(Vec samples);

/// Critical KS value at significance alpha (asymptotic): c(alpha)/sqrt(n).
double ks_critical(double alpha, std::int64_t n);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(Vec a, Vec b);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double slope_ci95 = 0.0;  ///< half-width, Student-t with n-2 dof
};

LinearFit linear_fit(const Vec& x, const Vec& y);

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending; columns of `vectors` are eigenvectors.
struct SymEigen {
    Vec values;
    Mat vectors;
};
SymEigen sym_eigen(const Mat& a);

/// Symmetric PSD square root with eigenvalue clamping at zero.  Any
/// eigenvalue below -neg_tol is reported through `clamped_below`.
Mat psd_sqrt(const Mat& a, double neg_tol, double* most_negative = nullptr);

}  // namespace stochav
