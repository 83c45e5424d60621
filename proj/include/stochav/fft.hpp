/** \file fft.hpp
    \brief Minimal power-of-two complex FFT with an n-dimensional tensor
           driver, sized for the torus grids used by the Poisson solver.
*/
#pragma once

#include <complex>
#include <vector>

#include "stochav/types.hpp"

namespace stochav {

using Cplx = std::complex<double>;

/// In-place radix-2 transform of length n (power of two).  Forward uses the
/// e^{-i 2 pi jk / n} kernel; the inverse is unnormalized (scale by 1/n).
void fft_inplace(Cplx* data, int n, bool inverse);

/// Tensor transform over a row-major array with dimensions dims (last
/// dimension fastest).  Forward is unnormalized; the inverse divides by the
/// total size, so fft_nd(inverse) o fft_nd(forward) is the identity.
void fft_nd(std::vector<Cplx>& data, const std::vector<int>& dims, bool inverse);

/// Signed frequency of coefficient index k on an m-grid: k for k < m/2,
/// k - m otherwise (Nyquist maps to -m/2).
inline int fft_freq(int k, int m) { return k < m / 2 ? k : k - m; }

}  // namespace stochav
