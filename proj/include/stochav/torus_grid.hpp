/** \file torus_grid.hpp
    \brief Uniform tensor grid on T^n with nodes theta_j = 2 pi j / m.

    The uniform-weight quadrature on this grid integrates trigonometric
    polynomials of degree < m/2 per dimension exactly, which makes every
    torus average in this project spectrally accurate.
*/
#pragma once

#include <functional>

#include "stochav/types.hpp"

namespace stochav {

struct TorusGrid {
    int n = 1;   ///< angle dimensions
    int m = 64;  ///< nodes per dimension (power of two)

    TorusGrid() = default;
    TorusGrid(int n_, int m_);

    std::int64_t size() const {
        std::int64_t s = 1;
        for (int i = 0; i < n; ++i) s *= m;
        return s;
    }
    double weight() const { return 1.0 / static_cast<double>(size()); }

    /// Angles of the flat node index (row-major, last dimension fastest).
    Vec node(std::int64_t flat) const;

    /// Visit every node: fn(flat_index, angles).
    void for_each(const std::function<void(std::int64_t, const Vec&)>& fn) const;
};

}  // namespace stochav
