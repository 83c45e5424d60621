#include "stochav/torus_grid.hpp"

namespace stochav {

TorusGrid::TorusGrid(int n_, int m_) : n(n_), m(m_) {
    if (n < 1) throw Error(ErrorClass::validation, "torus grid needs n >= 1");
    if (m < 2 || (m & (m - 1)) != 0)
        throw Error(ErrorClass::validation, "torus grid size must be a power of two");
}

Vec TorusGrid::node(std::int64_t flat) const {
    Vec theta(n);
    const double h = 2.0 * M_PI / m;
    for (int d = n - 1; d >= 0; --d) {
        theta[d] = h * static_cast<double>(flat % m);
        flat /= m;
    }
    return theta;
}

void TorusGrid::for_each(const std::function<void(std::int64_t, const Vec&)>& fn) const {
    const std::int64_t total = size();
    Vec theta(n, 0.0);
    std::vector<int> idx(n, 0);
    const double h = 2.0 * M_PI / m;
    for (std::int64_t flat = 0; flat < total; ++flat) {
        fn(flat, theta);
        for (int d = n - 1; d >= 0; --d) {
            if (++idx[d] < m) {
                theta[d] = h * idx[d];
                break;
            }
            idx[d] = 0;
            theta[d] = 0.0;
        }
    }
}

}  // namespace stochav
