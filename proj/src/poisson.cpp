#include "stochav/poisson.hpp"

namespace stochav {

namespace {

std::vector<int> dims_of(const TorusGrid& g) { return std::vector<int>(g.n, g.m); }

// integer mode vector of a flat coefficient index
void mode_of(const TorusGrid& g, std::int64_t flat, std::vector<int>& m) {
    for (int d = g.n - 1; d >= 0; --d) {
        m[d] = fft_freq(static_cast<int>(flat % g.m), g.m);
        flat /= g.m;
    }
}

}  // namespace

Cplx GeneratorSpec::eigenvalue(const std::vector<int>& m) const {
    const int n = freq.rows;
    double re = 0;
    for (int k = 0; k < n; ++k) {
        double mw = 0;
        for (int i = 0; i < n; ++i) mw += m[i] * freq(k, i);
        re -= 0.5 * mw * mw;
    }
    double im = 0;
    for (int i = 0; i < n; ++i) im += m[i] * drift_freq[i];
    return {re, im};
}

bool GeneratorSpec::elliptic(double tol) const {
    // |det| by Gaussian elimination on a copy
    Mat a = freq;
    const int n = a.rows;
    double det = 1.0, scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
            det = -det;
        }
        det *= a(col, col);
        if (a(col, col) == 0.0) return false;
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
        }
    }
    return std::abs(det) > tol * std::max(1.0, std::pow(scale, n));
}

TorusFunction TorusFunction::sample(const TorusGrid& grid,
                                    const std::function<double(const Vec&)>& f) {
    TorusFunction out;
    out.grid = grid;
    out.values.resize(grid.size());
    grid.for_each([&](std::int64_t flat, const Vec& theta) {
        out.values[flat] = f(theta);
    });
    return out;
}

Cplx TorusFunction::mean() const {
    Cplx s = 0;
    for (const Cplx& v : values) s += v;
    return s / static_cast<double>(values.size());
}

double TorusFunction::max_abs() const {
    double m = 0;
    for (const Cplx& v : values) m = std::max(m, std::abs(v));
    return m;
}

double TorusFunction::band_tail(const std::vector<Cplx>& coeffs) const {
    double peak = 0, tail = 0;
    std::vector<int> m(grid.n);
    for (std::int64_t flat = 0; flat < static_cast<std::int64_t>(coeffs.size()); ++flat) {
        const double a = std::abs(coeffs[flat]);
        peak = std::max(peak, a);
        mode_of(grid, flat, m);
        for (int d = 0; d < grid.n; ++d)
            if (std::abs(m[d]) >= grid.m / 4) {
                tail = std::max(tail, a);
                break;
            }
    }
    return peak > 0 ? tail / peak : 0.0;
}

bool TorusFunction::is_real(double tol) const {
    const double scale = std::max(1.0, max_abs());
    for (const Cplx& v : values)
        if (std::abs(v.imag()) > tol * scale) return false;
    return true;
}

PoissonResult solve_poisson(const TorusFunction& f, const GeneratorSpec& gen,
                            const PoissonOptions& opts) {
    if (gen.freq.rows != f.grid.n)
        throw Error(ErrorClass::validation, "solve_poisson: dimension mismatch");
    if (!gen.elliptic())
        throw Error(ErrorClass::resonance, "solve_poisson: frequency matrix is singular");
    const double fscale = std::max(1.0, f.max_abs());
    if (std::abs(f.mean()) > opts.centering_tol * fscale)
        throw Error(ErrorClass::validation, "solve_poisson: f is not centered");

    const bool input_real = f.is_real();
    std::vector<Cplx> coeffs = f.values;
    fft_nd(coeffs, dims_of(f.grid), false);  // unnormalized; the inverse divides by N

    // resonance guard: a nonzero coefficient sitting on a (near-)null mode
    double max_lambda = 0, max_coeff = 0;
    std::vector<Cplx> lambda(coeffs.size());
    std::vector<int> m(f.grid.n);
    for (std::int64_t flat = 0; flat < static_cast<std::int64_t>(coeffs.size()); ++flat) {
        mode_of(f.grid, flat, m);
        lambda[flat] = gen.eigenvalue(m);
        max_lambda = std::max(max_lambda, std::abs(lambda[flat]));
        max_coeff = std::max(max_coeff, std::abs(coeffs[flat]));
    }
    PoissonResult res;
    res.band_tail = f.band_tail(coeffs);
    res.band_limited = res.band_tail <= opts.band_tol;

    for (std::int64_t flat = 0; flat < static_cast<std::int64_t>(coeffs.size()); ++flat) {
        if (flat == 0) {
            // unnormalized zero mode = N * mean
            coeffs[0] = opts.gauge_offset * static_cast<double>(f.grid.size());
            continue;
        }
        if (std::abs(coeffs[flat]) <= opts.coeff_floor * max_coeff) {
            coeffs[flat] = 0.0;
            continue;
        }
        if (std::abs(lambda[flat]) < opts.resonance_tol * max_lambda)
            throw Error(ErrorClass::resonance,
                        "solve_poisson: resonant mode carries a nonzero coefficient");
        coeffs[flat] /= lambda[flat];
    }
    fft_nd(coeffs, dims_of(f.grid), true);
    res.h.grid = f.grid;
    res.h.actions = f.actions;
    res.h.values = std::move(coeffs);
    if (input_real)
        for (auto& v : res.h.values) v = Cplx(v.real(), 0.0);
    return res;
}

TorusFunction apply_generator(const TorusFunction& h, const GeneratorSpec& gen) {
    std::vector<Cplx> coeffs = h.values;
    fft_nd(coeffs, dims_of(h.grid), false);
    std::vector<int> m(h.grid.n);
    for (std::int64_t flat = 0; flat < static_cast<std::int64_t>(coeffs.size()); ++flat) {
        mode_of(h.grid, flat, m);
        coeffs[flat] *= gen.eigenvalue(m);
    }
    fft_nd(coeffs, dims_of(h.grid), true);
    TorusFunction out;
    out.grid = h.grid;
    out.actions = h.actions;
    out.values = std::move(coeffs);
    return out;
}

TorusFunction angle_derivative(const TorusFunction& h, int axis) {
    std::vector<Cplx> coeffs = h.values;
    fft_nd(coeffs, dims_of(h.grid), false);
    std::vector<int> m(h.grid.n);
    for (std::int64_t flat = 0; flat < static_cast<std::int64_t>(coeffs.size()); ++flat) {
        mode_of(h.grid, flat, m);
        coeffs[flat] *= Cplx(0.0, m[axis]);
    }
    fft_nd(coeffs, dims_of(h.grid), true);
    TorusFunction out;
    out.grid = h.grid;
    out.actions = h.actions;
    out.values = std::move(coeffs);
    return out;
}

}  // namespace stochav
