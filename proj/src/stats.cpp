#include "stochav/stats.hpp"

#include <algorithm>

namespace stochav {

Moments moments(const Vec& samples) {
    Moments m;
    m.count = static_cast<std::int64_t>(samples.size());
    if (m.count == 0) return m;
    double s = 0;
    for (double v : samples) s += v;
    m.mean = s / static_cast<double>(m.count);
    if (m.count < 2) return m;
    double ss = 0;
    for (double v : samples) ss += (v - m.mean) * (v - m.mean);
    m.var = ss / static_cast<double>(m.count - 1);
    m.se_mean = std::sqrt(m.var / static_cast<double>(m.count));
    m.se_var = m.var * std::sqrt(2.0 / static_cast<double>(m.count - 1));
    return m;
}

double ks_uniform_angle(Vec samples) {
    const double two_pi = 2.0 * M_PI;
    for (double& s : samples) s = wrap_angle(s) / two_pi;
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(samples[i] - lo, hi - samples[i]));
    }
    return d;
}

double ks_critical(double alpha, std::int64_t n) {
    // c(alpha) = sqrt(-ln(alpha/2)/2); c(0.01) = 1.6276
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c / std::sqrt(static_cast<double>(n));
}

double ks_two_sample(Vec a, Vec b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

namespace {
double student_t975(int dof) {
    static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                   2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                                   2.131,  2.120, 2.110, 2.101, 2.093, 2.086, 2.080,
                                   2.074,  2.069, 2.064, 2.060, 2.056, 2.052, 2.048,
                                   2.045,  2.042};
    if (dof < 1) return std::numeric_limits<double>::infinity();
    if (dof <= 30) return table[dof - 1];
    return 1.96;
}
}  // namespace

LinearFit linear_fit(const Vec& x, const Vec& y) {
    const auto n = static_cast<int>(x.size());
    if (n < 2 || y.size() != x.size())
        throw Error(ErrorClass::validation, "linear_fit needs >= 2 matched points");
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0) throw Error(ErrorClass::validation, "linear_fit: degenerate abscissae");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double sse = 0;
        for (int i = 0; i < n; ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            sse += r * r;
        }
        fit.slope_se = std::sqrt(sse / (n - 2) / sxx);
        fit.slope_ci95 = student_t975(n - 2) * fit.slope_se;
    }
    return fit;
}

SymEigen sym_eigen(const Mat& a) {
    if (a.rows != a.cols) throw Error(ErrorClass::validation, "sym_eigen: square matrix required");
    const int n = a.rows;
    Mat m = a, v = Mat::identity(n);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(m(p, q)) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * m(p, q), m(q, q) - m(p, p));
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < n; ++k) {
                    const double mp = m(p, k), mq = m(q, k);
                    m(p, k) = c * mp - s * mq;
                    m(q, k) = s * mp + c * mq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mp = m(k, p), mq = m(k, q);
                    m(k, p) = c * mp - s * mq;
                    m(k, q) = s * mp + c * mq;
                    const double vp = v(k, p), vq = v(k, q);
                    v(k, p) = c * vp - s * vq;
                    v(k, q) = s * vp + c * vq;
                }
            }
    }
    SymEigen out;
    out.values.resize(n);
    for (int i = 0; i < n; ++i) out.values[i] = m(i, i);
    // sort ascending, permuting eigenvector columns alike
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return out.values[i] < out.values[j]; });
    SymEigen sorted;
    sorted.values.resize(n);
    sorted.vectors = Mat(n, n);
    for (int j = 0; j < n; ++j) {
        sorted.values[j] = out.values[order[j]];
        for (int i = 0; i < n; ++i) sorted.vectors(i, j) = v(i, order[j]);
    }
    return sorted;
}

Mat psd_sqrt(const Mat& a, double neg_tol, double* most_negative) {
    const SymEigen eig = sym_eigen(a);
    if (most_negative) *most_negative = eig.values.empty() ? 0.0 : eig.values.front();
    const int n = a.rows;
    Mat s(n, n);
    for (int k = 0; k < n; ++k) {
        double lam = eig.values[k];
        if (lam < -neg_tol && most_negative == nullptr)
            throw Error(ErrorClass::numeric, "psd_sqrt: matrix has a negative eigenvalue");
        lam = std::max(lam, 0.0);
        const double r = std::sqrt(lam);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                s(i, j) += r * eig.vectors(i, k) * eig.vectors(j, k);
    }
    return s;
}

}  // namespace stochav
