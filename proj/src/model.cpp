#include "stochav/model.hpp"

#include <cmath>

namespace stochav {

namespace {

// Gauss-Jordan inverse for the (tiny, constant) frequency matrices.
Mat invert(const Mat& m) {
    const int n = m.rows;
    Mat a = m, inv = Mat::identity(n);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < 1e-14)
            throw Error(ErrorClass::numeric, "frequency matrix is singular");
        if (piv != col)
            for (int j = 0; j < n; ++j) {
                std::swap(a(piv, j), a(col, j));
                std::swap(inv(piv, j), inv(col, j));
            }
        const double d = a(col, col);
        for (int j = 0; j < n; ++j) {
            a(col, j) /= d;
            inv(col, j) /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a(r, j) -= f * a(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

// Oscillator family shared by all shipped systems: plane i carries
// I_i = (a_i q_i^2 + p_i^2/a_i)/2 and theta_i = atan2(p_i, a_i q_i).
struct HarmonicKernel final : SdeKernel {
    Vec a;
    explicit HarmonicKernel(Vec a_) : a(std::move(a_)) { n = static_cast<int>(a.size()); }

    void eval(const double* x, const double* cB, double /*cV*/, double* out) const override {
        const double c1 = cB[0];
        for (int i = 0; i < n; ++i) {
            const double q = x[i], p = x[n + i];
            double cq = c1 * p;
            double cp = -c1 * a[i] * a[i] * q;
            if (i >= 1) {  // H_{i+1} acts on plane i alone
                cq += cB[i] * p / a[i];
                cp -= cB[i] * a[i] * q;
            }
            out[i] = cq;
            out[n + i] = cp;
        }
    }

    void energies(const double* x, double* H) const override {
        double h1 = 0;
        for (int i = 0; i < n; ++i) {
            const double q = x[i], p = x[n + i];
            h1 += 0.5 * (a[i] * a[i] * q * q + p * p);
            if (i >= 1) H[i] = 0.5 * (a[i] * q * q + p * p / a[i]);
        }
        H[0] = h1;
    }
};

struct ConstFieldKernel final : PerturbKernel {
    Vec v;
    explicit ConstFieldKernel(Vec v_) : v(std::move(v_)) { n = static_cast<int>(v.size()) / 2; }
    void add(const double* /*x*/, double c, double* out) const override {
        for (size_t i = 0; i < v.size(); ++i) out[i] += c * v[i];
    }
};

struct ZeroKernel final : PerturbKernel {
    explicit ZeroKernel(int n_) { n = n_; }
    void add(const double*, double, double*) const override {}
};

// X_k for k = H_1^2 on an oscillator family: X_k = 2 H_1 X_{H_1}.
struct H1SquaredKernel final : PerturbKernel {
    Vec a;
    explicit H1SquaredKernel(Vec a_) : a(std::move(a_)) { n = static_cast<int>(a.size()); }
    void add(const double* x, double c, double* out) const override {
        double h1 = 0;
        for (int i = 0; i < n; ++i)
            h1 += 0.5 * (a[i] * a[i] * x[i] * x[i] + x[n + i] * x[n + i]);
        const double s = 2.0 * c * h1;
        for (int i = 0; i < n; ++i) {
            out[i] += s * x[n + i];
            out[n + i] -= s * a[i] * a[i] * x[i];
        }
    }
};

struct K1Kernel final : PerturbKernel {
    K1Kernel() { n = 2; }
    void add(const double* x, double c, double* out) const override {
        const double r2 = x[1] * x[1] + x[3] * x[3];
        out[1] += c * x[1] / r2;
    }
    bool in_domain(const double* x) const override {
        return x[1] * x[1] + x[3] * x[3] > 1e-12;
    }
};

struct K2Kernel final : PerturbKernel {
    K2Kernel() { n = 2; }
    void add(const double* x, double c, double* out) const override {
        const double r2 = x[0] * x[0] + x[2] * x[2];
        const double d = r2 * r2;
        out[0] += c * x[2] / d;
        out[2] += c * x[0] / d;
    }
    bool in_domain(const double* x) const override {
        return x[0] * x[0] + x[2] * x[2] > 1e-12;
    }
};

struct K3Kernel final : PerturbKernel {
    K3Kernel() { n = 2; }
    void add(const double* x, double c, double* out) const override {
        const double r2 = x[0] * x[0] + x[2] * x[2];
        const double d = r2 * std::sqrt(r2);
        out[0] += c * x[2] * x[2] / d;
        out[2] -= c * x[0] / d;
    }
    bool in_domain(const double* x) const override {
        return x[0] * x[0] + x[2] * x[2] > 1e-12;
    }
};

// Generic Hamiltonian perturbation, evaluated through the scalar function.
struct XkKernel final : PerturbKernel {
    ScalarFunction k;
    explicit XkKernel(ScalarFunction k_) : k(std::move(k_)) { n = k.dof(); }
    void add(const double* x, double c, double* out) const override {
        Vec xv(x, x + 2 * n);
        Vec g = k.gradient(xv);
        for (int i = 0; i < n; ++i) {
            out[i] += c * g[n + i];
            out[n + i] -= c * g[i];
        }
    }
};

ScalarFunction harmonic_h1(const Vec& a) {
    const int n = static_cast<int>(a.size());
    return ScalarFunction(
        n,
        [a, n](const Vec& x) {
            double s = 0;
            for (int i = 0; i < n; ++i)
                s += 0.5 * (a[i] * a[i] * x[i] * x[i] + x[n + i] * x[n + i]);
            return s;
        },
        [a, n](const Vec& x) {
            Vec g(2 * n);
            for (int i = 0; i < n; ++i) {
                g[i] = a[i] * a[i] * x[i];
                g[n + i] = x[n + i];
            }
            return g;
        });
}

ScalarFunction harmonic_hk(const Vec& a, int k) {  // k in [1, n): plane index k
    const int n = static_cast<int>(a.size());
    return ScalarFunction(
        n,
        [a, n, k](const Vec& x) {
            return 0.5 * (a[k] * x[k] * x[k] + x[n + k] * x[n + k] / a[k]);
        },
        [a, n, k](const Vec& x) {
            Vec g(2 * n, 0.0);
            g[k] = a[k] * x[k];
            g[n + k] = x[n + k] / a[k];
            return g;
        });
}

IntegrableModel oscillator_model(std::string name, const Vec& a, const Vec& center_actions) {
    const int n = static_cast<int>(a.size());
    for (double ai : a)
        if (!(ai > 0))
            throw Error(ErrorClass::validation, "oscillator frequencies must be positive");

    IntegrableModel m;
    m.name = std::move(name);
    m.n = n;
    m.hamiltonians.push_back(harmonic_h1(a));
    for (int k = 1; k < n; ++k) m.hamiltonians.push_back(harmonic_hk(a, k));
    m.drift = SmoothField::zero(n);
    m.kernel = std::make_shared<HarmonicKernel>(a);

    m.to_action_angle = [a, n](const Vec& x) {
        check_phase_point(x, n);
        ActionAngle aa;
        aa.actions.resize(n);
        aa.angles.resize(n);
        for (int i = 0; i < n; ++i) {
            const double q = x[i], p = x[n + i];
            const double I = 0.5 * (a[i] * q * q + p * p / a[i]);
            if (I <= 0)
                throw Error(ErrorClass::domain, "action vanished: point outside the chart");
            aa.actions[i] = I;
            aa.angles[i] = wrap_angle(std::atan2(p, a[i] * q));
        }
        return aa;
    };
    m.from_action_angle = [a, n](const ActionAngle& aa) {
        Vec x(2 * n);
        for (int i = 0; i < n; ++i) {
            if (aa.actions[i] < 0)
                throw Error(ErrorClass::domain, "negative action");
            x[i] = std::sqrt(2.0 * aa.actions[i] / a[i]) * std::cos(aa.angles[i]);
            x[n + i] = std::sqrt(2.0 * a[i] * aa.actions[i]) * std::sin(aa.angles[i]);
        }
        return x;
    };
    m.chart_jacobian = [a, n](const Vec& x) {
        Mat J(2 * n, 2 * n);
        for (int i = 0; i < n; ++i) {
            const double q = x[i], p = x[n + i];
            J(i, i) = a[i] * q;
            J(i, n + i) = p / a[i];
            const double r2 = a[i] * a[i] * q * q + p * p;
            J(n + i, i) = -a[i] * p / r2;
            J(n + i, n + i) = a[i] * q / r2;
        }
        return J;
    };

    // In the chart H_1 = sum a_i I_i and H_k = I_k, so the frequency matrix
    // is constant: row 1 = a, row k = e_k.
    Mat omega(n, n);
    for (int i = 0; i < n; ++i) omega(0, i) = a[i];
    for (int k = 1; k < n; ++k) omega(k, k) = 1.0;
    m.freq_matrix = [omega](const Vec&) { return omega; };
    m.drift_freq = [n](const Vec&) { return Vec(n, 0.0); };

    const Mat omega_inv = invert(omega);
    m.actions_of_energies = [omega_inv](const Vec& h) { return omega_inv.apply(h); };

    m.chart_center = omega.apply(center_actions);
    // Half the distance from the center to the nearest critical hyperplane
    // {I_i = 0}; the chart must stay inside the regular region.
    double dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double rn = 0;
        for (int j = 0; j < n; ++j) rn += omega_inv(i, j) * omega_inv(i, j);
        dmin = std::min(dmin, center_actions[i] / std::sqrt(rn));
    }
    m.chart_radius = 0.5 * dmin;
    return m;
}

SmoothField field_from_kernel(int n, std::shared_ptr<const PerturbKernel> k) {
    return SmoothField(n, [k, n](const Vec& x) {
        Vec out(2 * n, 0.0);
        k->add(x.data(), 1.0, out.data());
        return out;
    });
}

}  // namespace

IntegrableModel build_harmonic_family(const Vec& a) {
    if (a.empty()) throw Error(ErrorClass::validation, "harmonic family needs n >= 1 frequencies");
    return oscillator_model("harmonic", a, Vec(a.size(), 1.0));
}

R4Example build_r4_example() {
    R4Example ex;
    // G_1, G_2 are the n=2, a=(1,1) oscillator family; base fiber I = (2,1).
    ex.model = oscillator_model("r4", Vec{1.0, 1.0}, Vec{2.0, 1.0});

    auto mk = [&](std::string name, std::shared_ptr<const PerturbKernel> kern) {
        Perturbation p;
        p.name = std::move(name);
        p.kernel = kern;
        p.field = field_from_kernel(2, kern);
        p.domain = [kern](const Vec& x) { return kern->in_domain(x.data()); };
        return p;
    };
    ex.k1 = mk("k1", std::make_shared<K1Kernel>());
    ex.k2 = mk("k2", std::make_shared<K2Kernel>());
    ex.k3 = mk("k3", std::make_shared<K3Kernel>());
    // Printed component formulas for K2, K3 do not verify as closed 1-forms
    // under the canonical pairing; their averages are checked numerically.
    ex.k2.unverified_hamiltonian = true;
    ex.k3.unverified_hamiltonian = true;
    return ex;
}

OneDofCase build_1dof_case() {
    OneDofCase c;
    c.model = oscillator_model("1dof", Vec{1.0}, Vec{1.0});
    ScalarFunction k(1, [](const Vec& x) { return x[0]; },
                     [](const Vec&) { return Vec{1.0, 0.0}; });
    c.pert.name = "kq";
    c.pert.hamiltonian_k = k;
    c.pert.kernel = std::make_shared<ConstFieldKernel>(Vec{0.0, -1.0});
    c.pert.field = field_from_kernel(1, c.pert.kernel);
    return c;
}

Perturbation hamiltonian_perturbation(std::string name, const ScalarFunction& k) {
    Perturbation p;
    p.name = std::move(name);
    p.hamiltonian_k = k;
    p.kernel = std::make_shared<XkKernel>(k);
    p.field = field_from_kernel(k.dof(), p.kernel);
    return p;
}

Perturbation zero_perturbation(int n) {
    Perturbation p;
    p.name = "none";
    p.kernel = std::make_shared<ZeroKernel>(n);
    p.field = SmoothField::zero(n);
    // K = X_0: the zero field is a (trivial) Hamiltonian perturbation
    p.hamiltonian_k = ScalarFunction(n, [](const Vec&) { return 0.0; },
                                     [n](const Vec&) { return Vec(2 * n, 0.0); });
    return p;
}

Vec action_halfwidths(const IntegrableModel& model, const Vec& h0, double r) {
    // row norms of d(actions)/d(energies), by central differences (the map
    // is linear for every shipped system, so the step barely matters)
    Vec rho(model.n, 0.0);
    for (int i = 0; i < model.n; ++i) {
        double rn = 0;
        for (int j = 0; j < model.n; ++j) {
            Vec hp = h0, hm = h0;
            const double dh = 1e-6 * std::max(1.0, std::abs(h0[j]));
            hp[j] += dh;
            hm[j] -= dh;
            const double der =
                (model.actions_of_energies(hp)[i] - model.actions_of_energies(hm)[i]) /
                (2.0 * dh);
            rn += der * der;
        }
        rho[i] = r * std::sqrt(rn);
    }
    return rho;
}

double default_chart_radius(const IntegrableModel& model, const Vec& h0) {
    const Vec I0 = model.actions_of_energies(h0);
    const Vec rho = action_halfwidths(model, h0, 1.0);
    double dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < model.n; ++i) dmin = std::min(dmin, I0[i] / rho[i]);
    if (!(dmin > 0))
        throw Error(ErrorClass::validation, "point lies on the critical set");
    return 0.5 * dmin;
}

IntegrableModel make_model(const std::string& name, const Vec& params) {
    if (name == "harmonic")
        return build_harmonic_family(params.empty() ? Vec{1.0, 2.0} : params);
    if (name == "r4") return build_r4_example().model;
    if (name == "1dof") return build_1dof_case().model;
    throw Error(ErrorClass::validation, "unknown model '" + name + "'");
}

Perturbation make_perturbation(const IntegrableModel& model, const std::string& name) {
    if (name == "none") return zero_perturbation(model.n);
    if (model.name == "r4") {
        auto ex = build_r4_example();
        if (name == "k1") return ex.k1;
        if (name == "k2") return ex.k2;
        if (name == "k3") return ex.k3;
    }
    if (model.name == "1dof" && (name == "kq" || name == "xq1")) return build_1dof_case().pert;
    if (name == "xq1") {
        const int n = model.n;
        ScalarFunction k(n, [](const Vec& x) { return x[0]; },
                         [n](const Vec&) {
                             Vec g(2 * n, 0.0);
                             g[0] = 1.0;
                             return g;
                         });
        Perturbation p;
        p.name = "xq1";
        p.hamiltonian_k = k;
        Vec v(2 * n, 0.0);
        v[n] = -1.0;  // X_{q_1} = -d/dp_1
        p.kernel = std::make_shared<ConstFieldKernel>(v);
        p.field = field_from_kernel(n, p.kernel);
        return p;
    }
    if (name == "xh1sq") {
        // k = H_1^2; requires the oscillator frequency vector.
        Vec a;
        if (model.name == "harmonic" || model.name == "r4" || model.name == "1dof") {
            const Mat om = model.freq_matrix(Vec(model.n, 1.0));
            for (int i = 0; i < model.n; ++i) a.push_back(om(0, i));
        } else {
            throw Error(ErrorClass::validation, "xh1sq: unsupported model");
        }
        const ScalarFunction h1 = model.hamiltonians[0];
        ScalarFunction k(model.n, [h1](const Vec& x) {
            const double v = h1(x);
            return v * v;
        });
        Perturbation p;
        p.name = "xh1sq";
        p.hamiltonian_k = k;
        p.kernel = std::make_shared<H1SquaredKernel>(a);
        p.field = field_from_kernel(model.n, p.kernel);
        return p;
    }
    throw Error(ErrorClass::validation,
                "unknown perturbation '" + name + "' for model '" + model.name + "'");
}

std::vector<std::string> list_models() { return {"harmonic", "r4", "1dof"}; }

std::vector<std::string> list_perturbations(const std::string& model_name) {
    std::vector<std::string> out = {"none", "xq1", "xh1sq"};
    if (model_name == "r4") {
        out.push_back("k1");
        out.push_back("k2");
        out.push_back("k3");
    }
    if (model_name == "1dof") out.push_back("kq");
    return out;
}

}  // namespace stochav
