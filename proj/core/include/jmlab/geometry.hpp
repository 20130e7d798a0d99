#pragma once

// Kinetic metric models and the Finsler/Riemannian kernel built on them.
//
// The templated functions in namespace `kernel` accept any scalar produced by
// dual.hpp, so the equations of motion can be differentiated through them.
// The plain double API at the bottom wraps them with validity checks and
// Eigen return types.

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "jmlab/dual.hpp"
#include "jmlab/errors.hpp"
#include "jmlab/expr.hpp"

namespace jmlab {

/// Chart domain: R^n, or the flat torus R^n / (L_1 Z x ... x L_n Z).
struct Space {
    std::vector<double> periods;  // empty for R^n

    bool torus() const { return !periods.empty(); }
    static Space euclidean() { return {}; }
    static Space flat_torus(std::vector<double> periods);

    /// Canonical representative in [0, L_i).
    std::vector<double> wrap(std::span<const double> x) const;
    /// a - b with the minimal-image convention on the torus.
    std::vector<double> difference(std::span<const double> a, std::span<const double> b) const;
    double distance(std::span<const double> a, std::span<const double> b) const;
};

enum class MetricKind { Riemannian, Finsler };

class MetricModel {
public:
    static MetricModel euclidean(int n, Space space = {});
    /// `g` is a full n x n matrix of position-only expressions; entries below
    /// the diagonal must repeat the upper ones (structurally) or be empty.
    static MetricModel riemannian(const std::vector<std::vector<Expr>>& g, Space space = {});
    /// `f2` is F^2(x, v), positively 2-homogeneous and even in v.
    static MetricModel finsler(Expr f2, Space space = {});
    /// As finsler() without the construction-time spot checks; for derived
    /// metrics that are only valid on part of the chart.
    static MetricModel finsler_unchecked(Expr f2, Space space = {});

    MetricKind kind() const { return kind_; }
    bool riemannian() const { return kind_ == MetricKind::Riemannian; }
    bool is_euclidean() const { return euclidean_; }
    int dimension() const { return n_; }
    const Space& space() const { return space_; }

    /// Riemannian coefficient g_ij(x), symmetric by storage.
    const Expr& coefficient(int i, int j) const;
    /// F^2 as an expression over (x, v); built from g_ij for riemannian models.
    const Expr& f2() const { return f2_; }

private:
    MetricKind kind_ = MetricKind::Riemannian;
    bool euclidean_ = false;
    int n_ = 0;
    Space space_;
    std::vector<Expr> upper_;  // row-major upper triangle
    Expr f2_;
};

/// Throws ModelError if `e` is visibly not periodic on the torus (checked at a
/// few deterministic points and their translates).
void check_periodic(const Expr& e, const Space& space, const char* what);

namespace kernel {

template <class T>
using Vec = std::vector<T>;

inline std::size_t upper_index(int i, int j, int n) {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i * n - i * (i - 1) / 2 + (j - i));
}

template <class T>
T f2(const MetricModel& m, std::span<const T> x, std::span<const T> v) {
    const int n = m.dimension();
    if (m.is_euclidean()) {
        T s(0.0);
        for (int i = 0; i < n; ++i) s += v[i] * v[i];
        return s;
    }
    if (m.riemannian()) {
        T s(0.0);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                T gij = evaluate(m.coefficient(i, j), x);
                s += (i == j ? 1.0 : 2.0) * gij * v[i] * v[j];
            }
        return s;
    }
    Vec<T> vars(x.begin(), x.end());
    vars.insert(vars.end(), v.begin(), v.end());
    return evaluate(m.f2(), std::span<const T>(vars));
}

/// Everything the equations of motion need at one point: the fundamental
/// tensor g (n x n, row-major), the spray vector b with G = g^{-1} b / 4, and
/// the position gradient of F^2.
template <class T>
struct Spray {
    Vec<T> g;
    Vec<T> b;
    Vec<T> f2_x;
    T f2{0.0};
};

template <class T>
Spray<T> spray(const MetricModel& m, std::span<const T> x, std::span<const T> v) {
    const int n = m.dimension();
    Spray<T> s;
    s.g.assign(static_cast<std::size_t>(n * n), T(0.0));
    s.b.assign(n, T(0.0));
    s.f2_x.assign(n, T(0.0));
    if (m.is_euclidean()) {
        for (int i = 0; i < n; ++i) {
            s.g[i * n + i] = T(1.0);
            s.f2 += v[i] * v[i];
        }
        return s;
    }
    if (m.riemannian()) {
        using D = Dual<T>;
        Vec<D> xs(n);
        for (int k = 0; k < n; ++k) xs[k] = D::variable(x[k], n, k);
        // dg[(i*n+j)*n+k] = d g_ij / d x_k
        Vec<T> dg(static_cast<std::size_t>(n * n * n), T(0.0));
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                D gij = evaluate(m.coefficient(i, j), std::span<const D>(xs));
                s.g[i * n + j] = gij.val;
                s.g[j * n + i] = gij.val;
                for (int k = 0; k < n; ++k) {
                    dg[(i * n + j) * n + k] = gij.deriv(k);
                    dg[(j * n + i) * n + k] = gij.deriv(k);
                }
            }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                T vv = v[i] * v[j];
                s.f2 += s.g[i * n + j] * vv;
                for (int l = 0; l < n; ++l) {
                    T dl = dg[(i * n + j) * n + l] * vv;
                    s.f2_x[l] += dl;
                    s.b[l] += 2.0 * dg[(l * n + i) * n + j] * vv - dl;
                }
            }
        return s;
    }
    // Finsler: full (x, v) Hessian of F^2 from a second-order dual.
    using D1 = Dual<T>;
    using D2 = Dual<D1>;
    const std::size_t N = static_cast<std::size_t>(2 * n);
    Vec<D2> vars(N);
    for (std::size_t a = 0; a < N; ++a) {
        const T& val = a < static_cast<std::size_t>(n) ? x[a] : v[a - n];
        D2 z(D1::variable(val, N, a));
        z.d.assign(N, D1(0.0));
        z.d[a] = D1(1.0);
        vars[a] = std::move(z);
    }
    D2 r = evaluate(m.f2(), std::span<const D2>(vars));
    auto H = [&](std::size_t a, std::size_t c) -> T {
        return 0.5 * (r.deriv(a).deriv(c) + r.deriv(c).deriv(a));
    };
    s.f2 = r.val.val;
    for (int i = 0; i < n; ++i) {
        s.f2_x[i] = r.val.deriv(i);
        for (int j = 0; j < n; ++j) s.g[i * n + j] = 0.5 * H(n + i, n + j);
    }
    for (int l = 0; l < n; ++l) {
        T acc = -s.f2_x[l];
        for (int k = 0; k < n; ++k) acc += H(n + l, k) * v[k];
        s.b[l] = acc;
    }
    return s;
}

/// Fundamental tensor only (row-major).
template <class T>
Vec<T> metric(const MetricModel& m, std::span<const T> x, std::span<const T> v) {
    const int n = m.dimension();
    if (m.riemannian()) {
        Vec<T> g(static_cast<std::size_t>(n * n), T(0.0));
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                T gij = m.is_euclidean() ? T(i == j ? 1.0 : 0.0) : evaluate(m.coefficient(i, j), x);
                g[i * n + j] = gij;
                g[j * n + i] = gij;
            }
        return g;
    }
    using D1 = Dual<T>;
    using D2 = Dual<D1>;
    Vec<D2> vars(2 * n);
    for (int a = 0; a < n; ++a) vars[a] = D2(D1(x[a]));
    for (int i = 0; i < n; ++i) {
        D2 z(D1::variable(v[i], n, i));
        z.d.assign(n, D1(0.0));
        z.d[i] = D1(1.0);
        vars[n + i] = std::move(z);
    }
    D2 r = evaluate(m.f2(), std::span<const D2>(vars));
    Vec<T> g(static_cast<std::size_t>(n * n), T(0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g[i * n + j] = 0.25 * (r.deriv(i).deriv(j) + r.deriv(j).deriv(i));
    return g;
}

/// Solves A z = b for symmetric positive definite A by Cholesky. Pivots are
/// compared by value; a pivot below 1e-12 * trace raises ModelError.
template <class T>
Vec<T> solve_spd(Vec<T> A, Vec<T> b, int n) {
    using std::sqrt;
    double trace = 0.0;
    for (int i = 0; i < n; ++i) trace += std::abs(value_of(A[i * n + i]));
    const double floor = 1e-12 * std::max(trace, 1e-300);
    for (int j = 0; j < n; ++j) {
        T d = A[j * n + j];
        for (int k = 0; k < j; ++k) d -= A[j * n + k] * A[j * n + k];
        if (!(value_of(d) > floor)) throw ModelError("metric tensor is not positive definite");
        T ljj = sqrt(d);
        A[j * n + j] = ljj;
        for (int i = j + 1; i < n; ++i) {
            T s = A[i * n + j];
            for (int k = 0; k < j; ++k) s -= A[i * n + k] * A[j * n + k];
            A[i * n + j] = s / ljj;
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < i; ++k) b[i] -= A[i * n + k] * b[k];
        b[i] /= A[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int k = i + 1; k < n; ++k) b[i] -= A[k * n + i] * b[k];
        b[i] /= A[i * n + i];
    }
    return b;
}

/// General square solve with partial pivoting on values.
template <class T>
Vec<T> solve_linear(Vec<T> A, Vec<T> b, int n) {
    double scale = 0.0;
    for (const auto& a : A) scale = std::max(scale, std::abs(value_of(a)));
    for (int c = 0; c < n; ++c) {
        int p = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(value_of(A[r * n + c])) > std::abs(value_of(A[p * n + c]))) p = r;
        if (std::abs(value_of(A[p * n + c])) <= 1e-14 * scale)
            throw ModelError("singular linear system");
        if (p != c) {
            for (int k = 0; k < n; ++k) std::swap(A[c * n + k], A[p * n + k]);
            std::swap(b[c], b[p]);
        }
        for (int r = c + 1; r < n; ++r) {
            T f = A[r * n + c] / A[c * n + c];
            if (value_of(f) == 0.0) continue;
            for (int k = c; k < n; ++k) A[r * n + k] -= f * A[c * n + k];
            b[r] -= f * b[c];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int k = i + 1; k < n; ++k) b[i] -= A[i * n + k] * b[k];
        b[i] /= A[i * n + i];
    }
    return b;
}

/// G = g^{-1} b / 4.
template <class T>
Vec<T> geodesic_coefficients(const Spray<T>& s, int n) {
    Vec<T> G = solve_spd(s.g, s.b, n);
    for (auto& c : G) c *= 0.25;
    return G;
}

}  // namespace kernel

/// Dense n x n x n array, index (i, j, k) row-major.
struct Tensor3 {
    int n = 0;
    std::vector<double> data;

    explicit Tensor3(int dim = 0) : n(dim), data(static_cast<std::size_t>(dim * dim * dim), 0.0) {}
    double& operator()(int i, int j, int k) { return data[(i * n + j) * n + k]; }
    double operator()(int i, int j, int k) const { return data[(i * n + j) * n + k]; }
    double max_abs() const;
};

Eigen::MatrixXd metric_tensor(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v);
Tensor3 cartan_tensor(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v);
/// gamma_ijl, first kind.
Tensor3 christoffel_first(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v);
/// Gamma^k_ij stored as (k, i, j).
Tensor3 christoffel_second(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v);
Eigen::VectorXd geodesic_coefficients(const MetricModel& m, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& v);
/// Position derivatives dg_ij/dx_k at fixed v, stored as (i, j, k).
Tensor3 metric_derivative(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v);

Eigen::VectorXd legendre(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v);
/// Riemannian: one linear solve. Finsler: damped Newton, at most 50 steps.
Eigen::VectorXd legendre_inverse(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

double f2(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v);

}  // namespace jmlab
