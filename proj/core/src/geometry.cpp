#include "jmlab/geometry.hpp"

#include <algorithm>
#include <array>
#include <random>

namespace jmlab {

namespace {

using Vec = std::vector<double>;

std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

void check_dims(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    if (x.size() != m.dimension() || v.size() != m.dimension())
        throw PreconditionError("point/vector dimension does not match the metric model");
    for (int i = 0; i < m.dimension(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(v[i]))
            throw PreconditionError("non-finite point or vector");
}

bool is_zero(const Eigen::VectorXd& v) { return v.squaredNorm() == 0.0; }

void require_nonzero(const MetricModel& m, const Eigen::VectorXd& v, const char* op) {
    if (!m.riemannian() && is_zero(v))
        throw PreconditionError(std::string(op) + ": finsler quantities need v != 0");
}

Eigen::MatrixXd to_matrix(const Vec& g, int n) {
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = g[i * n + j];
    return M;
}

void require_positive_definite(const Eigen::MatrixXd& g) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    double trace = g.trace();
    if (!(es.eigenvalues().minCoeff() > 1e-12 * std::abs(trace)))
        throw ModelError("metric tensor is not positive definite (smallest eigenvalue " +
                         std::to_string(es.eigenvalues().minCoeff()) + ")");
}

// Deterministic sample points for construction-time spot checks.
std::vector<Vec> sample_points(int n, const Space& space, int count, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec> pts;
    for (int s = 0; s < count; ++s) {
        Vec p(n);
        for (int i = 0; i < n; ++i) {
            double r = u(rng);
            p[i] = space.torus() ? 0.5 * (r + 1.0) * space.periods[i] : r;
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

void validate_finsler(const MetricModel& m) {
    const int n = m.dimension();
    auto xs = sample_points(n, m.space(), 8, 17);
    auto vs = sample_points(n, Space{}, 8, 29);
    for (std::size_t s = 0; s < xs.size(); ++s) {
        Vec& x = xs[s];
        Vec& v = vs[s];
        try {
            double base = kernel::f2<double>(m, x, v);
            for (double lam : {0.5, 2.0, 3.0}) {
                Vec w(v);
                for (auto& c : w) c *= lam;
                double val = kernel::f2<double>(m, x, w);
                if (std::abs(val - lam * lam * base) > 1e-10 * std::max(1.0, std::abs(lam * lam * base)))
                    throw ModelError("F^2 is not positively homogeneous of degree 2 in v");
            }
            Vec w(v);
            for (auto& c : w) c = -c;
            if (std::abs(kernel::f2<double>(m, x, w) - base) > 1e-10 * std::max(1.0, std::abs(base)))
                throw ModelError("F^2 is not reversible: F^2(x,-v) != F^2(x,v)");
            Vec g = kernel::metric<double>(m, x, v);
            require_positive_definite(to_matrix(g, n));
        } catch (const DomainError&) {
            // Outside the expression's domain; not a statement about the model.
        }
    }
}

}  // namespace

Space Space::flat_torus(std::vector<double> periods) {
    for (double L : periods)
        if (!(L > 0.0) || !std::isfinite(L)) throw ModelError("torus periods must be positive");
    return Space{std::move(periods)};
}

Vec Space::wrap(std::span<const double> x) const {
    Vec out(x.begin(), x.end());
    if (!torus()) return out;
    for (std::size_t i = 0; i < out.size() && i < periods.size(); ++i) {
        double L = periods[i];
        out[i] = std::fmod(out[i], L);
        if (out[i] < 0.0) out[i] += L;
        if (out[i] >= L) out[i] = 0.0;
    }
    return out;
}

Vec Space::difference(std::span<const double> a, std::span<const double> b) const {
    Vec d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        d[i] = a[i] - b[i];
        if (torus()) d[i] -= periods[i] * std::round(d[i] / periods[i]);
    }
    return d;
}

double Space::distance(std::span<const double> a, std::span<const double> b) const {
    double s = 0.0;
    for (double c : difference(a, b)) s += c * c;
    return std::sqrt(s);
}

void check_periodic(const Expr& e, const Space& space, const char* what) {
    if (!space.torus() || e.empty()) return;
    const int n = e.dimension();
    auto pts = sample_points(n, space, 4, 41);
    for (auto& p : pts) {
        Vec vars(2 * n, 0.3);
        std::copy(p.begin(), p.end(), vars.begin());
        try {
            double base = evaluate(e, std::span<const double>(vars));
            for (int i = 0; i < n; ++i) {
                Vec shifted(vars);
                shifted[i] += space.periods[i];
                double val = evaluate(e, std::span<const double>(shifted));
                if (std::abs(val - base) > 1e-9 * (1.0 + std::abs(base)))
                    throw ModelError(std::string(what) + " is not periodic on the torus in x" +
                                     std::to_string(i + 1));
            }
        } catch (const DomainError&) {
        }
    }
}

MetricModel MetricModel::euclidean(int n, Space space) {
    if (n < 1 || n > 9) throw ModelError("dimension must be in 1..9");
    std::vector<std::vector<Expr>> g(n, std::vector<Expr>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g[i][j] = Expr::constant(i == j ? 1.0 : 0.0, n);
    MetricModel m = riemannian(g, std::move(space));
    m.euclidean_ = true;
    return m;
}

MetricModel MetricModel::riemannian(const std::vector<std::vector<Expr>>& g, Space space) {
    const int n = static_cast<int>(g.size());
    if (n < 1 || n > 9) throw ModelError("dimension must be in 1..9");
    if (space.torus() && static_cast<int>(space.periods.size()) != n)
        throw ModelError("torus needs one period per coordinate");
    MetricModel m;
    m.kind_ = MetricKind::Riemannian;
    m.n_ = n;
    m.space_ = std::move(space);
    bool identity = true;
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(g[i].size()) != n) throw ModelError("metric matrix must be n x n");
        for (int j = i; j < n; ++j) {
            const Expr& e = g[i][j];
            if (e.empty()) throw ModelError("missing metric coefficient");
            if (e.dimension() != n) throw ModelError("metric coefficient has wrong dimension");
            if (!e.position_only()) throw ModelError("riemannian coefficients must not depend on v");
            if (!g[j][i].empty() && !structurally_equal(g[j][i], e))
                throw ModelError("metric matrix is not symmetric");
            check_periodic(e, m.space_, "metric coefficient");
            identity = identity && e.is_constant() && e.root().value == (i == j ? 1.0 : 0.0);
            m.upper_.push_back(e);
        }
    }
    m.euclidean_ = identity;
    Expr f2;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            Expr term = m.coefficient(i, j) * Expr::v(i, n) * Expr::v(j, n);
            if (i != j) term = Expr::constant(2.0, n) * term;
            f2 = f2.empty() ? term : f2 + term;
        }
    m.f2_ = f2;
    return m;
}

MetricModel MetricModel::finsler(Expr f2, Space space) {
    MetricModel m = finsler_unchecked(std::move(f2), std::move(space));
    check_periodic(m.f2_, m.space_, "F^2");
    validate_finsler(m);
    return m;
}

MetricModel MetricModel::finsler_unchecked(Expr f2, Space space) {
    const int n = f2.dimension();
    if (n < 1 || n > 9) throw ModelError("dimension must be in 1..9");
    if (space.torus() && static_cast<int>(space.periods.size()) != n)
        throw ModelError("torus needs one period per coordinate");
    MetricModel m;
    m.kind_ = MetricKind::Finsler;
    m.n_ = n;
    m.space_ = std::move(space);
    m.f2_ = std::move(f2);
    return m;
}

const Expr& MetricModel::coefficient(int i, int j) const {
    if (kind_ != MetricKind::Riemannian) throw ModelError("coefficient() needs a riemannian model");
    return upper_[kernel::upper_index(i, j, n_)];
}

double Tensor3::max_abs() const {
    double m = 0.0;
    for (double d : data) m = std::max(m, std::abs(d));
    return m;
}

double f2(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    check_dims(m, x, v);
    return kernel::f2<double>(m, as_span(x), as_span(v));
}

Eigen::MatrixXd metric_tensor(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    check_dims(m, x, v);
    require_nonzero(m, v, "metric_tensor");
    Eigen::MatrixXd g = to_matrix(kernel::metric<double>(m, as_span(x), as_span(v)), m.dimension());
    require_positive_definite(g);
    return g;
}

Tensor3 cartan_tensor(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    check_dims(m, x, v);
    require_nonzero(m, v, "cartan_tensor");
    const int n = m.dimension();
    Tensor3 C(n);
    if (m.riemannian()) return C;
    using D1 = Dual<double>;
    using D2 = Dual<D1>;
    using D3 = Dual<D2>;
    std::vector<D3> vars(2 * n);
    for (int a = 0; a < n; ++a) vars[a] = D3(D2(D1(x[a])));
    for (int i = 0; i < n; ++i) {
        D2 mid(D1::variable(v[i], n, i));
        mid.d.assign(n, D1(0.0));
        mid.d[i] = D1(1.0);
        D3 z(mid);
        z.d.assign(n, D2(0.0));
        z.d[i] = D2(1.0);
        vars[n + i] = std::move(z);
    }
    D3 r = evaluate(m.f2(), std::span<const D3>(vars));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) C(i, j, k) = r.deriv(i).deriv(j).deriv(k);
    // Average over permutations, computed once per sorted index triple so the
    // result is exactly symmetric.
    Tensor3 S(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int k = j; k < n; ++k) {
                double c = 0.25 *
                           (C(i, j, k) + C(i, k, j) + C(j, i, k) + C(j, k, i) + C(k, i, j) + C(k, j, i)) / 6.0;
                S(i, j, k) = S(i, k, j) = S(j, i, k) = S(j, k, i) = S(k, i, j) = S(k, j, i) = c;
            }
    return S;
}

Tensor3 metric_derivative(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    check_dims(m, x, v);
    require_nonzero(m, v, "metric_derivative");
    const int n = m.dimension();
    Tensor3 dg(n);
    if (m.is_euclidean()) return dg;
    using D1 = Dual<double>;
    if (m.riemannian()) {
        std::vector<D1> xs(n);
        for (int k = 0; k < n; ++k) xs[k] = D1::variable(x[k], n, k);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                D1 gij = evaluate(m.coefficient(i, j), std::span<const D1>(xs));
                for (int k = 0; k < n; ++k) dg(i, j, k) = dg(j, i, k) = gij.deriv(k);
            }
        return dg;
    }
    // Innermost level differentiates in x, the two outer levels in v.
    using D2 = Dual<D1>;
    using D3 = Dual<D2>;
    std::vector<D3> vars(2 * n);
    for (int k = 0; k < n; ++k) vars[k] = D3(D2(D1::variable(x[k], n, k)));
    for (int i = 0; i < n; ++i) {
        D2 mid{D1(v[i])};
        mid.d.assign(n, D1(0.0));
        mid.d[i] = D1(1.0);
        D3 z(mid);
        z.d.assign(n, D2(0.0));
        z.d[i] = D2(1.0);
        vars[n + i] = std::move(z);
    }
    D3 r = evaluate(m.f2(), std::span<const D3>(vars));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                dg(i, j, k) = 0.25 * (r.deriv(i).deriv(j).deriv(k) + r.deriv(j).deriv(i).deriv(k));
    return dg;
}

Tensor3 christoffel_first(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    Tensor3 dg = metric_derivative(m, x, v);
    const int n = m.dimension();
    Tensor3 gam(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) gam(i, j, l) = 0.5 * (dg(l, i, j) + dg(j, l, i) - dg(i, j, l));
    return gam;
}

Tensor3 christoffel_second(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    Tensor3 gam = christoffel_first(m, x, v);
    const int n = m.dimension();
    Eigen::MatrixXd g = m.riemannian() && is_zero(v) ? metric_tensor(m, x, Eigen::VectorXd::Ones(n))
                                                     : metric_tensor(m, x, v);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    Tensor3 G(n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            for (int l = 0; l < n; ++l) rhs[l] = gam(i, j, l);
            Eigen::VectorXd sol = ldlt.solve(rhs);
            for (int k = 0; k < n; ++k) G(k, i, j) = sol[k];
        }
    return G;
}

Eigen::VectorXd geodesic_coefficients(const MetricModel& m, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& v) {
    check_dims(m, x, v);
    const int n = m.dimension();
    if (is_zero(v)) {
        require_nonzero(m, v, "geodesic_coefficients");
        return Eigen::VectorXd::Zero(n);
    }
    auto s = kernel::spray<double>(m, as_span(x), as_span(v));
    require_positive_definite(to_matrix(s.g, n));
    Vec G = kernel::geodesic_coefficients(s, n);
    return Eigen::Map<Eigen::VectorXd>(G.data(), n);
}

Eigen::VectorXd legendre(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    check_dims(m, x, v);
    const int n = m.dimension();
    if (is_zero(v)) return Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd g = metric_tensor(m, x, v);
    return g * v;
}

Eigen::VectorXd legendre_inverse(const MetricModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    check_dims(m, x, y);
    const int n = m.dimension();
    if (is_zero(y)) return Eigen::VectorXd::Zero(n);
    if (m.riemannian()) {
        Eigen::MatrixXd g = metric_tensor(m, x, y);
        return g.ldlt().solve(y);
    }
    // Start from the metric frozen at direction y, then damped Newton on
    // y - g(x,v) v = 0, whose Jacobian in v is g(x,v).
    Eigen::VectorXd v = metric_tensor(m, x, y).ldlt().solve(y);
    auto residual = [&](const Eigen::VectorXd& w) { return (y - legendre(m, x, w)).eval(); };
    Eigen::VectorXd r = residual(v);
    const double target = 1e-14 * y.norm();
    for (int it = 0; it < 50; ++it) {
        if (r.norm() <= target) return v;
        Eigen::VectorXd step = metric_tensor(m, x, v).ldlt().solve(r);
        double lam = 1.0;
        for (int k = 0; k < 30; ++k, lam *= 0.5) {
            Eigen::VectorXd trial = v + lam * step;
            if (is_zero(trial)) continue;
            Eigen::VectorXd rt = residual(trial);
            if (rt.norm() < r.norm()) {
                v = trial;
                r = rt;
                break;
            }
        }
        if (lam < std::ldexp(1.0, -29)) break;
    }
    if (r.norm() <= 1e-12 * y.norm()) return v;
    throw InversionError("legendre_inverse: Newton did not converge", r.norm());
}

}  // namespace jmlab
