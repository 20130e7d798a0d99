#pragma once

// Tube around a Jacobi geodesic segment, the displaced curve inside it, and
// the conformal factor phi that turns the displaced curve into a geodesic of
// exp(phi) * Fbar^2. Riemannian kinetic models only.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <vector>

#include "jmlab/jacobi_metric.hpp"

namespace jmlab {

/// C^2 curve through nodes with prescribed value, first and second
/// derivative; quintic on every interval. Evaluable at dual parameters.
class QuinticSpline {
public:
    QuinticSpline() = default;
    QuinticSpline(std::vector<double> t, std::vector<std::vector<double>> x, std::vector<std::vector<double>> dx,
                  std::vector<std::vector<double>> ddx);

    int dimension() const { return dim_; }
    double t_min() const { return t_.front(); }
    double t_max() const { return t_.back(); }
    const std::vector<double>& nodes() const { return t_; }
    const std::vector<double>& node_value(std::size_t i) const { return x_[i]; }

    /// Value and derivatives up to `order` (<= 2) at t, clamped to the range.
    template <class T>
    std::vector<std::vector<T>> eval(const T& t, int order = 2) const {
        double tv = std::clamp(value_of(t), t_.front(), t_.back());
        std::size_t k = segment(tv);
        double h = t_[k + 1] - t_[k];
        T u = (t - t_[k]) / h;
        if (value_of(t) < t_.front() || value_of(t) > t_.back()) u = T((tv - t_[k]) / h);
        std::vector<std::vector<T>> out(order + 1, std::vector<T>(dim_, T(0.0)));
        const double* c = &coef_[k * 6 * dim_];
        for (int i = 0; i < dim_; ++i) {
            const double* p = c + 6 * i;
            out[0][i] = p[0] + u * (p[1] + u * (p[2] + u * (p[3] + u * (p[4] + u * p[5]))));
            if (order >= 1)
                out[1][i] = (p[1] + u * (2.0 * p[2] + u * (3.0 * p[3] + u * (4.0 * p[4] + u * 5.0 * p[5])))) / h;
            if (order >= 2)
                out[2][i] = (2.0 * p[2] + u * (6.0 * p[3] + u * (12.0 * p[4] + u * 20.0 * p[5]))) / (h * h);
        }
        return out;
    }

private:
    std::size_t segment(double t) const;

    int dim_ = 0;
    std::vector<double> t_;
    std::vector<std::vector<double>> x_;
    std::vector<double> coef_;  // per segment, per component: 6 monomial coefficients in u
};

/// 0 on u <= 0, 1 on u >= 1, quintic in between; returns value, d/du, d2/du2.
std::array<double, 3> smoothstep(double u);

/// Cut-off alpha(t): 1 on |t| <= eta + 2 eps, 0 on |t| >= eta + 4 eps.
std::array<double, 3> cutoff_alpha(double t, double eta, double eps);

class TubeFrame {
public:
    /// Tube around the unit-speed Fbar geodesic through p with direction v,
    /// parametrized on [-2 eta, 2 eta] with t = 0 at p. `displacement` is the
    /// first normal direction (projected off the tangent); by default the
    /// coordinate axis least aligned with v.
    static TubeFrame build(const JacobiMetric& jm, const Eigen::VectorXd& p, const Eigen::VectorXd& v, double eta,
                           double eps, std::optional<Eigen::VectorXd> displacement = std::nullopt);

    const JacobiMetric& metric() const { return jm_; }
    const QuinticSpline& center() const { return center_; }
    double eta() const { return eta_; }
    double eps() const { return eps_; }
    int dimension() const { return jm_.dimension(); }

    /// Fbar-orthonormal normals at t; the first is the displacement direction.
    std::vector<Eigen::VectorXd> frame(double t) const;
    Eigen::VectorXd xi(double t, std::span<const double> u) const;
    /// Local inverse of xi: (t, u) with xi(t, u) = x.
    std::pair<double, std::vector<double>> inverse(const Eigen::VectorXd& x) const;
    /// Smallest distance between sampled images of parameters that are not close.
    double overlap_distance() const;

    /// Nodes used for every curve built on this tube; they include the
    /// cut-off breakpoints so piecewise-polynomial profiles are reproduced.
    const std::vector<double>& nodes() const { return center_.nodes(); }
    const Eigen::VectorXd& displacement() const { return d_; }

private:
    TubeFrame(JacobiMetric jm) : jm_(std::move(jm)) {}
    JacobiMetric jm_;
    QuinticSpline center_;
    double eta_ = 0.0, eps_ = 0.0;
    Eigen::VectorXd d_;
};

/// The displaced curve gamma_s: the center curve blended by the cut-off
/// alpha into the Fbar geodesic started at xi(0, s e_1) with the center's
/// initial direction. For flat metrics this is xi(t, alpha(t) s, 0, ..., 0).
QuinticSpline displaced_curve(const TubeFrame& tube, double s);

/// Conformal factor phi with phi = 0 on `curve` and normal gradient chosen
/// so that `curve` is a pregeodesic of exp(phi) Fbar^2. Support: points
/// within rho of the curve whose nearest curve parameter lies in the
/// transition windows eta + 2 eps <= |t| <= eta + 4 eps.
class ConformalFactor {
public:
    ConformalFactor(JacobiMetric jm, QuinticSpline curve, double eta, double eps, double rho);

    double eta() const { return eta_; }
    double eps() const { return eps_; }
    double rho() const { return rho_; }
    const QuinticSpline& curve() const { return curve_; }
    const JacobiMetric& metric() const { return jm_; }

    bool in_window(double t) const {
        double a = std::abs(t);
        return a >= eta_ + 2.0 * eps_ && a <= eta_ + 4.0 * eps_;
    }

    /// Required gradient of phi on the curve at parameter t (a covector).
    template <class T>
    std::vector<T> normal_gradient(const T& t) const {
        const int n = jm_.dimension();
        std::vector<T> G(n, T(0.0));
        if (!in_window(value_of(t))) return G;
        auto c = curve_.eval(t, 2);
        std::span<const T> x(c[0]), v(c[1]);
        auto Gb = jm_.geodesic_coefficients(x, v);
        T psi = jm_.psi(x);
        auto g = kernel::metric(jm_.base(), x, v);
        std::vector<T> A(n), gA(n, T(0.0)), gv(n, T(0.0));
        for (int i = 0; i < n; ++i) A[i] = c[2][i] + 2.0 * Gb[i];
        T F2(0.0), Av(0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                T gij = psi * g[i * n + j];
                gA[i] += gij * A[j];
                gv[i] += gij * v[j];
            }
        for (int i = 0; i < n; ++i) {
            F2 += gv[i] * v[i];
            Av += gA[i] * v[i];
        }
        T ratio = Av / F2;
        for (int i = 0; i < n; ++i) G[i] = 2.0 * (gA[i] - ratio * gv[i]) / F2;
        return G;
    }

    /// Nearest curve parameter (chart-Euclidean) and squared distance.
    std::pair<double, double> nearest(std::span<const double> x) const;

    bool in_support(std::span<const double> x) const {
        auto [t, d2] = nearest(x);
        return d2 < rho_ * rho_ && in_window(t);
    }

    template <class T>
    T eval(std::span<const T> x) const {
        const int n = jm_.dimension();
        std::vector<double> xv(n);
        for (int i = 0; i < n; ++i) xv[i] = value_of(x[i]);
        if (!near_box(xv)) return T(0.0);
        auto [ts, d2] = nearest(xv);
        if (!(d2 < rho_ * rho_) || !in_window(ts)) return T(0.0);
        // Two Newton corrections in T make t* differentiable in x.
        T t(ts);
        for (int it = 0; it < 2; ++it) {
            auto c = curve_.eval(t, 2);
            T h(0.0), dh(0.0);
            for (int i = 0; i < n; ++i) {
                T r = x[i] - c[0][i];
                h += r * c[1][i];
                dh += r * c[2][i] - c[1][i] * c[1][i];
            }
            t = t - h / dh;
        }
        auto c = curve_.eval(t, 0);
        T dist2(0.0), lin(0.0);
        auto G = normal_gradient(t);
        for (int i = 0; i < n; ++i) {
            T r = x[i] - c[0][i];
            dist2 += r * r;
            lin += G[i] * r;
        }
        return beta(dist2 / (rho_ * rho_)) * lin;
    }

private:
    template <class T>
    static T beta(const T& q) {
        double qv = value_of(q);
        if (qv <= 0.25) return T(1.0);
        if (qv >= 1.0) return T(0.0);
        T u = (q - 0.25) / 0.75;
        return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    }
    bool near_box(const std::vector<double>& x) const;

    JacobiMetric jm_;
    QuinticSpline curve_;
    double eta_, eps_, rho_;
    std::vector<double> box_lo_, box_hi_;
};

}  // namespace jmlab
