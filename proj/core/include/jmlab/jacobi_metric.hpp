#pragma once

// The Jacobi metric Fbar^2 = 2(E - U(x)) F^2 on the open region E - U > floor.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "jmlab/geometry.hpp"

namespace jmlab {

/// Geodesic coefficients of the conformal metric psi * F^2, given psi and
/// its gradient at x:
///   Gbar = G + (2 (dpsi . v) v - g^{-1} dpsi F^2) / (4 psi).
template <class T>
std::vector<T> conformal_geodesic_coefficients(const MetricModel& m, std::span<const T> x,
                                               std::span<const T> v, const T& psi,
                                               const std::vector<T>& dpsi) {
    const int n = m.dimension();
    auto s = kernel::spray(m, x, v);
    std::vector<T> G = kernel::solve_spd(s.g, s.b, n);
    std::vector<T> w = kernel::solve_spd(s.g, dpsi, n);
    T dot(0.0);
    for (int i = 0; i < n; ++i) dot += dpsi[i] * v[i];
    std::vector<T> out(n);
    for (int k = 0; k < n; ++k) out[k] = 0.25 * G[k] + (2.0 * dot * v[k] - w[k] * s.f2) / (4.0 * psi);
    return out;
}

class JacobiMetric {
public:
    /// `floor` < 0 selects the default 1e-8 (1 + |E|).
    JacobiMetric(MetricModel base, Expr potential, double energy, double floor = -1.0);

    const MetricModel& base() const { return base_; }
    const Expr& potential() const { return potential_; }
    double energy() const { return energy_; }
    double floor() const { return floor_; }
    int dimension() const { return base_.dimension(); }
    /// psi * F^2 as one expression, treated as a generic Finsler metric.
    const MetricModel& composed() const { return composed_; }

    bool inside(std::span<const double> x) const;

    /// psi = 2 (E - U); DegeneracyError where E - U <= floor.
    template <class T>
    T psi(std::span<const T> x) const {
        T u = evaluate(potential_, x);
        if (!(energy_ - value_of(u) > floor_))
            throw DegeneracyError("Jacobi metric queried outside the Hill region interior (E - U = " +
                                  std::to_string(energy_ - value_of(u)) + ")");
        return 2.0 * (energy_ - u);
    }

    /// psi and its gradient.
    template <class T>
    std::pair<T, std::vector<T>> psi_jet(std::span<const T> x) const {
        const int n = dimension();
        using D = Dual<T>;
        std::vector<D> xs(n);
        for (int k = 0; k < n; ++k) xs[k] = D::variable(x[k], n, k);
        D p = psi<D>(std::span<const D>(xs));
        std::vector<T> g(n);
        for (int k = 0; k < n; ++k) g[k] = p.deriv(k);
        return {p.val, g};
    }

    template <class T>
    T f2(std::span<const T> x, std::span<const T> v) const {
        return psi(x) * kernel::f2(base_, x, v);
    }

    template <class T>
    std::vector<T> geodesic_coefficients(std::span<const T> x, std::span<const T> v) const {
        auto [p, dp] = psi_jet(x);
        return conformal_geodesic_coefficients(base_, x, v, p, dp);
    }

private:
    MetricModel base_;
    Expr potential_;
    double energy_;
    double floor_;
    MetricModel composed_;
};

double jacobi_F2(const JacobiMetric& jm, const Eigen::VectorXd& x, const Eigen::VectorXd& v);
/// Conformal formula.
Eigen::VectorXd jacobi_geodesic_coefficients(const JacobiMetric& jm, const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& v);
/// Generic Finsler kernel applied to the composed expression psi * F^2.
Eigen::VectorXd jacobi_geodesic_coefficients_direct(const JacobiMetric& jm, const Eigen::VectorXd& x,
                                                    const Eigen::VectorXd& v);

}  // namespace jmlab
