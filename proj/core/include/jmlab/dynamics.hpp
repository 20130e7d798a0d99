#pragma once

// Lagrange and Hamilton equations of L = F^2/2 - U, total energy, and
// trajectory integration in the (x, v) chart.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "jmlab/ode.hpp"
#include "jmlab/system.hpp"
#include "jmlab/trajectory.hpp"

namespace jmlab {

/// x'' = -2 G(x, v) - g^{-1}(x, v) grad U. For finsler F at v = 0 the spray
/// is extended by G(x, 0) = 0 and g is taken in the direction w = -grad U.
template <class T>
std::vector<T> acceleration(const SystemSpec& sys, std::span<const T> x, std::span<const T> v) {
    const int n = sys.dimension();
    auto [u, dU] = sys.potential_jet(x);
    const MetricModel& m = sys.metric();
    if (!m.riemannian()) {
        double vmax = 0.0, gmax = 0.0;
        for (int i = 0; i < n; ++i) {
            vmax = std::max(vmax, std::abs(value_of(v[i])));
            gmax = std::max(gmax, std::abs(value_of(dU[i])));
        }
        if (vmax < 1e-60) {
            std::vector<T> w(n);
            for (int i = 0; i < n; ++i) w[i] = -dU[i];
            if (gmax < 1e-300) return w;
            auto g = kernel::metric(m, x, std::span<const T>(w));
            return kernel::solve_spd(g, w, n);
        }
    }
    auto s = kernel::spray(m, x, v);
    std::vector<T> rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = -0.5 * s.b[i] - dU[i];
    return kernel::solve_spd(s.g, rhs, n);
}

/// First-order field on y = (x, v), usable with any scalar type (rk_replay).
struct LagrangeField {
    const SystemSpec* sys;

    template <class T>
    void operator()(const std::vector<T>& y, std::vector<T>& dy) const {
        const int n = sys->dimension();
        std::span<const T> x(y.data(), n), v(y.data() + n, n);
        auto a = acceleration(*sys, x, v);
        dy.resize(2 * n);
        for (int i = 0; i < n; ++i) {
            dy[i] = y[n + i];
            dy[n + i] = a[i];
        }
    }
};

Eigen::VectorXd lagrange_rhs(const SystemSpec& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& v);

/// (x', y') = (legendre_inverse(x, y), dF^2/dx (x, x') / 2 - grad U).
std::pair<Eigen::VectorXd, Eigen::VectorXd> hamilton_rhs(const SystemSpec& sys, const Eigen::VectorXd& x,
                                                         const Eigen::VectorXd& y);

/// F^2(x, v) / 2 + U(x).
double total_energy(const SystemSpec& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& v);
double total_energy(const SystemSpec& sys, std::span<const double> y);

/// Brake-point event: grad U . v crossing from + to -, a local minimum of
/// the kinetic energy along the orbit.
Event kinetic_minimum_event(const SystemSpec& sys, bool terminal = false);

/// Lagrangian flow from (x0, v0) on [t0, t1] (t1 < t0 allowed; samples are
/// returned in increasing time). The scalar column holds the total energy.
Trajectory integrate(const SystemSpec& sys, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0, double t0,
                     double t1, const Tolerances& tol = {}, const std::vector<Event>& events = {});

/// Hamiltonian flow of (x, y); states are (x, y).
OdeSolution integrate_hamilton(const SystemSpec& sys, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                               double t0, double t1, const Tolerances& tol = {});

}  // namespace jmlab
