#include "jmlab/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace jmlab {

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void check_state(const SystemSpec& sys, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != sys.dimension() || b.size() != sys.dimension())
        throw PreconditionError("state dimension does not match the system");
    if (!a.allFinite() || !b.allFinite()) throw PreconditionError("state is not finite");
}

}  // namespace

Eigen::VectorXd lagrange_rhs(const SystemSpec& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    check_state(sys, x, v);
    auto a = acceleration<double>(sys, as_span(x), as_span(v));
    return Eigen::Map<Eigen::VectorXd>(a.data(), sys.dimension());
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> hamilton_rhs(const SystemSpec& sys, const Eigen::VectorXd& x,
                                                         const Eigen::VectorXd& y) {
    check_state(sys, x, y);
    const int n = sys.dimension();
    Eigen::VectorXd xdot = legendre_inverse(sys.metric(), x, y);
    auto [u, dU] = sys.potential_jet<double>(as_span(x));
    Eigen::VectorXd ydot(n);
    if (xdot.lpNorm<Eigen::Infinity>() == 0.0) {
        for (int i = 0; i < n; ++i) ydot[i] = -dU[i];
        return {xdot, ydot};
    }
    auto s = kernel::spray<double>(sys.metric(), as_span(x), as_span(xdot));
    for (int i = 0; i < n; ++i) ydot[i] = 0.5 * s.f2_x[i] - dU[i];
    return {xdot, ydot};
}

double total_energy(const SystemSpec& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    check_state(sys, x, v);
    return 0.5 * f2(sys.metric(), x, v) + sys.potential_value<double>(as_span(x));
}

double total_energy(const SystemSpec& sys, std::span<const double> y) {
    const int n = sys.dimension();
    std::span<const double> x = y.first(n), v = y.subspan(n, n);
    return 0.5 * kernel::f2(sys.metric(), x, v) + sys.potential_value(x);
}

Event kinetic_minimum_event(const SystemSpec& sys, bool terminal) {
    Event e;
    e.direction = -1;
    e.terminal = terminal;
    e.fn = [&sys](double, const State& y) {
        const int n = sys.dimension();
        auto [u, dU] = sys.potential_jet<double>(std::span<const double>(y.data(), n));
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += dU[i] * y[n + i];
        return s;
    };
    return e;
}

Trajectory integrate(const SystemSpec& sys, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0, double t0,
                     double t1, const Tolerances& tol, const std::vector<Event>& events) {
    check_state(sys, x0, v0);
    const int n = sys.dimension();
    State y0(2 * n);
    for (int i = 0; i < n; ++i) {
        y0[i] = x0[i];
        y0[n + i] = v0[i];
    }
    LagrangeField field{&sys};
    OdeRhs rhs = [&field](double, const State& y, State& dy) { field(y, dy); };
    auto sol = std::make_shared<OdeSolution>(dopri5(rhs, t0, y0, t1, tol, events));
    std::vector<double> t = sol->t;
    std::vector<State> y = sol->y;
    if (t.size() > 1 && t.back() < t.front()) {
        std::reverse(t.begin(), t.end());
        std::reverse(y.begin(), y.end());
    }
    Trajectory traj(n, sys.space(), std::move(t), std::move(y), sol);
    std::vector<double> h;
    h.reserve(traj.size());
    for (const auto& s : traj.states()) h.push_back(total_energy(sys, std::span<const double>(s)));
    traj.set_scalar(std::move(h));
    traj.events = sol->events;
    traj.terminated = sol->terminated;
    return traj;
}

OdeSolution integrate_hamilton(const SystemSpec& sys, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                               double t0, double t1, const Tolerances& tol) {
    check_state(sys, x0, y0);
    const int n = sys.dimension();
    State s0(2 * n);
    for (int i = 0; i < n; ++i) {
        s0[i] = x0[i];
        s0[n + i] = y0[i];
    }
    OdeRhs rhs = [&sys, n](double, const State& s, State& ds) {
        Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(s.data(), n);
        Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(s.data() + n, n);
        auto [xd, yd] = hamilton_rhs(sys, x, y);
        for (int i = 0; i < n; ++i) {
            ds[i] = xd[i];
            ds[n + i] = yd[i];
        }
    };
    return dopri5(rhs, t0, s0, t1, tol);
}

}  // namespace jmlab
