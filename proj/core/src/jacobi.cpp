#include "jmlab/jacobi.hpp"

#include <algorithm>
#include <cmath>

namespace jmlab {

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

std::span<const double> x_of(const State& y, int n) { return {y.data(), static_cast<std::size_t>(n)}; }
std::span<const double> v_of(const State& y, int n) { return {y.data() + n, static_cast<std::size_t>(n)}; }

double orbit_energy(const JacobiMetric& jm, const State& y) {
    const int n = jm.dimension();
    return 0.5 * kernel::f2(jm.base(), x_of(y, n), v_of(y, n)) + evaluate(jm.potential(), x_of(y, n));
}

using Rate = std::function<double(const State&)>;

struct Reparam {
    std::vector<double> out;                // new parameter at every sample
    std::shared_ptr<const OdeSolution> map; // dense new(old)
};

// Solves d(new)/d(old) = rate(state(old)) along a trajectory.
Reparam reparametrize(const Trajectory& tr, double out0, const Rate& rate, const Tolerances& tol) {
    OdeRhs rhs = [&](double in, const State&, State& d) { d[0] = rate(tr.at(in)); };
    Tolerances t = tol;
    t.atol = std::min(t.atol, 1e-12);
    auto sol = std::make_shared<OdeSolution>(dopri5(rhs, tr.t_begin(), State{out0}, tr.t_end(), t));
    Reparam r{{}, sol};
    r.out.reserve(tr.size());
    for (double in : tr.times()) r.out.push_back(sol->at(in)[0]);
    return r;
}

// State of the reparametrized curve at new parameter `target`: invert the
// monotone map by safeguarded Newton, then rescale the velocity by
// d(old)/d(new) = 1 / rate.
Trajectory::Interpolant reparametrized_interpolant(Trajectory src, Reparam rp, Rate rate) {
    return [src = std::move(src), rp = std::move(rp), rate = std::move(rate)](double target) {
        const auto& out = rp.out;
        auto it = std::upper_bound(out.begin(), out.end(), target);
        std::size_t k = it == out.begin() ? 0 : std::min<std::size_t>(it - out.begin() - 1, out.size() - 2);
        double a = src.times()[k], b = src.times()[k + 1];
        double o = a + (b - a) * std::clamp((target - out[k]) / (out[k + 1] - out[k]), 0.0, 1.0);
        for (int iter = 0; iter < 60; ++iter) {
            double f = rp.map->at(o)[0] - target;
            if (f > 0.0) b = o; else a = o;
            double next = o - f / rate(src.at(o));
            if (!(next >= a && next <= b)) next = 0.5 * (a + b);
            bool done = std::abs(next - o) <= 1e-15 * (1.0 + std::abs(o));
            o = next;
            if (done) break;
        }
        State y = src.at(o);
        double scale = 1.0 / rate(y);
        const int n = src.dimension();
        for (int i = 0; i < n; ++i) y[n + i] *= scale;
        return y;
    };
}

}  // namespace

Eigen::VectorXd orbit_to_geodesic_velocity(const JacobiMetric& jm, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    return v / jm.psi(as_span(x));
}

Eigen::VectorXd geodesic_to_orbit_velocity(const JacobiMetric& jm, const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
    return w * jm.psi(as_span(x));
}

Trajectory integrate_jacobi_geodesic(const JacobiMetric& jm, const Eigen::VectorXd& x0, const Eigen::VectorXd& w0,
                                     double s0, double s1, const Tolerances& tol, JacobiRoute route) {
    const int n = jm.dimension();
    if (x0.size() != n || w0.size() != n) throw PreconditionError("initial data dimension does not match");
    if (w0.squaredNorm() == 0.0) throw PreconditionError("geodesic needs a nonzero initial velocity");
    State y0(2 * n);
    for (int i = 0; i < n; ++i) {
        y0[i] = x0[i];
        y0[n + i] = w0[i];
    }
    OdeRhs rhs = [&jm, n, route](double, const State& y, State& dy) {
        std::vector<double> G;
        if (route == JacobiRoute::Conformal) {
            G = jm.geodesic_coefficients(x_of(y, n), v_of(y, n));
        } else {
            jm.psi(x_of(y, n));
            G = kernel::geodesic_coefficients(kernel::spray(jm.composed(), x_of(y, n), v_of(y, n)), n);
        }
        for (int i = 0; i < n; ++i) {
            dy[i] = y[n + i];
            dy[n + i] = -2.0 * G[i];
        }
    };
    auto sol = std::make_shared<OdeSolution>(dopri5(rhs, s0, y0, s1, tol));
    std::vector<double> s = sol->t;
    std::vector<State> y = sol->y;
    if (s.size() > 1 && s.back() < s.front()) {
        std::reverse(s.begin(), s.end());
        std::reverse(y.begin(), y.end());
    }
    Trajectory tr(n, jm.base().space(), std::move(s), std::move(y), sol);
    std::vector<double> h;
    for (const auto& st : tr.states()) h.push_back(jm.f2(x_of(st, n), v_of(st, n)));
    tr.set_scalar(std::move(h));
    return tr;
}

Trajectory orbit_to_geodesic(const Trajectory& orbit, const JacobiMetric& jm, double s_start, const Tolerances& tol) {
    const int n = jm.dimension();
    if (orbit.dimension() != n || orbit.empty()) throw PreconditionError("orbit does not match the Jacobi metric");
    for (const auto& y : orbit.states()) {
        double H = orbit_energy(jm, y);
        if (std::abs(H - jm.energy()) > 1e-6)
            throw PreconditionError("orbit energy " + std::to_string(H) + " differs from the metric's energy " +
                                    std::to_string(jm.energy()));
        jm.psi(x_of(y, n));
    }
    Rate rate = [jm, n](const State& y) { return jm.psi(x_of(y, n)); };
    Reparam rp = reparametrize(orbit, s_start, rate, tol);
    std::vector<double> s = rp.out;
    std::vector<State> states;
    std::vector<double> h;
    for (const auto& y : orbit.states()) {
        double psi = jm.psi(x_of(y, n));
        State z(y);
        for (int i = 0; i < n; ++i) z[n + i] = y[n + i] / psi;
        double speed = jm.f2(x_of(z, n), v_of(z, n));
        if (std::abs(speed - 1.0) > 1e-6)
            throw DegeneracyError("unit-speed check failed (Fbar^2 = " + std::to_string(speed) +
                                  "): orbit too close to the Hill boundary");
        states.push_back(std::move(z));
        h.push_back(speed);
    }
    Trajectory out(n, orbit.space(), std::move(s), std::move(states));
    out.set_scalar(std::move(h));
    if (orbit.size() > 1) out.set_interpolant(reparametrized_interpolant(orbit, std::move(rp), std::move(rate)));
    return out;
}

Trajectory geodesic_to_orbit(const Trajectory& geo, const JacobiMetric& jm, double t_start, const Tolerances& tol) {
    const int n = jm.dimension();
    if (geo.dimension() != n || geo.empty()) throw PreconditionError("geodesic does not match the Jacobi metric");
    for (const auto& y : geo.states()) {
        double speed = jm.f2(x_of(y, n), v_of(y, n));
        if (std::abs(speed - 1.0) > 1e-6)
            throw PreconditionError("geodesic is not unit speed (Fbar^2 = " + std::to_string(speed) + ")");
    }
    Rate rate = [jm, n](const State& y) { return 1.0 / jm.psi(x_of(y, n)); };
    Reparam rp = reparametrize(geo, t_start, rate, tol);
    std::vector<double> t = rp.out;
    std::vector<State> states;
    std::vector<double> h;
    for (const auto& y : geo.states()) {
        double psi = jm.psi(x_of(y, n));
        State z(y);
        for (int i = 0; i < n; ++i) z[n + i] = y[n + i] * psi;
        h.push_back(orbit_energy(jm, z));
        states.push_back(std::move(z));
    }
    Trajectory out(n, geo.space(), std::move(t), std::move(states));
    out.set_scalar(std::move(h));
    if (geo.size() > 1) out.set_interpolant(reparametrized_interpolant(geo, std::move(rp), std::move(rate)));
    return out;
}

CorrespondenceResult correspondence_check(const SystemSpec& sys, const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                                          double T, const Tolerances& tol, JacobiRoute route, int samples) {
    if (!(T > 0.0)) throw PreconditionError("comparison time must be positive");
    if (samples < 2) throw PreconditionError("need at least two comparison samples");
    if (sys.perturbed()) throw PreconditionError("correspondence check needs an unperturbed potential");
    double E = total_energy(sys, x0, v0);
    JacobiMetric jm(sys.metric(), sys.base_potential(), E);
    Trajectory orbit = integrate(sys, x0, v0, 0.0, T, tol);
    // Arc length reached at time T, with a margin so the mapped geodesic covers [0, T].
    double S = orbit_to_geodesic(orbit, jm, 0.0, tol).t_end() * 1.02 + 1e-9;
    Trajectory geo = integrate_jacobi_geodesic(jm, x0, orbit_to_geodesic_velocity(jm, x0, v0), 0.0, S, tol, route);
    Trajectory mapped = geodesic_to_orbit(resample(geo, samples), jm, 0.0, tol);
    CorrespondenceResult r;
    for (double h : geo.scalar()) r.max_speed_error = std::max(r.max_speed_error, std::abs(h - 1.0));
    r.t_covered = std::min(T, mapped.t_end());
    const int n = sys.dimension();
    for (std::size_t k = 0; k < mapped.size(); ++k) {
        double t = mapped.times()[k];
        if (t > T) break;
        State a = orbit.at(t);
        for (int i = 0; i < n; ++i) r.max_deviation = std::max(r.max_deviation, std::abs(a[i] - mapped.states()[k][i]));
    }
    return r;
}

}  // namespace jmlab
