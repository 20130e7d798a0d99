#include "jmlab/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace jmlab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using D = Dual<double>;

std::span<const double> as_span(const VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

State stack(const VectorXd& x, const VectorXd& v) {
    State y(x.data(), x.data() + x.size());
    y.insert(y.end(), v.data(), v.data() + v.size());
    return y;
}

double state_norm(const State& y) {
    double s = 0.0;
    for (double c : y) s += c * c;
    return std::sqrt(s);
}

// |b - a| with positions compared modulo the torus lattice.
double closure_distance(const Space& space, const State& a, const State& b, int n) {
    auto dx = space.difference(std::span<const double>(b.data(), n), std::span<const double>(a.data(), n));
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += dx[i] * dx[i] + (b[n + i] - a[n + i]) * (b[n + i] - a[n + i]);
    return std::sqrt(s);
}

// Orthonormal basis of the complement of `a` (n x (n-1)).
MatrixXd complement_basis(const VectorXd& a) {
    const int n = static_cast<int>(a.size());
    Eigen::HouseholderQR<MatrixXd> qr(a.normalized());
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, n);
    return Q.rightCols(n - 1);
}

OdeRhs first_order(const SystemSpec& sys) {
    return [&sys](double, const State& y, State& dy) { LagrangeField{&sys}(y, dy); };
}

// Integrates to t_end and replays the accepted steps with dual numbers.
// `y0` carries the seeds; `t_end` may carry a seed too.
std::vector<D> shoot(const SystemSpec& sys, const std::vector<D>& y0, const D& t_end, const Tolerances& tol) {
    State yv(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i) yv[i] = y0[i].val;
    OdeSolution sol = dopri5(first_order(sys), 0.0, yv, t_end.val, tol);
    auto nodes = replay_nodes(sol, t_end.val);
    LagrangeField field{&sys};
    return rk_replay(field, y0, std::span<const double>(nodes), t_end);
}

// Halves every step of the replay grid, including the last one up to t_end.
std::vector<double> bisect_steps(const std::vector<double>& nodes, double t_end) {
    std::vector<double> out;
    out.reserve(2 * nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        double next = k + 1 < nodes.size() ? nodes[k + 1] : t_end;
        out.push_back(nodes[k]);
        out.push_back(0.5 * (nodes[k] + next));
    }
    return out;
}

VectorXd gradient(const SystemSpec& sys, const VectorXd& q) {
    auto [u, g] = sys.potential_jet<double>(as_span(q));
    return Eigen::Map<VectorXd>(g.data(), sys.dimension());
}

double potential(const SystemSpec& sys, const VectorXd& q) { return sys.potential_value<double>(as_span(q)); }

// Moves q along the fixed direction d until U(q) = E.
VectorXd project_to_level(const SystemSpec& sys, VectorXd q, const VectorXd& d) {
    const double E = sys.energy();
    for (int it = 0; it < 60; ++it) {
        double f = potential(sys, q) - E;
        if (std::abs(f) <= 1e-15 * (1.0 + std::abs(E))) return q;
        double df = gradient(sys, q).dot(d);
        if (std::abs(df) <= 1e-300) break;
        q -= f / df * d;
    }
    if (std::abs(potential(sys, q) - E) > 1e-12 * (1.0 + std::abs(E)))
        throw ShootingError("could not project onto the level set U = E");
    return q;
}

}  // namespace

PeriodicOrbit make_periodic_orbit(const SystemSpec& sys, const PhaseState& start, double period, OrbitKind kind,
                                  const ShootingOptions& opt) {
    const int n = sys.dimension();
    if (!(period > 0.0)) throw PreconditionError("period must be positive");
    PeriodicOrbit orb;
    orb.kind = kind;
    orb.period = period;
    orb.energy = total_energy(sys, start.x, start.v);
    orb.trajectory = integrate(sys, start.x, start.v, 0.0, period, opt.tol);
    const Trajectory& tr = orb.trajectory;
    State y0 = tr.states().front();
    double scale = 1.0 + state_norm(y0);
    orb.closure_residual = closure_distance(sys.space(), y0, tr.states().back(), n);
    if (orb.closure_residual > opt.closure_tol * scale)
        throw ShootingError("orbit does not close: residual " + std::to_string(orb.closure_residual));
    orb.min_kinetic = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < tr.size(); ++k)
        orb.min_kinetic = std::min(orb.min_kinetic, 0.5 * f2(sys.metric(), tr.x(k), tr.v(k)));
    for (int m = 2; m <= opt.minimal_divisors; ++m)
        if (closure_distance(sys.space(), y0, tr.at(period / m), n) < 1e-6 * scale) orb.minimal = false;
    if (kind == OrbitKind::Brake) {
        State mid = tr.at(0.5 * period);
        orb.rest_points.push_back({0.0, start.x});
        orb.rest_points.push_back({0.5 * period, Eigen::Map<const VectorXd>(mid.data(), n)});
        const int samples = 64;
        for (int k = 1; k < samples; ++k) {
            double s = 0.5 * period * k / samples;
            State a = tr.at(0.5 * period + s), b = tr.at(0.5 * period - s);
            double d = 0.0;
            for (int i = 0; i < n; ++i) d = std::max(d, std::abs(a[i] - b[i]));
            orb.symmetry_residual = std::max(orb.symmetry_residual, d);
        }
    } else if (!(orb.min_kinetic > 1e-10)) {
        throw ShootingError("velocity vanishes along the orbit: not a rotation");
    }
    return orb;
}

PeriodicOrbit find_brake(const SystemSpec& sys, const VectorXd& seed, const ShootingOptions& opt) {
    const int n = sys.dimension();
    const double E = sys.energy();
    if (seed.size() != n || !seed.allFinite()) throw PreconditionError("brake seed has wrong dimension");
    double U0 = potential(sys, seed);
    if (std::abs(U0 - E) > 0.1 * (1.0 + std::abs(E)))
        throw PreconditionError("brake seed is far from the level set: U(seed) - E = " + std::to_string(U0 - E));
    VectorXd g = gradient(sys, seed);
    if (g.norm() <= 1e-6) throw PreconditionError("E is not a regular value of U near the seed (|grad U| <= 1e-6)");
    VectorXd q = project_to_level(sys, seed, g.normalized());

    const VectorXd zero = VectorXd::Zero(n);
    Trajectory first = integrate(sys, q, zero, 0.0, opt.t_max, opt.tol, {kinetic_minimum_event(sys, true)});
    if (!first.terminated) throw ShootingError("no turning point within t_max");
    double ts = first.t_end();

    const double vscale = 1.0 + std::sqrt(2.0 * std::max(E - potential(sys, q), 0.0)) + first.v(first.size() - 1).norm();
    int it = 0;
    for (;; ++it) {
        if (it >= opt.max_iterations) throw ShootingError("brake-orbit Newton did not converge");
        std::vector<D> y0(2 * n);
        for (int i = 0; i < n; ++i) {
            y0[i] = D::variable(q[i], n + 1, i);
            y0[n + i] = D(0.0);
        }
        auto yT = shoot(sys, y0, D::variable(ts, n + 1, n), opt.tol);
        VectorXd r(n);
        MatrixXd Jq(n, n), A(n, n);
        for (int i = 0; i < n; ++i) {
            r[i] = yT[n + i].val;
            for (int j = 0; j < n; ++j) Jq(i, j) = yT[n + i].deriv(j);
            A(i, n - 1) = yT[n + i].deriv(n);
        }
        if (r.norm() <= opt.newton_tol * vscale) break;
        VectorXd gq = gradient(sys, q);
        MatrixXd B = complement_basis(gq);
        A.leftCols(n - 1) = Jq * B;
        Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        auto sv = svd.singularValues();
        if (sv(n - 1) <= 1e-10 * sv(0))
            throw ShootingError("singular shooting Jacobian: the brake orbit may belong to a degenerate family");
        VectorXd delta = svd.solve(-r);
        q = project_to_level(sys, q + B * delta.head(n - 1), gq.normalized());
        ts += delta[n - 1];
        if (!(ts > 0.0) || ts > opt.t_max || !q.allFinite()) throw ShootingError("brake-orbit Newton diverged");
    }
    PeriodicOrbit orb = make_periodic_orbit(sys, {q, zero}, 2.0 * ts, OrbitKind::Brake, opt);
    orb.iterations = it;
    return orb;
}

PeriodicOrbit find_rotation(const SystemSpec& sys, const PhaseState& seed, std::optional<VectorXd> section_normal,
                            const ShootingOptions& opt) {
    const int n = sys.dimension();
    const double E = sys.energy();
    if (seed.x.size() != n || seed.v.size() != n) throw PreconditionError("rotation seed has wrong dimension");
    if (std::abs(total_energy(sys, seed.x, seed.v) - E) > 1e-8 * (1.0 + std::abs(E)))
        throw PreconditionError("rotation seed is not on the energy level");
    VectorXd a = section_normal ? *section_normal : seed.v;
    if (a.size() != n || a.norm() == 0.0) throw PreconditionError("section normal must be a nonzero n-vector");
    a.normalize();
    if (std::abs(a.dot(seed.v)) <= 1e-8 * seed.v.norm()) throw PreconditionError("seed is tangent to the section");
    const MatrixXd P = complement_basis(a);
    const Space& space = sys.space();

    double tau;
    if (opt.period_guess) {
        tau = *opt.period_guess;
    } else {
        Event ev;
        ev.terminal = true;
        int axis = -1;
        for (int i = 0; i < n; ++i)
            if (std::abs(std::abs(a[i]) - 1.0) < 1e-12) axis = i;
        const VectorXd x0 = seed.x;
        if (space.torus() && axis >= 0) {
            // Crossings of any lattice translate of the section.
            double L = space.periods[axis];
            ev.fn = [axis, L, x0](double, const State& y) {
                return std::sin(std::numbers::pi * (y[axis] - x0[axis]) / L);
            };
        } else {
            ev.direction = a.dot(seed.v) > 0.0 ? 1 : -1;
            ev.fn = [a, x0, n](double, const State& y) {
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += a[i] * (y[i] - x0[i]);
                return s;
            };
        }
        Trajectory probe = integrate(sys, seed.x, seed.v, 0.0, opt.t_max, opt.tol, {ev});
        if (!probe.terminated) throw ShootingError("no return to the section within t_max");
        tau = probe.t_end();
    }

    VectorXd xa = seed.x, va = seed.v;
    const int N = 2 * n - 1;
    int it = 0;
    for (;; ++it) {
        if (it >= opt.max_iterations) throw ShootingError("rotation Newton did not converge");
        VectorXd da = va.normalized();
        MatrixXd Q = complement_basis(da);
        std::vector<D> x(n), dir(n);
        for (int i = 0; i < n; ++i) {
            x[i] = D(xa[i]);
            dir[i] = D(da[i]);
            for (int k = 0; k < n - 1; ++k) {
                x[i] += P(i, k) * D::variable(0.0, N, k);
                dir[i] += Q(i, k) * D::variable(0.0, N, n - 1 + k);
            }
        }
        D kin = 2.0 * (E - sys.potential_value<D>(std::span<const D>(x)));
        if (!(kin.val > 0.0)) throw ShootingError("rotation iterate left the Hill region");
        D speed = sqrt(kin / kernel::f2(sys.metric(), std::span<const D>(x), std::span<const D>(dir)));
        std::vector<D> y0(2 * n);
        for (int i = 0; i < n; ++i) {
            y0[i] = x[i];
            y0[n + i] = speed * dir[i];
        }
        auto yT = shoot(sys, y0, D::variable(tau, N, N - 1), opt.tol);
        VectorXd r(2 * n);
        MatrixXd J(2 * n, N);
        for (int i = 0; i < 2 * n; ++i) {
            double shift = 0.0;
            if (i < n && space.torus())
                shift = std::round((yT[i].val - y0[i].val) / space.periods[i]) * space.periods[i];
            r[i] = yT[i].val - y0[i].val - shift;
            for (int k = 0; k < N; ++k) J(i, k) = yT[i].deriv(k) - y0[i].deriv(k);
        }
        State yv(2 * n);
        for (int i = 0; i < 2 * n; ++i) yv[i] = y0[i].val;
        if (r.norm() <= opt.newton_tol * (1.0 + state_norm(yv))) {
            xa = Eigen::Map<VectorXd>(yv.data(), n);
            va = Eigen::Map<VectorXd>(yv.data() + n, n);
            break;
        }
        VectorXd delta = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(J).solve(-r);
        VectorXd xn = xa + P * delta.head(n - 1);
        VectorXd dn = da + Q * delta.segment(n - 1, n - 1);
        double k2 = 2.0 * (E - potential(sys, xn));
        if (!(k2 > 0.0)) throw ShootingError("rotation iterate left the Hill region");
        va = dn * std::sqrt(k2 / f2(sys.metric(), xn, dn));
        xa = xn;
        tau += delta[N - 1];
        if (!(tau > 0.0) || tau > opt.t_max || !xa.allFinite()) throw ShootingError("rotation Newton diverged");
    }
    PeriodicOrbit orb = make_periodic_orbit(sys, {xa, va}, tau, OrbitKind::Rotation, opt);
    orb.iterations = it;
    return orb;
}

MonodromyReport analyze_monodromy(MatrixXd M, double tol_eig) {
    MonodromyReport rep;
    rep.tol_eig = tol_eig;
    Eigen::EigenSolver<MatrixXd> es(M, false);
    for (int i = 0; i < M.rows(); ++i) rep.eigenvalues.push_back(es.eigenvalues()[i]);
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(), [](auto a, auto b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });
    for (const auto& l : rep.eigenvalues)
        if (std::abs(l - 1.0) < tol_eig) ++rep.trivial_multiplicity;
    rep.nondegenerate = rep.trivial_multiplicity == 2;
    rep.det_error = std::abs(M.determinant() - 1.0);
    rep.matrix = std::move(M);
    return rep;
}

MonodromyReport monodromy(const SystemSpec& sys, const PeriodicOrbit& orbit, int iterates, double tol_eig,
                          const Tolerances& tol) {
    const int n = sys.dimension();
    if (iterates < 1) throw PreconditionError("iterates must be >= 1");
    if (orbit.trajectory.empty()) throw PreconditionError("orbit has no trajectory");
    if (!sys.metric().riemannian()) {
        for (std::size_t k = 0; k < orbit.trajectory.size(); ++k)
            if (orbit.trajectory.v(k).lpNorm<Eigen::Infinity>() < 1e-8)
                throw PreconditionError("monodromy through a rest point needs a riemannian kinetic model");
    }
    const State& y0v = orbit.trajectory.states().front();
    std::vector<D> y0(2 * n);
    for (int i = 0; i < 2 * n; ++i) y0[i] = D::variable(y0v[i], 2 * n, i);
    const double T = iterates * orbit.period;
    State yv(y0v.begin(), y0v.end());
    OdeSolution sol = dopri5(first_order(sys), 0.0, yv, T, tol);
    auto nodes = replay_nodes(sol, T);
    LagrangeField field{&sys};
    auto derivative = [&](const std::vector<double>& grid) {
        auto yT = rk_replay(field, y0, std::span<const double>(grid), D(T));
        MatrixXd M(2 * n, 2 * n);
        for (int i = 0; i < 2 * n; ++i)
            for (int j = 0; j < 2 * n; ++j) M(i, j) = yT[i].deriv(j);
        return M;
    };
    // The step control only sees the orbit, not its linearization; halve the
    // steps until the derivative settles.
    MatrixXd M = derivative(nodes);
    for (int level = 0; level < 8; ++level) {
        nodes = bisect_steps(nodes, T);
        MatrixXd fine = derivative(nodes);
        double change = (fine - M).lpNorm<Eigen::Infinity>();
        M = std::move(fine);
        if (change <= 1e-10 * (1.0 + M.lpNorm<Eigen::Infinity>())) break;
    }
    return analyze_monodromy(std::move(M), tol_eig);
}

FamilyReport verify_degenerate_family(const OscillatorSpec& osc, double a1, double a2, const std::vector<double>& s,
                                      int samples) {
    SystemSpec sys = oscillator_system(osc);
    const auto& res = osc.resonance.value();
    const double w1 = res.m.at(0) * res.base, w2 = res.m.at(1) * res.base;
    FamilyReport rep;
    rep.period = lissajous_period(osc);
    double emin = std::numeric_limits<double>::infinity(), emax = -emin;
    for (double si : s) {
        FamilyMember m;
        m.s = si;
        PhaseState st0 = lissajous_state(osc, a1, a2, si, 0.0);
        m.energy = total_energy(sys, st0.x, st0.v);
        for (int k = 0; k <= samples; ++k) {
            double t = rep.period * k / samples;
            PhaseState st = lissajous_state(osc, a1, a2, si, t);
            VectorXd acc = VectorXd::Zero(osc.dimension());
            acc[0] = -w1 * w1 * st.x[0];
            acc[1] = -w2 * w2 * st.x[1];
            m.residual = std::max(m.residual, (acc - lagrange_rhs(sys, st.x, st.v)).lpNorm<Eigen::Infinity>());
            double e = total_energy(sys, st.x, st.v);
            emin = std::min(emin, e);
            emax = std::max(emax, e);
        }
        PhaseState stT = lissajous_state(osc, a1, a2, si, rep.period);
        m.closure = std::sqrt((stT.x - st0.x).squaredNorm() + (stT.v - st0.v).squaredNorm());
        rep.max_residual = std::max(rep.max_residual, m.residual);
        rep.members.push_back(m);
    }
    rep.energy_spread = s.empty() ? 0.0 : emax - emin;
    return rep;
}

}  // namespace jmlab
