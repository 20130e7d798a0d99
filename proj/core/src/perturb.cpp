#include "jmlab/perturb.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "jmlab/jacobi.hpp"
#include "jmlab/reference.hpp"

namespace jmlab {

using Eigen::VectorXd;

namespace {

VectorXd point_at(const QuinticSpline& c, double t) {
    auto v = c.eval(t, 0)[0];
    return Eigen::Map<VectorXd>(v.data(), v.size());
}

std::span<const double> as_span(const VectorXd& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

// Fbar length and orbit time of a curve on [a, b], composite Simpson.
std::pair<double, double> length_and_time(const JacobiMetric& jm, const QuinticSpline& c, double a, double b,
                                          int intervals = 4000) {
    double len = 0.0, time = 0.0;
    const double h = (b - a) / intervals;
    for (int k = 0; k <= intervals; ++k) {
        double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        auto e = c.eval(a + k * h, 1);
        VectorXd x = Eigen::Map<VectorXd>(e[0].data(), e[0].size());
        VectorXd v = Eigen::Map<VectorXd>(e[1].data(), e[1].size());
        double F = std::sqrt(jacobi_F2(jm, x, v));
        len += w * F;
        time += w * F / jm.psi<double>(as_span(x));
    }
    return {len * h / 3.0, time * h / 3.0};
}

// Normal part of c'' + 2 G for the metric exp(phi) psi F^2 at t.
double geodesic_defect(const ConformalPerturbation& pert, double t) {
    using D = Dual<double>;
    const auto& jm = pert.phi->metric();
    const int n = jm.dimension();
    auto c = pert.curve.eval(t, 2);
    std::vector<D> xd(n);
    for (int i = 0; i < n; ++i) xd[i] = D::variable(c[0][i], n, i);
    using std::exp;
    D hat = exp(pert.phi->eval<D>(std::span<const D>(xd))) * jm.psi<D>(std::span<const D>(xd));
    std::vector<double> dpsi(n);
    for (int i = 0; i < n; ++i) dpsi[i] = hat.deriv(i);
    auto G = conformal_geodesic_coefficients(jm.base(), std::span<const double>(c[0]), std::span<const double>(c[1]),
                                             hat.val, dpsi);
    VectorXd A(n), v(n);
    for (int i = 0; i < n; ++i) {
        A[i] = c[2][i] + 2.0 * G[i];
        v[i] = c[1][i];
    }
    return (A - A.dot(v) / v.squaredNorm() * v).norm();
}

VectorXd random_direction(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    VectorXd d(n);
    for (int i = 0; i < n; ++i) d[i] = g(rng);
    return d.normalized();
}

}  // namespace

double ConformalPerturbation::phi_at(const VectorXd& x) const { return phi->eval<double>(as_span(x)); }

ConformalPerturbation build_perturbation(const JacobiMetric& jm, const VectorXd& p, const VectorXd& w, double eta,
                                         double eps, double s, std::optional<double> rho,
                                         std::optional<VectorXd> displacement) {
    ConformalPerturbation out;
    out.tube = std::make_shared<const TubeFrame>(TubeFrame::build(jm, p, w, eta, eps, std::move(displacement)));
    out.curve = displaced_curve(*out.tube, s);
    out.phi = std::make_shared<const ConformalFactor>(jm, out.curve, eta, eps, rho.value_or(eps));
    out.s = s;
    return out;
}

SystemSpec perturbed_system(const SystemSpec& sys, const std::vector<ConformalPerturbation>& perturbations) {
    if (!sys.metric().riemannian()) throw PreconditionError("perturbation needs a riemannian kinetic model");
    PerturbedPotential pp{sys.base_potential(), sys.energy(), {}};
    if (const auto* old = std::get_if<PerturbedPotential>(&sys.potential())) pp.factors = old->factors;
    for (const auto& p : perturbations) {
        if (std::abs(p.phi->metric().energy() - sys.energy()) > 1e-12 * (1.0 + std::abs(sys.energy())))
            throw PreconditionError("perturbation was built at a different energy");
        pp.factors.push_back(p.phi);
    }
    return SystemSpec(sys.metric(), pp, sys.energy());
}

PerturbationChecks check_perturbation(const SystemSpec& sys, const ConformalPerturbation& pert, int samples,
                                      std::uint64_t seed) {
    if (samples < 1) throw PreconditionError("samples must be positive");
    const auto& jm = pert.phi->metric();
    const int n = jm.dimension();
    const double eta = pert.eta(), eps = pert.eps(), rho = pert.phi->rho(), E = sys.energy();
    SystemSpec psys = perturbed_system(sys, {pert});
    PerturbationChecks out;

    const int grid = 2000;
    for (int k = 0; k <= grid; ++k) {
        double t = -2.0 * eta + 4.0 * eta * k / grid;
        out.on_curve_max = std::max(out.on_curve_max, std::abs(pert.phi_at(point_at(pert.curve, t))));
        out.geodesic_residual = std::max(out.geodesic_residual, geodesic_defect(pert, t));
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    VectorXd lo = point_at(pert.curve, -2.0 * eta), hi = lo;
    for (const auto& t : pert.curve.nodes()) {
        VectorXd c = point_at(pert.curve, t);
        lo = lo.cwiseMin(c);
        hi = hi.cwiseMax(c);
    }
    lo.array() -= 2.0 * rho;
    hi.array() += 2.0 * rho;
    // Half of the points near the curve, half anywhere in its bounding box.
    for (int k = 0; k < samples; ++k) {
        VectorXd x(n);
        if (k % 2 == 0) {
            double t = -2.0 * eta + 4.0 * eta * unit(rng);
            x = point_at(pert.curve, t) + 2.0 * rho * unit(rng) * random_direction(rng, n);
        } else {
            for (int i = 0; i < n; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
        }
        double ph = pert.phi_at(x);
        out.max_abs_phi = std::max(out.max_abs_phi, std::abs(ph));
        if (pert.phi->in_support(as_span(x))) continue;
        ++out.support_samples;
        if (ph != 0.0 || psys.potential_value<double>(as_span(x)) != sys.potential_value<double>(as_span(x)))
            ++out.support_violations;
    }

    // The potential identity, at points inside the transition windows.
    for (int k = 0; k < samples; ++k) {
        double t = (eta + 2.0 * eps + 2.0 * eps * unit(rng)) * (unit(rng) < 0.5 ? -1.0 : 1.0);
        VectorXd x = point_at(pert.curve, t) + 0.9 * rho * unit(rng) * random_direction(rng, n);
        VectorXd v = random_direction(rng, n) * (0.5 + unit(rng));
        double ph = pert.phi_at(x);
        out.max_abs_phi = std::max(out.max_abs_phi, std::abs(ph));
        double F2 = kernel::f2<double>(sys.metric(), as_span(x), as_span(v));
        double U = sys.potential_value<double>(as_span(x)), Ut = psys.potential_value<double>(as_span(x));
        double lhs = std::exp(ph) * 2.0 * (E - U) * F2, rhs = 2.0 * (E - Ut) * F2;
        out.identity_residual = std::max(out.identity_residual, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }

    out.length_center = length_and_time(jm, pert.tube->center(), -2.0 * eta, 2.0 * eta).first;
    out.length_displaced = length_and_time(jm, pert.curve, -2.0 * eta, 2.0 * eta).first;
    return out;
}

ClosestApproach closest_approach(const Strand& a, const Strand& b, int samples) {
    if (samples < 2) throw PreconditionError("samples must be >= 2");
    std::vector<VectorXd> pa(samples + 1), pb(samples + 1);
    auto ta = [&](int k) { return a.t0 + (a.t1 - a.t0) * k / samples; };
    auto tb = [&](int k) { return b.t0 + (b.t1 - b.t0) * k / samples; };
    for (int k = 0; k <= samples; ++k) {
        pa[k] = a.x(ta(k));
        pb[k] = b.x(tb(k));
    }
    ClosestApproach best{std::numeric_limits<double>::infinity(), a.t0, b.t0};
    for (int i = 0; i <= samples; ++i)
        for (int j = 0; j <= samples; ++j) {
            double d = (pa[i] - pb[j]).squaredNorm();
            if (d < best.distance) best = {d, ta(i), tb(j)};
        }
    // Gauss-Newton on a(s) - b(t), derivatives by central differences.
    double s = best.s, t = best.t, f = best.distance;
    const double ha = 1e-6 * (a.t1 - a.t0), hb = 1e-6 * (b.t1 - b.t0);
    for (int it = 0; it < 50; ++it) {
        VectorXd r = a.x(s) - b.x(t);
        Eigen::MatrixXd J(r.size(), 2);
        J.col(0) = (a.x(s + ha) - a.x(s - ha)) / (2 * ha);
        J.col(1) = -(b.x(t + hb) - b.x(t - hb)) / (2 * hb);
        Eigen::Vector2d d = (J.transpose() * J).ldlt().solve(-J.transpose() * r);
        if (!d.allFinite()) break;
        double s1 = std::clamp(s + d[0], a.t0, a.t1), t1 = std::clamp(t + d[1], b.t0, b.t1);
        double f1 = (a.x(s1) - b.x(t1)).squaredNorm();
        if (!(f1 < f)) break;
        s = s1;
        t = t1;
        f = f1;
    }
    return {std::sqrt(f), s, t};
}

RemovalReport verify_removal(const SystemSpec& sys, const ConformalPerturbation& pert, const Strand& other,
                             const Tolerances& tol) {
    const auto& jm = pert.phi->metric();
    const double eta = pert.eta();
    RemovalReport rep;
    rep.s = pert.s;
    Strand center{[&](double t) { return point_at(pert.tube->center(), t); }, -2.0 * eta, 2.0 * eta};
    Strand moved{[&](double t) { return point_at(pert.curve, t); }, -2.0 * eta, 2.0 * eta};
    rep.before = closest_approach(center, other);
    rep.after = closest_approach(moved, other);
    rep.required_gap = 0.5 * pert.s;
    rep.removed = pert.s > 0.0 && rep.after.distance >= rep.required_gap;

    rep.other_strand_clear = true;
    for (int k = 0; k <= 2000; ++k)
        if (pert.phi_at(other.x(other.t0 + (other.t1 - other.t0) * k / 2000.0)) != 0.0) rep.other_strand_clear = false;

    // Re-solve the perturbed system from the start of the displaced curve.
    SystemSpec psys = perturbed_system(sys, {pert});
    rep.flight_time = length_and_time(jm, pert.curve, -2.0 * eta, 2.0 * eta).second;
    auto c0 = pert.curve.eval(-2.0 * eta, 1);
    VectorXd x0 = Eigen::Map<VectorXd>(c0[0].data(), c0[0].size());
    VectorXd w0 = Eigen::Map<VectorXd>(c0[1].data(), c0[1].size());
    w0 /= std::sqrt(jacobi_F2(jm, x0, w0));
    VectorXd v0 = geodesic_to_orbit_velocity(jm, x0, w0);
    // Between the windows the force can vanish identically; cap the step so
    // that a window (Fbar length 2 eps, orbit time >= 2 eps / max psi) is
    // never stepped over.
    double psi_max = 0.0;
    for (int k = 0; k <= 400; ++k)
        psi_max = std::max(psi_max, jm.psi<double>(as_span(point_at(pert.curve, -2.0 * eta + eta * k / 100.0))));
    Tolerances capped = tol;
    capped.hmax = std::min(tol.hmax, 0.25 * pert.eps() / psi_max);
    Trajectory orbit = integrate(psys, x0, v0, 0.0, rep.flight_time, capped);
    rep.closure = (orbit.x(orbit.size() - 1) - point_at(pert.curve, 2.0 * eta)).norm();
    Trajectory fine = resample(orbit, 400);
    for (std::size_t k = 0; k < fine.size(); ++k) {
        VectorXd x = fine.x(k);
        rep.path_deviation = std::max(rep.path_deviation, std::sqrt(pert.phi->nearest(as_span(x)).second));
    }
    return rep;
}

RemovalCase planar_crossing_case(double s, double eta, double eps) {
    SystemSpec sys(MetricModel::euclidean(3), parse("0", 3), 0.5);
    VectorXd p = VectorXd::Zero(3), w = VectorXd::Unit(3, 0), d = VectorXd::Unit(3, 2);
    auto pert = build_perturbation(sys.jacobi(), p, w, eta, eps, s, std::nullopt, d);
    Strand other{[](double t) { return VectorXd(t * VectorXd::Unit(3, 1)); }, -2.0 * eta, 2.0 * eta};
    return {sys, pert, other};
}

RemovalCase lissajous_case(double s, double eta, double eps, double alpha3) {
    const double pi = std::numbers::pi;
    OscillatorSpec osc({1.0, 2.0, alpha3}, 1.0);
    SystemSpec sys = oscillator_system(osc);
    auto x = [pi](double t) {
        VectorXd r(3);
        r << std::cos(t - pi / 4), 0.5 * std::cos(2 * t), 0.0;
        return r;
    };
    const double t1 = 3 * pi / 4, t2 = 7 * pi / 4;
    VectorXd v(3);
    v << -std::sin(t1 - pi / 4), -std::sin(2 * t1), 0.0;
    JacobiMetric jm = sys.jacobi();
    VectorXd w = orbit_to_geodesic_velocity(jm, x(t1), v);
    auto pert = build_perturbation(jm, x(t1), w, eta, eps, s, std::nullopt, VectorXd::Unit(3, 2));
    Strand other{x, t2 - 0.6, t2 + 0.6};
    return {sys, pert, other};
}

PhiGrid phi_grid(const ConformalPerturbation& pert, const VectorXd& origin, const VectorXd& e1, const VectorXd& e2,
                 double extent1, double extent2, int n1, int n2) {
    if (n1 < 2 || n2 < 2) throw PreconditionError("phi grid needs at least 2 x 2 points");
    PhiGrid g{origin, e1, e2, {}, {}, {}};
    for (int i = 0; i < n1; ++i) g.a.push_back(-extent1 + 2.0 * extent1 * i / (n1 - 1));
    for (int j = 0; j < n2; ++j) g.b.push_back(-extent2 + 2.0 * extent2 * j / (n2 - 1));
    g.values.assign(n1, std::vector<double>(n2, 0.0));
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) g.values[i][j] = pert.phi_at(origin + g.a[i] * e1 + g.b[j] * e2);
    return g;
}

}  // namespace jmlab
