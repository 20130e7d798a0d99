#include <cmath>

#include "doctest.h"
#include "jmlab/conformal.hpp"
#include "oracles.hpp"

using namespace jmlab;
using Eigen::VectorXd;

namespace {

// psi = 1: Fbar is the euclidean norm in R^3.
JacobiMetric flat3() { return JacobiMetric(MetricModel::euclidean(3), parse("0", 3), 0.5); }

JacobiMetric bumpy3() {
    return JacobiMetric(MetricModel::euclidean(3), parse("0.3*x1^2 + 0.2*x2^2 + 0.1*x3^2 + 0.05*x1*x2", 3), 2.0);
}

VectorXd vec3(double a, double b, double c) {
    VectorXd v(3);
    v << a, b, c;
    return v;
}

// Normal part of the geodesic defect of `curve` for exp(phi) Fbar^2 at t,
// with grad phi taken by finite differences.
double fd_normal_residual(const ConformalFactor& cf, double t) {
    const int n = 3;
    const auto& jm = cf.metric();
    auto c = cf.curve().eval(t, 2);
    oracle::Fn phi = [&](const std::vector<double>& x) { return cf.eval<double>(std::span<const double>(x)); };
    oracle::Fn psi_hat = [&](const std::vector<double>& x) {
        return std::exp(phi(x)) * jm.psi<double>(std::span<const double>(x));
    };
    std::vector<double> dpsi(n);
    for (int i = 0; i < n; ++i) dpsi[i] = oracle::central_diff(psi_hat, c[0], i, 1e-6);
    double ph = psi_hat(c[0]);
    std::span<const double> x(c[0]), v(c[1]);
    auto G = conformal_geodesic_coefficients(jm.base(), x, v, ph, dpsi);
    VectorXd A(n), vv(n);
    for (int i = 0; i < n; ++i) {
        A[i] = c[2][i] + 2.0 * G[i];
        vv[i] = c[1][i];
    }
    A -= A.dot(vv) / vv.squaredNorm() * vv;
    return A.norm();
}

}  // namespace

TEST_CASE("conformal: smoothstep and cut-off profile") {
    auto s0 = smoothstep(0.0), s1 = smoothstep(1.0), sh = smoothstep(0.5);
    CHECK(s0[0] == 0.0);
    CHECK(s1[0] == 1.0);
    CHECK(sh[0] == doctest::Approx(0.5));
    oracle::Fn f = [](const std::vector<double>& u) { return smoothstep(u[0])[0]; };
    oracle::Fn df = [](const std::vector<double>& u) { return smoothstep(u[0])[1]; };
    for (double u : {0.1, 0.37, 0.8}) {
        CHECK(smoothstep(u)[1] == doctest::Approx(oracle::central_diff(f, {u}, 0)).epsilon(1e-8));
        CHECK(smoothstep(u)[2] == doctest::Approx(oracle::central_diff(df, {u}, 0)).epsilon(1e-7));
    }
    const double eta = 1.0, eps = 0.1;
    CHECK(cutoff_alpha(0.0, eta, eps)[0] == 1.0);
    CHECK(cutoff_alpha(1.2, eta, eps)[0] == 1.0);
    CHECK(cutoff_alpha(-1.2, eta, eps)[0] == 1.0);
    CHECK(cutoff_alpha(1.4, eta, eps)[0] == 0.0);
    CHECK(cutoff_alpha(-1.9, eta, eps)[0] == 0.0);
    oracle::Fn a = [&](const std::vector<double>& t) { return cutoff_alpha(t[0], eta, eps)[0]; };
    oracle::Fn da = [&](const std::vector<double>& t) { return cutoff_alpha(t[0], eta, eps)[1]; };
    for (double t : {1.25, -1.33, 1.38}) {
        CHECK(cutoff_alpha(t, eta, eps)[1] == doctest::Approx(oracle::central_diff(a, {t}, 0)).epsilon(1e-7));
        CHECK(cutoff_alpha(t, eta, eps)[2] == doctest::Approx(oracle::central_diff(da, {t}, 0)).epsilon(1e-6));
    }
}

TEST_CASE("conformal: quintic spline reproduces quintics and is C2") {
    // p(t) = t^5 - 2 t^3 + t, q(t) = cos(t)
    std::vector<double> t{-1.0, -0.3, 0.2, 0.9, 1.5};
    std::vector<std::vector<double>> x, dx, ddx;
    for (double s : t) {
        x.push_back({std::pow(s, 5) - 2 * std::pow(s, 3) + s, std::cos(s)});
        dx.push_back({5 * std::pow(s, 4) - 6 * s * s + 1, -std::sin(s)});
        ddx.push_back({20 * std::pow(s, 3) - 12 * s, -std::cos(s)});
    }
    QuinticSpline sp(t, x, dx, ddx);
    for (double s : {-0.9, -0.3, 0.05, 0.2, 0.77, 1.5}) {
        auto e = sp.eval(s, 2);
        CHECK(std::abs(e[0][0] - (std::pow(s, 5) - 2 * std::pow(s, 3) + s)) < 1e-12);
        CHECK(std::abs(e[1][0] - (5 * std::pow(s, 4) - 6 * s * s + 1)) < 1e-11);
        CHECK(std::abs(e[2][0] - (20 * std::pow(s, 3) - 12 * s)) < 1e-10);
        CHECK(std::abs(e[0][1] - std::cos(s)) < 1e-5);
    }
    for (double node : {-0.3, 0.2, 0.9}) {
        auto l = sp.eval(node - 1e-12, 2), r = sp.eval(node + 1e-12, 2);
        for (int k = 0; k < 3; ++k) CHECK(std::abs(l[k][1] - r[k][1]) < 1e-8);
    }
    CHECK_THROWS_AS(QuinticSpline({0.0, 0.0}, {{0.0}, {1.0}}, {{0.0}, {0.0}}, {{0.0}, {0.0}}), PreconditionError);
}

TEST_CASE("conformal: flat tube frame, chart and inverse") {
    auto tube = TubeFrame::build(flat3(), vec3(0, 0, 0), vec3(2, 0, 0), 1.0, 0.1);
    // Unit-speed straight line along e1; default displacement is e2.
    auto c = tube.center().eval(1.7, 2);
    CHECK(std::abs(c[0][0] - 1.7) < 1e-10);
    CHECK(std::abs(c[1][0] - 1.0) < 1e-10);
    CHECK(std::abs(c[2][0]) < 1e-9);
    auto w = tube.frame(0.4);
    REQUIRE(w.size() == 2);
    CHECK((w[0] - vec3(0, 1, 0)).norm() < 1e-12);
    CHECK((w[1] - vec3(0, 0, 1)).norm() < 1e-12);
    std::vector<double> u{0.03, -0.02};
    VectorXd x = tube.xi(-0.6, u);
    auto [t, uu] = tube.inverse(x);
    CHECK(std::abs(t + 0.6) < 1e-12);
    CHECK(std::abs(uu[0] - 0.03) < 1e-12);
    CHECK(std::abs(uu[1] + 0.02) < 1e-12);
    CHECK(tube.overlap_distance() > 0.3);
}

TEST_CASE("conformal: curved tube frame is orthonormal and inverts xi") {
    auto jm = bumpy3();
    auto tube = TubeFrame::build(jm, vec3(0.2, -0.1, 0.3), vec3(1, 0.5, 0.2), 0.8, 0.1, vec3(0, 0, 1));
    for (double t : {-1.5, -0.2, 0.0, 1.1}) {
        auto c = tube.center().eval(t, 1);
        std::span<const double> x(c[0]), v(c[1]);
        double psi = jm.psi(x);
        CHECK(std::abs(jm.f2(x, v) - 1.0) < 1e-9);
        auto w = tube.frame(t);
        VectorXd cv = Eigen::Map<const VectorXd>(c[1].data(), 3);
        for (std::size_t a = 0; a < w.size(); ++a) {
            CHECK(std::abs(psi * w[a].dot(cv)) < 1e-12);
            for (std::size_t b = 0; b < w.size(); ++b)
                CHECK(std::abs(psi * w[a].dot(w[b]) - (a == b ? 1.0 : 0.0)) < 1e-12);
        }
        CHECK(w[0].normalized()[2] > 0.9);  // follows the requested displacement
        std::vector<double> u{0.02, 0.04};
        auto [ts, us] = tube.inverse(tube.xi(t, u));
        CHECK(std::abs(ts - t) < 1e-10);
        CHECK(std::abs(us[0] - u[0]) < 1e-10);
        CHECK(std::abs(us[1] - u[1]) < 1e-10);
    }
    // Center is an Fbar geodesic: x'' + 2 Gbar(x, x') = 0 between nodes too.
    for (double t : {-1.33, 0.071, 1.27}) {
        auto c = tube.center().eval(t, 2);
        auto G = jm.geodesic_coefficients(std::span<const double>(c[0]), std::span<const double>(c[1]));
        for (int i = 0; i < 3; ++i) CHECK(std::abs(c[2][i] + 2 * G[i]) < 1e-7);
    }
}

TEST_CASE("conformal: tube parameter and overlap errors") {
    auto jm = flat3();
    CHECK_THROWS_AS(TubeFrame::build(jm, vec3(0, 0, 0), vec3(1, 0, 0), 0.5, 0.1), PerturbationError);
    CHECK_THROWS_AS(TubeFrame::build(jm, vec3(0, 0, 0), vec3(1, 0, 0), 1.0, 0.1, vec3(2, 0, 0)),
                    PerturbationError);
    // Circular oscillator orbit of radius 1/2 has Jacobi length pi/2 < 4 eta.
    JacobiMetric osc(MetricModel::euclidean(3), parse("0.5*x1^2 + 0.5*x2^2 + 0.5*x3^2", 3), 0.25);
    CHECK_THROWS_AS(TubeFrame::build(osc, vec3(0.5, 0, 0), vec3(0, 1, 0), 1.0, 0.1), PerturbationError);
    auto base2 = MetricModel::finsler(parse("v1^2 + v2^2 + v3^2 + 0.1*sqrt(v1^4 + v2^4 + v3^4)", 3));
    CHECK_THROWS_AS(TubeFrame::build(JacobiMetric(base2, parse("0", 3), 1.0), vec3(0, 0, 0), vec3(1, 0, 0), 1.0, 0.1),
                    PerturbationError);
}

TEST_CASE("conformal: flat displaced curve is the blended offset") {
    auto tube = TubeFrame::build(flat3(), vec3(0, 0, 0), vec3(1, 0, 0), 1.0, 0.1);
    const double s = 0.03;
    auto cs = displaced_curve(tube, s);
    for (double t : {-1.9, -1.35, -1.25, 0.0, 0.5, 1.31, 1.5}) {
        auto a = cutoff_alpha(t, 1.0, 0.1);
        auto e = cs.eval(t, 2);
        CHECK(std::abs(e[0][0] - t) < 1e-10);
        CHECK(std::abs(e[0][1] - a[0] * s) < 1e-10);
        CHECK(std::abs(e[1][1] - a[1] * s) < 1e-8);
        CHECK(std::abs(e[2][1] - a[2] * s) < 1e-6);
    }
    auto c0 = displaced_curve(tube, 0.0);
    CHECK(std::abs(c0.eval(0.3, 0)[0][1]) < 1e-15);
    CHECK_THROWS_AS(displaced_curve(tube, 0.051), PerturbationError);
    CHECK_THROWS_AS(displaced_curve(tube, -0.01), PerturbationError);
}

TEST_CASE("conformal: phi vanishes on the curve, has the prescribed gradient and compact support") {
    auto jm = bumpy3();
    const double eta = 0.8, eps = 0.1;
    auto tube = TubeFrame::build(jm, vec3(0.2, -0.1, 0.3), vec3(1, 0.5, 0.2), eta, eps, vec3(0, 0, 1));
    auto cs = displaced_curve(tube, 0.02);
    ConformalFactor cf(jm, cs, eta, eps, eps);
    oracle::Fn phi = [&](const std::vector<double>& x) { return cf.eval<double>(std::span<const double>(x)); };
    for (double t : {-1.15, -1.05, 1.02, 1.17}) {
        REQUIRE(cf.in_window(t));
        auto c = cs.eval(t, 0)[0];
        CHECK(std::abs(phi(c)) < 1e-12);
        auto G = cf.normal_gradient(t);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(oracle::central_diff(phi, c, i, 1e-6) - G[i]) < 1e-6);
        // The dual-number gradient agrees with finite differences off the curve.
        auto x = c;
        x[2] += 0.01;
        x[0] -= 0.005;
        using D = Dual<double>;
        std::vector<D> xd(3);
        for (int i = 0; i < 3; ++i) xd[i] = D::variable(x[i], 3, i);
        D val = cf.eval<D>(std::span<const D>(xd));
        CHECK(std::abs(val.val - phi(x)) < 1e-14);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(val.deriv(i) - oracle::central_diff(phi, x, i, 1e-6)) < 1e-6);
    }
    CHECK(cf.normal_gradient(0.0)[0] == 0.0);
    CHECK(phi(cs.eval(0.0, 0)[0]) == 0.0);
    auto far = cs.eval(1.1, 0)[0];
    far[2] += 0.2;
    CHECK(phi(far) == 0.0);
    CHECK_FALSE(cf.in_support(far));
}

TEST_CASE("conformal: displaced curve is a pregeodesic of exp(phi) Fbar^2") {
    auto jm = bumpy3();
    const double eta = 0.8, eps = 0.1;
    auto tube = TubeFrame::build(jm, vec3(0.2, -0.1, 0.3), vec3(1, 0.5, 0.2), eta, eps, vec3(0, 0, 1));
    auto cs = displaced_curve(tube, 0.02);
    ConformalFactor cf(jm, cs, eta, eps, eps);
    double worst = 0.0, before = 0.0;
    for (double t = -1.55; t <= 1.55; t += 0.0173) {
        worst = std::max(worst, fd_normal_residual(cf, t));
        if (cf.in_window(t)) {
            auto c = cs.eval(t, 2);
            auto G = jm.geodesic_coefficients(std::span<const double>(c[0]), std::span<const double>(c[1]));
            VectorXd A(3), v(3);
            for (int i = 0; i < 3; ++i) {
                A[i] = c[2][i] + 2 * G[i];
                v[i] = c[1][i];
            }
            before = std::max(before, (A - A.dot(v) / v.squaredNorm() * v).norm());
        }
    }
    CHECK(before > 1e-3);  // the unperturbed metric does not have it as a geodesic
    CHECK(worst < 1e-6);
}
