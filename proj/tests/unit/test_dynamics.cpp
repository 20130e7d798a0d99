#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "jmlab/dynamics.hpp"
#include "oracles.hpp"

using namespace jmlab;
using Eigen::VectorXd;

namespace {

const double pi = std::numbers::pi;

VectorXd vec(std::initializer_list<double> v) {
    VectorXd r(v.size());
    int i = 0;
    for (double c : v) r[i++] = c;
    return r;
}

SystemSpec oscillator(double a1, double a2, double E = 0.5) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g*x1^2 + %.17g*x2^2", 0.5 * a1 * a1, 0.5 * a2 * a2);
    return SystemSpec(MetricModel::euclidean(2), parse(buf, 2), E);
}

SystemSpec torus_cos() {
    auto space = Space::flat_torus({2 * pi, 2 * pi});
    return SystemSpec(MetricModel::euclidean(2, space), parse("0.1*cos(x1)", 2), 0.5);
}

SystemSpec finsler_well() {
    auto m = MetricModel::finsler(parse("v1^2 + v2^2 + 0.1*sqrt(v1^4 + v2^4)", 2));
    return SystemSpec(m, parse("0.5*x1^2 + x2^2 + 0.1*x1*x2", 2), 1.0);
}

SystemSpec riemann_well() {
    auto m = MetricModel::riemannian({{parse("1 + 0.2*x2^2", 2), parse("0.1*x1", 2)},
                                      {parse("0.1*x1", 2), parse("1.5 + 0.3*sin(x1)", 2)}});
    return SystemSpec(m, parse("0.5*x1^2 + 0.5*x2^2", 2), 1.0);
}

// L(x, v) = F^2/2 - U over the stacked vector z = (x, v).
oracle::Fn lagrangian(const SystemSpec& sys) {
    return [&sys](const std::vector<double>& z) {
        std::span<const double> x(z.data(), 2), v(z.data() + 2, 2);
        return 0.5 * kernel::f2(sys.metric(), x, v) - sys.potential_value(x);
    };
}

// Euler-Lagrange residual d/dt dL/dv - dL/dx at time t, every derivative by
// finite differences on the dense output.
double el_residual(const SystemSpec& sys, const Trajectory& tr, double t) {
    auto L = lagrangian(sys);
    auto p = [&](double s) {
        State y = tr.at(s);
        return std::vector<double>{oracle::central_diff(L, y, 2, 1e-6), oracle::central_diff(L, y, 3, 1e-6)};
    };
    const double h = 1e-4;
    auto pp = p(t + h), pm = p(t - h);
    State y = tr.at(t);
    double r = 0.0;
    for (int i = 0; i < 2; ++i)
        r = std::max(r, std::abs((pp[i] - pm[i]) / (2 * h) - oracle::central_diff(L, y, i, 1e-6)));
    return r;
}

}  // namespace

TEST_CASE("dynamics: lagrange_rhs hand cases") {
    auto osc = oscillator(1, 2);
    VectorXd a = lagrange_rhs(osc, vec({1, 0}), vec({0, 0}));
    CHECK(std::abs(a[0] + 1) < 1e-15);
    CHECK(std::abs(a[1]) < 1e-15);
    VectorXd b = lagrange_rhs(osc, vec({0.3, -0.2}), vec({1, 1}));
    CHECK(std::abs(b[0] + 0.3) < 1e-15);
    CHECK(std::abs(b[1] - 0.8) < 1e-15);

    auto tor = SystemSpec(MetricModel::euclidean(2, Space::flat_torus({2 * pi, 2 * pi})), parse("-cos(x1)", 2), 0.0);
    CHECK(std::abs(lagrange_rhs(tor, vec({pi / 2, 0}), vec({0, 0}))[0] + 1.0) < 1e-15);

    // Zero potential: the geodesic equation.
    auto m = riemann_well().metric();
    SystemSpec free(m, parse("0", 2), 0.0);
    VectorXd x = vec({0.4, -0.3}), v = vec({0.7, 0.2});
    CHECK((lagrange_rhs(free, x, v) + 2 * geodesic_coefficients(m, x, v)).norm() < 1e-14);
}

TEST_CASE("dynamics: finsler rest point uses the homogeneous extension") {
    auto sys = finsler_well();
    VectorXd x = vec({0.5, 0.3}), zero = vec({0, 0});
    VectorXd a0 = lagrange_rhs(sys, x, zero);
    auto [u, dU] = sys.potential_jet<double>(std::span<const double>(x.data(), 2));
    VectorXd w = vec({-dU[0], -dU[1]});
    VectorXd ref = metric_tensor(sys.metric(), x, w).ldlt().solve(w);
    CHECK((a0 - ref).norm() < 1e-13);
    // Continuity along v = lambda w as lambda -> 0.
    VectorXd a1 = lagrange_rhs(sys, x, 1e-7 * w);
    CHECK((a0 - a1).norm() < 1e-6);
    // No force at a critical point.
    CHECK(lagrange_rhs(sys, zero, zero).norm() == 0.0);
}

TEST_CASE("dynamics: hamilton_rhs and total energy") {
    auto osc = oscillator(1, 2);
    auto [xd, yd] = hamilton_rhs(osc, vec({0.3, 0.5}), vec({0.1, -0.2}));
    CHECK((xd - vec({0.1, -0.2})).norm() < 1e-15);
    CHECK((yd - vec({-0.3, -2.0})).norm() < 1e-15);
    CHECK(total_energy(osc, vec({1, 0}), vec({0, 0})) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(total_energy(osc, vec({0.2, 0.1}), vec({0, 0})) == doctest::Approx(0.04).epsilon(1e-14));
    // Finsler: ydot = -dH/dx by finite differences of H(x, y) = L(x, v(y)) dual.
    auto sys = finsler_well();
    VectorXd x = vec({0.2, -0.4}), y = vec({0.6, 0.3});
    auto [xd2, yd2] = hamilton_rhs(sys, x, y);
    auto H = [&](const std::vector<double>& z) {
        VectorXd xx = vec({z[0], z[1]}), yy = vec({z[2], z[3]});
        VectorXd v = legendre_inverse(sys.metric(), xx, yy);
        return yy.dot(v) - 0.5 * f2(sys.metric(), xx, v) + sys.potential_value<double>(std::span<const double>(z.data(), 2));
    };
    std::vector<double> z{x[0], x[1], y[0], y[1]};
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(yd2[i] + oracle::central_diff(H, z, i, 1e-6)) < 1e-7);
        CHECK(std::abs(xd2[i] - oracle::central_diff(H, z, 2 + i, 1e-6)) < 1e-7);
    }
}

TEST_CASE("dynamics: integrate reproduces closed forms") {
    auto osc = oscillator(1, std::sqrt(2.0));
    auto tr = integrate(osc, vec({1, 0}), vec({0, 0}), 0, 10);
    double worst = 0;
    for (double t = 0; t <= 10; t += 0.01) worst = std::max(worst, std::abs(tr.at(t)[0] - std::cos(t)));
    CHECK(worst < 1e-8);
    for (std::size_t k = 0; k < tr.size(); ++k) CHECK(std::abs(tr.x(k)[1]) < 1e-15);

    SystemSpec free(MetricModel::euclidean(3), parse("0", 3), 0.0);
    VectorXd x0 = vec({1, 2, 3}), v0 = vec({0.5, -1, 0.25});
    auto line = integrate(free, x0, v0, 0, 7);
    for (double t : {0.0, 1.3, 7.0}) {
        State y = line.at(t);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(y[i] - (x0[i] + t * v0[i])) < 1e-13);
    }
}

TEST_CASE("dynamics: kinetic-minimum event finds the rest point") {
    auto osc = oscillator(1, std::sqrt(2.0));
    auto tr = integrate(osc, vec({1, 0}), vec({0, 0}), 0, 5, {}, {kinetic_minimum_event(osc)});
    REQUIRE(tr.events.size() == 1);
    CHECK(std::abs(tr.events[0].t - pi) < 1e-9);
    auto stop = integrate(osc, vec({0, 0}), vec({1, 0}), 0, 10, {}, {kinetic_minimum_event(osc, true)});
    CHECK(stop.terminated);
    CHECK(std::abs(stop.t_end() - pi / 2) < 1e-9);
}

TEST_CASE("dynamics: hamiltonian and lagrangian flows agree") {
    auto osc = oscillator(1, 2);
    VectorXd x0 = vec({0.3, -0.2}), v0 = vec({0.5, 0.4});
    auto tr = integrate(osc, x0, v0, 0, 5);
    auto ham = integrate_hamilton(osc, x0, v0, 0, 5);
    double worst = 0;
    for (double t = 0; t <= 5; t += 0.05) {
        State a = tr.at(t), b = ham.at(t);
        for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    CHECK(worst < 1e-8);

    for (auto sys : {finsler_well(), riemann_well()}) {
        VectorXd x = vec({0.2, 0.1}), v = vec({0.4, -0.6});
        auto lag = integrate(sys, x, v, 0, 3);
        auto hm = integrate_hamilton(sys, x, legendre(sys.metric(), x, v), 0, 3);
        double w = 0;
        for (double t = 0; t <= 3; t += 0.1) {
            State a = lag.at(t), b = hm.at(t);
            VectorXd xb = vec({b[0], b[1]});
            VectorXd vb = legendre_inverse(sys.metric(), xb, vec({b[2], b[3]}));
            w = std::max({w, std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - vb[0]),
                          std::abs(a[3] - vb[1])});
        }
        CHECK(w < 1e-8);
    }
}

TEST_CASE("dynamics: Euler-Lagrange residual by finite differences") {
    for (auto sys : {finsler_well(), riemann_well(), torus_cos()}) {
        auto tr = integrate(sys, vec({0.3, -0.1}), vec({0.2, 0.5}), 0, 4);
        for (double t : {0.5, 1.7, 3.2}) CHECK(el_residual(sys, tr, t) < 1e-6);
    }
}

TEST_CASE("dynamics: energy conservation over t in [0, 100] (property)") {
    Tolerances tol;
    tol.rtol = 1e-10;
    std::vector<SystemSpec> systems{oscillator(1, std::sqrt(2.0)), torus_cos(), finsler_well(), riemann_well()};
    for (const auto& sys : systems) {
        auto tr = integrate(sys, vec({0.4, 0.2}), vec({0.3, -0.5}), 0, 100, tol);
        double h0 = tr.scalar().front();
        CHECK(tr.drift() <= 1e-9 * (1 + std::abs(h0)));
    }
}

TEST_CASE("dynamics: time reversibility (property)") {
    std::vector<SystemSpec> systems{oscillator(1, std::sqrt(2.0)), torus_cos(), finsler_well(), riemann_well()};
    for (const auto& sys : systems) {
        VectorXd x0 = vec({0.4, 0.2}), v0 = vec({0.3, -0.5});
        auto fwd = integrate(sys, x0, v0, 0, 6);
        State yT = fwd.states().back();
        auto back = integrate(sys, vec({yT[0], yT[1]}), vec({-yT[2], -yT[3]}), 0, 6);
        State y = back.states().back();
        CHECK(std::abs(y[0] - x0[0]) < 1e-7);
        CHECK(std::abs(y[1] - x0[1]) < 1e-7);
        CHECK(std::abs(y[2] + v0[0]) < 1e-7);
        CHECK(std::abs(y[3] + v0[1]) < 1e-7);
    }
}

TEST_CASE("dynamics: backward integration returns increasing samples") {
    auto osc = oscillator(1, 2);
    auto tr = integrate(osc, vec({1, 0}), vec({0, 0}), 0, -3);
    CHECK(tr.t_begin() == doctest::Approx(-3));
    CHECK(tr.t_end() == 0.0);
    CHECK(std::abs(tr.at(-2.0)[0] - std::cos(2.0)) < 1e-8);
}

TEST_CASE("dynamics: trajectory CSV") {
    auto tor = torus_cos();
    auto tr = integrate(tor, vec({6.0, 0}), vec({1, 0}), 0, 1);
    std::ostringstream os;
    write_csv(tr, os);
    std::string s = os.str();
    CHECK(s.rfind("t,x1,x2,v1,v2,H\n", 0) == 0);
    std::istringstream is(s);
    std::string line;
    std::getline(is, line);
    int rows = 0;
    while (std::getline(is, line)) {
        double t, x1;
        std::sscanf(line.c_str(), "%lf,%lf", &t, &x1);
        CHECK(x1 >= 0.0);
        CHECK(x1 < 2 * pi);
        ++rows;
    }
    CHECK(rows == static_cast<int>(tr.size()));
    auto rs = resample(tr, 11);
    CHECK(rs.size() == 11);
    CHECK(rs.times()[10] == tr.t_end());
}

TEST_CASE("dynamics: invalid systems") {
    CHECK_THROWS_AS(SystemSpec(MetricModel::euclidean(2), parse("x1 + v2", 2), 1.0), ModelError);
    CHECK_THROWS_AS(SystemSpec(MetricModel::euclidean(2, Space::flat_torus({1.0, 1.0})), parse("x1^2", 2), 1.0),
                    ModelError);
    CHECK_THROWS_AS(SystemSpec(MetricModel::euclidean(2), parse("x1", 2), std::nan("")), PreconditionError);
    auto osc = oscillator(1, 2);
    CHECK_THROWS_AS(lagrange_rhs(osc, vec({1, 0, 0}), vec({0, 0, 0})), PreconditionError);
}
