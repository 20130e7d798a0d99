#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "jmlab/jacobi.hpp"

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

SystemSpec oscillator(double E) { return SystemSpec(MetricModel::euclidean(2), parse("0.5*x1^2 + x2^2", 2), E); }

SystemSpec torus_cos() {
    return SystemSpec(MetricModel::euclidean(2, Space::flat_torus({2 * pi, 2 * pi})), parse("0.1*cos(x1)", 2), 0.5);
}

// Random interior point with |U| well below E, and velocity of energy E.
std::pair<VectorXd, VectorXd> random_state(const SystemSpec& sys, std::mt19937& rng, double radius) {
    std::uniform_real_distribution<double> u(-radius, radius), ang(0, 2 * pi);
    for (;;) {
        VectorXd x = vec({u(rng), u(rng)});
        double U = sys.potential_value<double>(std::span<const double>(x.data(), 2));
        double k = sys.energy() - U;
        if (k < 0.2 * sys.energy()) continue;
        double a = ang(rng);
        return {x, std::sqrt(2 * k) * vec({std::cos(a), std::sin(a)})};
    }
}

}  // namespace

TEST_CASE("jacobi: constant psi = 1 gives the identity reparametrization") {
    SystemSpec sys(MetricModel::euclidean(2), parse("1.5", 2), 2.0);
    auto orbit = integrate(sys, vec({0, 0}), vec({0.6, 0.8}), 0, 2);
    auto jm = sys.jacobi();
    auto geo = orbit_to_geodesic(orbit, jm);
    REQUIRE(geo.size() == orbit.size());
    for (std::size_t k = 0; k < geo.size(); ++k) {
        CHECK(std::abs(geo.times()[k] - orbit.times()[k]) < 1e-12);
        CHECK((geo.v(k) - orbit.v(k)).norm() < 1e-15);
    }
    auto back = geodesic_to_orbit(geo, jm);
    for (std::size_t k = 0; k < geo.size(); ++k) CHECK(std::abs(back.times()[k] - orbit.times()[k]) < 1e-12);
}

TEST_CASE("jacobi: orbit_to_geodesic is unit speed with ds/dt = psi") {
    auto sys = oscillator(1.0);
    auto orbit = integrate(sys, vec({0.3, 0.2}), vec({0.8, std::sqrt(2 * (1 - 0.045 - 0.04) - 0.64)}), 0, 3);
    auto jm = sys.jacobi();
    auto geo = orbit_to_geodesic(orbit, jm);
    for (double h : geo.scalar()) CHECK(std::abs(h - 1) < 1e-6);
    // s(t) against trapezoid quadrature of psi on a fine grid.
    double s = 0, dt = 1e-4, prev = jm.psi<double>(std::span<const double>(orbit.at(0).data(), 2));
    for (int k = 1; k <= 30000; ++k) {
        double cur = jm.psi<double>(std::span<const double>(orbit.at(k * dt).data(), 2));
        s += 0.5 * dt * (prev + cur);
        prev = cur;
    }
    CHECK(std::abs(geo.t_end() - s) < 1e-7);
}

TEST_CASE("jacobi: round trip orbit -> geodesic -> orbit") {
    auto sys = oscillator(1.0);
    auto jm = sys.jacobi();
    // Orbits may pass within psi ~ 1e-4 of the boundary, where t(s) amplifies
    // state errors by 1/psi; the tight tolerance keeps the round trip at 1e-7.
    Tolerances tol;
    tol.rtol = 1e-12;
    tol.atol = 1e-14;
    std::mt19937 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        auto [x0, v0] = random_state(sys, rng, 0.5);
        auto orbit = integrate(sys, x0, v0, 0.5, 2.5, tol);
        auto back = geodesic_to_orbit(orbit_to_geodesic(orbit, jm, 0.0, tol), jm, 0.5, tol);
        for (std::size_t k = 0; k < orbit.size(); ++k) {
            CHECK(std::abs(back.times()[k] - orbit.times()[k]) < 1e-7);
            CHECK((back.v(k) - orbit.v(k)).norm() < 1e-7);
            CHECK(std::abs(back.scalar()[k] - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("jacobi: boundary contact and energy mismatch") {
    auto sys = oscillator(0.5);
    auto jm = sys.jacobi();
    // Brake orbit starting from the rest point x1 = 1.
    auto brake = integrate(sys, vec({1, 0}), vec({0, 0}), 0, 1);
    CHECK_THROWS_AS(orbit_to_geodesic(brake, jm), DegeneracyError);
    auto low = integrate(sys, vec({0, 0}), vec({0.5, 0}), 0, 1);
    CHECK_THROWS_AS(orbit_to_geodesic(low, jm), PreconditionError);
    auto geo = integrate_jacobi_geodesic(jm, vec({0, 0}), vec({0.5, 0}), 0, 1);
    auto slow = integrate_jacobi_geodesic(jm, vec({0, 0}), vec({0.2, 0}), 0, 1);
    CHECK(std::abs(geo.scalar().front() - 0.25) < 1e-15);
    CHECK_THROWS_AS(geodesic_to_orbit(slow, jm), PreconditionError);
}

TEST_CASE("jacobi: both geodesic routes integrate the same curve") {
    auto base = MetricModel::finsler(parse("v1^2 + v2^2 + 0.1*sqrt(v1^4 + v2^4)", 2));
    JacobiMetric jm(base, parse("0.5*x1^2 + x2^2", 2), 1.0);
    VectorXd x0 = vec({0.1, 0.2}), w0 = vec({0.3, 0.4});
    w0 /= std::sqrt(jacobi_F2(jm, x0, w0));
    auto a = integrate_jacobi_geodesic(jm, x0, w0, 0, 1.5, {}, JacobiRoute::Conformal);
    auto b = integrate_jacobi_geodesic(jm, x0, w0, 0, 1.5, {}, JacobiRoute::Direct);
    for (double s : {0.3, 0.9, 1.5}) {
        State ya = a.at(s), yb = b.at(s);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(ya[i] - yb[i]) < 1e-9);
    }
    for (double h : a.scalar()) CHECK(std::abs(h - 1) < 1e-8);
}

TEST_CASE("jacobi: mapped geodesic flow equals the Lagrangian flow (property)") {
    std::mt19937 rng(11);
    for (const auto& sys : {oscillator(1.0), torus_cos()}) {
        for (int trial = 0; trial < 8; ++trial) {
            auto [x0, v0] = random_state(sys, rng, sys.space().torus() ? 3.0 : 0.6);
            for (auto route : {JacobiRoute::Conformal, JacobiRoute::Direct}) {
                auto r = correspondence_check(sys, x0, v0, 1.0, {}, route);
                CHECK(r.t_covered == 1.0);
                CHECK(r.max_deviation < 1e-6);
                CHECK(r.max_speed_error < 1e-6);
            }
        }
    }
    // Finsler kinetic energy.
    SystemSpec fin(MetricModel::finsler(parse("v1^2 + v2^2 + 0.1*sqrt(v1^4 + v2^4)", 2)), parse("0.5*x1^2 + x2^2", 2),
                   1.0);
    auto r = correspondence_check(fin, vec({0.2, -0.1}), vec({0.5, 0.7}), 1.0);
    CHECK(r.max_deviation < 1e-6);
}
