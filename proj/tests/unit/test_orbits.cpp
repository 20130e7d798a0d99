#include <cmath>
#include <numbers>

#include "doctest.h"
#include "jmlab/orbits.hpp"

using namespace jmlab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const double pi = std::numbers::pi;

VectorXd vec(std::initializer_list<double> v) {
    VectorXd r(v.size());
    int i = 0;
    for (double c : v) r[i++] = c;
    return r;
}

// Expected oscillator monodromy over time T, coordinate by coordinate from
// the solutions cos(a t), sin(a t) / a of v'' + a^2 v = 0.
MatrixXd oscillator_monodromy(const std::vector<double>& alpha, double T) {
    const int n = static_cast<int>(alpha.size());
    MatrixXd M = MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        double a = alpha[i], c = std::cos(a * T), s = std::sin(a * T);
        M(i, i) = c;
        M(i, n + i) = s / a;
        M(n + i, i) = -a * s;
        M(n + i, n + i) = c;
    }
    return M;
}

SystemSpec anharmonic() {
    return SystemSpec(MetricModel::euclidean(2), parse("0.5*x1^2 + x2^2 + 0.1*x1^4 + 0.2*x1*x2", 2), 0.6);
}

SystemSpec curved() {
    auto m = MetricModel::riemannian({{parse("1 + 0.2*x2^2", 2), parse("0", 2)}, {parse("0", 2), parse("1.5", 2)}});
    return SystemSpec(m, parse("0.5*x1^2 + x2^2", 2), 0.5);
}

}  // namespace

TEST_CASE("orbits: oscillator brake orbits from axis seeds") {
    OscillatorSpec osc({1.0, std::sqrt(2.0)}, 0.5);
    auto sys = oscillator_system(osc);
    for (int j = 0; j < 2; ++j) {
        VectorXd seed = VectorXd::Zero(2);
        seed[j] = 1.03 * brake_amplitude(osc, j);
        seed[1 - j] = 0.02;
        auto orb = find_brake(sys, seed);
        CHECK(orb.kind == OrbitKind::Brake);
        CHECK(std::abs(orb.period - 2 * pi / osc.alpha[j]) < 1e-8);
        CHECK(std::abs(orb.rest_points[0].x.norm() - brake_amplitude(osc, j)) < 1e-8);
        REQUIRE(orb.rest_points.size() == 2);
        CHECK(std::abs(orb.rest_points[1].t - orb.period / 2) < 1e-15);
        CHECK((orb.rest_points[0].x + orb.rest_points[1].x).norm() < 1e-8);
        CHECK(orb.closure_residual < 1e-8);
        CHECK(orb.symmetry_residual < 1e-7);
        CHECK(orb.minimal);
        // Closed form up to phase: the orbit starts at the rest point x_j = A.
        double sign = orb.rest_points[0].x[j] > 0 ? 1.0 : -1.0;
        for (double t : {0.3, 1.1, 2.0}) {
            auto ref = brake_orbit_closed_form(osc, j, t + pi / (2 * osc.alpha[j]));
            State y = orb.trajectory.at(t);
            CHECK(std::abs(y[j] - sign * ref.x[j]) < 1e-8);
            CHECK(std::abs(y[2 + j] - sign * ref.v[j]) < 1e-8);
        }
    }
}

TEST_CASE("orbits: brake seed preconditions") {
    OscillatorSpec osc({1.0, std::sqrt(2.0)}, 0.5);
    auto sys = oscillator_system(osc);
    CHECK_THROWS_AS(find_brake(sys, vec({0.1, 0.0})), PreconditionError);
    SystemSpec flat(MetricModel::euclidean(2), parse("x1^4 + x2^4", 2), 1e-14);
    CHECK_THROWS_AS(find_brake(flat, vec({0.0, 0.0})), PreconditionError);
    CHECK_THROWS_AS(find_brake(sys, vec({1.0})), PreconditionError);
}

TEST_CASE("orbits: nonlinear brake orbits satisfy the invariants") {
    for (auto sys : {anharmonic(), curved()}) {
        auto orb = find_brake(sys, vec({1.0, 0.05}));
        CHECK(orb.closure_residual < 1e-8 * (1 + orb.x0().norm()));
        CHECK(orb.symmetry_residual < 1e-7);
        CHECK(std::abs(orb.energy - sys.energy()) < 1e-12);
        CHECK(orb.v0().norm() == 0.0);
        State mid = orb.trajectory.at(orb.period / 2);
        CHECK(std::abs(mid[2]) + std::abs(mid[3]) < 1e-9);
        auto rep = monodromy(sys, orb);
        CHECK(rep.det_error < 1e-6);
        CHECK(rep.trivial_multiplicity >= 2);
        for (int m : {2, 3}) {
            auto it = monodromy(sys, orb, m);
            MatrixXd power = rep.matrix;
            for (int k = 1; k < m; ++k) power = power * rep.matrix;
            CHECK((it.matrix - power).lpNorm<Eigen::Infinity>() < 1e-5);
        }
    }
}

TEST_CASE("orbits: finsler brake orbit and its monodromy restriction") {
    SystemSpec fin(MetricModel::finsler(parse("v1^2 + v2^2 + 0.1*sqrt(v1^4 + v2^4)", 2)),
                   parse("0.5*x1^2 + x2^2", 2), 0.5);
    auto orb = find_brake(fin, vec({1.0, 0.05}));
    CHECK(orb.closure_residual < 1e-8 * (1 + orb.x0().norm()));
    CHECK(orb.symmetry_residual < 1e-7);
    CHECK_THROWS_AS(monodromy(fin, orb), PreconditionError);
}

TEST_CASE("orbits: oscillator monodromy matches the closed-form Jacobi fields") {
    OscillatorSpec osc({1.0, std::sqrt(2.0)}, 0.5);
    auto sys = oscillator_system(osc);
    for (int j = 0; j < 2; ++j) {
        VectorXd seed = VectorXd::Zero(2);
        seed[j] = brake_amplitude(osc, j);
        auto orb = find_brake(sys, seed);
        auto rep = monodromy(sys, orb);
        MatrixXd ref = oscillator_monodromy(osc.alpha, orb.period);
        CHECK((rep.matrix - ref).lpNorm<Eigen::Infinity>() < 1e-6);
        CHECK(rep.trivial_multiplicity == 2);
        CHECK(rep.nondegenerate);
        double angle = 2 * pi * osc.alpha[1 - j] / osc.alpha[j];
        std::complex<double> rot(std::cos(angle), std::sin(angle));
        int found = 0;
        for (auto l : rep.eigenvalues)
            if (std::abs(l - rot) < 1e-6 || std::abs(l - std::conj(rot)) < 1e-6) ++found;
        CHECK(found == 2);
        CHECK(rep.det_error < 1e-6);
    }
    // Transverse Jacobi field data does not return to itself.
    VectorXd v0 = vec({0, 1}), vd = vec({0, 0.3});
    CHECK((jacobi_field_closed_form(osc, v0, vd, 2 * pi) - v0).norm() > 0.1);
}

TEST_CASE("orbits: resonant Lissajous brake orbit is degenerate") {
    OscillatorSpec osc({1.0, 2.0}, 0.5, Resonance{1.0, {1, 2}});
    double a1 = 1.0, a2 = 0.5;
    auto base = oscillator_system(osc);
    SystemSpec sys(base.metric(), base.potential(), lissajous_energy(osc, a1, a2));
    auto orb = make_periodic_orbit(sys, lissajous_state(osc, a1, a2, 0.0, 0.0), lissajous_period(osc), OrbitKind::Brake);
    auto rep = monodromy(sys, orb);
    CHECK(rep.trivial_multiplicity >= 4);
    CHECK_FALSE(rep.nondegenerate);
    // Transverse field closes up after 2 pi: the degeneracy witness.
    VectorXd v0 = vec({0, 1}), vd = vec({0, 0.3});
    CHECK((jacobi_field_closed_form(osc, v0, vd, 2 * pi) - v0).norm() < 1e-12);
    // Shooting near the x1 axis lands on some member of the continuum of
    // brake orbits; every member is degenerate.
    SystemSpec half(base.metric(), base.potential(), 0.5);
    auto member = find_brake(half, vec({1.0, 0.05}));
    CHECK(std::abs(member.period - 2 * pi) < 1e-8);
    CHECK(monodromy(half, member).trivial_multiplicity >= 4);
}

TEST_CASE("orbits: degenerate Lissajous family") {
    OscillatorSpec osc({1.0, 2.0}, 0.5, Resonance{1.0, {1, 2}});
    auto rep = verify_degenerate_family(osc, 1.0, 0.5, {0.0, 0.3, 0.7});
    CHECK(rep.max_residual < 1e-10);
    CHECK(rep.energy_spread < 1e-12);
    CHECK(rep.period == doctest::Approx(2 * pi));
    for (const auto& m : rep.members) {
        CHECK(m.closure < 1e-12);
        CHECK(m.energy == doctest::Approx(0.5 * (1.0 + 4.0 * 0.25)).epsilon(1e-14));
    }
    auto s0 = lissajous_state(osc, 1.0, 0.5, 0.0, 0.4);
    CHECK(std::abs(s0.x[0] - std::cos(0.4)) < 1e-15);
    CHECK(std::abs(s0.x[1] - 0.5 * std::cos(0.8)) < 1e-15);
    CHECK_THROWS_AS(OscillatorSpec({1.0, 2.1}, 0.5, Resonance{1.0, {1, 2}}), PreconditionError);
}

TEST_CASE("orbits: flat torus rotation and its shear monodromy") {
    SystemSpec flat(MetricModel::euclidean(2, Space::flat_torus({2 * pi, 2 * pi})), parse("0", 2), 0.5);
    auto orb = find_rotation(flat, {vec({0, 0}), vec({1, 0})});
    CHECK(orb.kind == OrbitKind::Rotation);
    CHECK(std::abs(orb.period - 2 * pi) < 1e-10);
    CHECK(orb.closure_residual < 1e-8);
    CHECK(orb.minimal);
    auto rep = monodromy(flat, orb);
    MatrixXd ref = MatrixXd::Identity(4, 4);
    ref(0, 2) = ref(1, 3) = 2 * pi;
    CHECK((rep.matrix - ref).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(rep.trivial_multiplicity == 4);
    CHECK_FALSE(rep.nondegenerate);
    CHECK_THROWS_AS(find_rotation(flat, {vec({0, 0}), vec({1, 0})}, vec({0, 1})), PreconditionError);
    CHECK_THROWS_AS(find_rotation(flat, {vec({0, 0}), vec({2, 0})}), PreconditionError);
}

TEST_CASE("orbits: rotation on the torus with a cosine potential") {
    SystemSpec sys(MetricModel::euclidean(2, Space::flat_torus({2 * pi, 2 * pi})), parse("0.1*cos(x1)", 2), 1.0);
    VectorXd x0 = vec({0.5, 0.0});
    double U = 0.1 * std::cos(0.5);
    auto orb = find_rotation(sys, {x0, vec({0, std::sqrt(2 * (1.0 - U))})});
    CHECK(orb.closure_residual < 1e-8);
    CHECK(orb.min_kinetic > 0.5);
    CHECK(std::abs(orb.energy - 1.0) < 1e-10);
    auto rep = monodromy(sys, orb);
    CHECK(rep.det_error < 1e-6);
    CHECK(rep.trivial_multiplicity >= 2);
}

TEST_CASE("orbits: monodromy along an unstable equilibrium line") {
    // x1 = 0 is the top of the potential; the orbit is x2 moving freely, the
    // linearization in x1 is x'' = 0.1 x with cosh / sinh solutions.
    SystemSpec sys(MetricModel::euclidean(2), parse("0.1 - 0.05*x1^2", 2), 1.0);
    PeriodicOrbit orb;
    orb.period = 4.7;
    orb.trajectory = Trajectory(2, sys.space(), {0.0}, {State{0, 0, 0, std::sqrt(1.8)}});
    auto rep = monodromy(sys, orb);
    double k = std::sqrt(0.1), T = orb.period;
    CHECK(std::abs(rep.matrix(0, 0) - std::cosh(k * T)) < 1e-8);
    CHECK(std::abs(rep.matrix(0, 2) - std::sinh(k * T) / k) < 1e-8);
    CHECK(std::abs(rep.matrix(2, 0) - k * std::sinh(k * T)) < 1e-8);
    CHECK(std::abs(rep.matrix(1, 3) - T) < 1e-10);
    CHECK(rep.det_error < 1e-9);
}
