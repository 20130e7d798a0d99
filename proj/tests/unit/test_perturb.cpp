#include <cmath>
#include <numbers>

#include "doctest.h"
#include "jmlab/perturb.hpp"

using namespace jmlab;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
    VectorXd r(v.size());
    int i = 0;
    for (double c : v) r[i++] = c;
    return r;
}

std::span<const double> sp(const VectorXd& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

}  // namespace

TEST_CASE("perturb: s = 0 leaves the system unchanged") {
    auto rc = planar_crossing_case(0.0);
    auto ch = check_perturbation(rc.sys, rc.pert);
    CHECK(ch.max_abs_phi == 0.0);
    CHECK(ch.support_violations == 0);
    auto psys = perturbed_system(rc.sys, {rc.pert});
    for (double x1 : {-1.3, 0.0, 1.25}) {
        VectorXd x = vec({x1, 0.01, -0.02});
        CHECK(psys.potential_value<double>(sp(x)) == rc.sys.potential_value<double>(sp(x)));
    }
    auto rep = verify_removal(rc.sys, rc.pert, rc.other);
    CHECK(rep.after.distance < 1e-12);
    CHECK_FALSE(rep.removed);
}

TEST_CASE("perturb: invariants on the bundled cases") {
    for (const auto& rc : {planar_crossing_case(0.05), lissajous_case(0.02)}) {
        auto ch = check_perturbation(rc.sys, rc.pert, 1000, 7);
        CHECK(ch.on_curve_max < 1e-10);
        CHECK(ch.support_samples >= 500);
        CHECK(ch.support_violations == 0);
        CHECK(ch.geodesic_residual < 1e-6);
        CHECK(ch.identity_residual < 1e-12);
        CHECK(ch.max_abs_phi > 0.0);
    }
}

TEST_CASE("perturb: phi shrinks with s") {
    double prev = 0.0;
    for (double s : {0.01, 0.02, 0.05}) {
        auto rc = planar_crossing_case(s);
        double m = check_perturbation(rc.sys, rc.pert, 400).max_abs_phi;
        CHECK(m > prev);
        prev = m;
    }
    prev = 0.0;
    for (double s : {0.005, 0.01, 0.02}) {
        auto rc = lissajous_case(s);
        double m = check_perturbation(rc.sys, rc.pert, 400).max_abs_phi;
        CHECK(m > prev);
        prev = m;
    }
}

TEST_CASE("perturb: displaced length grows like s^2 in the flat case") {
    // Flat blend: extra length = s^2 / (2 eps) * int_0^1 S'(u)^2 du per window
    // pair to leading order, with S the quintic smoothstep (integral 10/7).
    const double eps = 0.1;
    for (double s : {0.01, 0.02}) {
        auto rc = planar_crossing_case(s, 1.0, eps);
        auto ch = check_perturbation(rc.sys, rc.pert, 10);
        CHECK(ch.length_center == doctest::Approx(4.0).epsilon(1e-12));
        double predicted = s * s * (10.0 / 7.0) / (2.0 * eps);
        CHECK(std::abs(ch.length_displaced - ch.length_center - predicted) < 50.0 * std::pow(s, 4) / eps / eps / eps);
    }
}

TEST_CASE("perturb: potential update identities") {
    auto rc = lissajous_case(0.02);
    const double E = rc.sys.energy();
    auto psys = perturbed_system(rc.sys, {rc.pert});
    // A point inside the support, where phi != 0.
    auto c = rc.pert.curve.eval(0.4 + 3 * 0.05, 0)[0];
    VectorXd x = Eigen::Map<VectorXd>(c.data(), 3);
    x[2] += 0.01;
    double ph = rc.pert.phi_at(x);
    REQUIRE(ph != 0.0);
    double U = rc.sys.potential_value<double>(sp(x));
    CHECK(psys.potential_value<double>(sp(x)) == doctest::Approx((1 - std::exp(ph)) * E + std::exp(ph) * U));
    // Shifting U so that U(x) = E: the update keeps U~(x) = E whatever phi is.
    char buf[64];
    std::snprintf(buf, sizeof buf, " + %.17g", E - U);
    Expr shifted = parse(print(rc.sys.base_potential()) + buf, 3);
    SystemSpec level(rc.sys.metric(), PerturbedPotential{shifted, E, {rc.pert.phi}}, E);
    CHECK(std::abs(level.potential_value<double>(sp(x)) - E) < 1e-15);
}

TEST_CASE("perturb: removal of the planar crossing") {
    const double s = 0.05;
    auto rc = planar_crossing_case(s, 1.0, 0.1);
    auto rep = verify_removal(rc.sys, rc.pert, rc.other);
    CHECK(rep.before.distance < 1e-12);
    // The displaced strand runs at height s above the other one near the crossing.
    CHECK(std::abs(rep.after.distance - s) < 1e-9);
    CHECK(rep.after.distance >= 0.025);
    CHECK(rep.removed);
    CHECK(rep.other_strand_clear);
    CHECK(rep.closure < 1e-8);
    CHECK(rep.path_deviation < 1e-8);
}

TEST_CASE("perturb: removal of the Lissajous double point") {
    for (double s : {0.01, 0.02}) {
        auto rc = lissajous_case(s);
        auto rep = verify_removal(rc.sys, rc.pert, rc.other);
        CHECK(rep.before.distance < 1e-9);
        CHECK(rep.after.distance >= s / 2);
        CHECK(rep.removed);
        CHECK(rep.other_strand_clear);
        CHECK(rep.closure < 1e-8);
        CHECK(rep.path_deviation < 1e-8);
    }
}

TEST_CASE("perturb: closest approach and phi grid") {
    Strand a{[](double t) { return vec({t, 0, 0}); }, -1, 1};
    Strand b{[](double t) { return vec({0.3, t, 1}); }, -1, 1};
    auto ca = closest_approach(a, b, 50);
    CHECK(ca.distance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ca.s == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(ca.t == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

    auto rc = planar_crossing_case(0.05);
    auto g = phi_grid(rc.pert, vec({0, 0, 0}), vec({1, 0, 0}), vec({0, 0, 1}), 2.0, 0.2, 81, 21);
    REQUIRE(g.values.size() == 81);
    REQUIRE(g.values[0].size() == 21);
    double inside = 0.0;
    for (std::size_t i = 0; i < g.a.size(); ++i)
        for (std::size_t j = 0; j < g.b.size(); ++j) {
            double a1 = std::abs(g.a[i]);
            if (a1 < 1.19 || a1 > 1.41) CHECK(g.values[i][j] == 0.0);
            else inside = std::max(inside, std::abs(g.values[i][j]));
        }
    CHECK(inside > 0.0);
}

TEST_CASE("perturb: preconditions") {
    SystemSpec sys(MetricModel::euclidean(3), parse("0", 3), 0.5);
    auto jm = sys.jacobi();
    CHECK_THROWS_AS(build_perturbation(jm, vec({0, 0, 0}), vec({1, 0, 0}), 1.0, 0.1, 0.06), PerturbationError);
    CHECK_THROWS_AS(build_perturbation(jm, vec({0, 0, 0}), vec({1, 0, 0}), 0.6, 0.1, 0.01), PerturbationError);
    auto rc = planar_crossing_case(0.02);
    SystemSpec other(MetricModel::euclidean(3), parse("0", 3), 0.7);
    CHECK_THROWS_AS(perturbed_system(other, {rc.pert}), PreconditionError);
    SystemSpec fin(MetricModel::finsler(parse("v1^2 + v2^2 + v3^2 + 0.1*sqrt(v1^4 + v2^4 + v3^4)", 3)), parse("0", 3),
                   0.5);
    CHECK_THROWS_AS(perturbed_system(fin, {rc.pert}), PreconditionError);
}
