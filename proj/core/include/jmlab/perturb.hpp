#pragma once

// Removal of an intersection by a conformal change of the Jacobi metric,
// realized as a change of potential: U~ = (1 - exp(phi)) E + exp(phi) U.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "jmlab/conformal.hpp"
#include "jmlab/dynamics.hpp"
#include "jmlab/orbits.hpp"

namespace jmlab {

struct ConformalPerturbation {
    std::shared_ptr<const TubeFrame> tube;
    QuinticSpline curve;  // gamma_s on [-2 eta, 2 eta]
    std::shared_ptr<const ConformalFactor> phi;
    double s = 0.0;

    double eta() const { return tube->eta(); }
    double eps() const { return tube->eps(); }
    double phi_at(const Eigen::VectorXd& x) const;
};

/// Tube around the Jacobi geodesic through p with unit direction w, the
/// curve displaced by s along `displacement`, and phi with support radius
/// rho (default eps).
ConformalPerturbation build_perturbation(const JacobiMetric& jm, const Eigen::VectorXd& p, const Eigen::VectorXd& w,
                                         double eta, double eps, double s, std::optional<double> rho = std::nullopt,
                                         std::optional<Eigen::VectorXd> displacement = std::nullopt);

/// The same system with U replaced by U~; riemannian kinetic models only.
SystemSpec perturbed_system(const SystemSpec& sys, const std::vector<ConformalPerturbation>& perturbations);

struct PerturbationChecks {
    double on_curve_max = 0.0;       // max |phi(gamma_s(t))|
    int support_samples = 0;
    int support_violations = 0;      // phi or U~ - U nonzero outside the declared support
    double geodesic_residual = 0.0;  // sup of the normal geodesic defect under exp(phi) Fbar^2
    double identity_residual = 0.0;  // sup |exp(phi) 2(E-U)F^2 - 2(E-U~)F^2| / max(1, |lhs|)
    double max_abs_phi = 0.0;
    double length_center = 0.0;      // Fbar lengths over [-2 eta, 2 eta]
    double length_displaced = 0.0;
};

PerturbationChecks check_perturbation(const SystemSpec& sys, const ConformalPerturbation& pert, int samples = 1000,
                                      std::uint64_t seed = 1);

/// A parametrized curve piece, e.g. the strand of an orbit through an intersection.
struct Strand {
    std::function<Eigen::VectorXd(double)> x;
    double t0 = 0.0, t1 = 0.0;
};

struct ClosestApproach {
    double distance = 0.0;
    double s = 0.0, t = 0.0;
};

/// Minimal distance between two strands: dense sampling, then Newton on the pair.
ClosestApproach closest_approach(const Strand& a, const Strand& b, int samples = 1000);

struct RemovalReport {
    double s = 0.0;
    ClosestApproach before;  // center curve vs other strand
    ClosestApproach after;   // displaced curve vs other strand
    double required_gap = 0.0;
    bool removed = false;
    bool other_strand_clear = false;  // phi = 0 along the other strand
    double flight_time = 0.0;         // orbit time along gamma_s
    double closure = 0.0;             // |orbit(T) - gamma_s(2 eta)| of the re-integrated perturbed orbit
    double path_deviation = 0.0;      // max distance of that orbit from gamma_s
};

RemovalReport verify_removal(const SystemSpec& sys, const ConformalPerturbation& pert, const Strand& other,
                             const Tolerances& tol = {1e-12, 1e-14});

/// A system, a perturbation, and the strand it must clear.
struct RemovalCase {
    SystemSpec sys;
    ConformalPerturbation pert;
    Strand other;
};

/// Two straight geodesics crossing at the origin of the plane x3 = 0 in R^3
/// (U = 0, E = 1/2); the one along x1 is displaced along x3.
RemovalCase planar_crossing_case(double s, double eta = 1.0, double eps = 0.1);

/// The figure-eight Lissajous orbit of alpha = (1, 2, alpha3), amplitudes
/// (1, 1/2, 0), phase pi/4, embedded in R^3; the strand through the double
/// point at t = 3 pi / 4 is displaced along x3.
RemovalCase lissajous_case(double s, double eta = 0.4, double eps = 0.05, double alpha3 = 1.7320508075688772);

/// phi sampled on the plane p + a e1 + b e2, |a| <= extent1, |b| <= extent2.
struct PhiGrid {
    Eigen::VectorXd origin, e1, e2;
    std::vector<double> a, b;
    std::vector<std::vector<double>> values;  // values[i][j] at (a[i], b[j])
};

PhiGrid phi_grid(const ConformalPerturbation& pert, const Eigen::VectorXd& origin, const Eigen::VectorXd& e1,
                 const Eigen::VectorXd& e2, double extent1, double extent2, int n1, int n2);

}  // namespace jmlab
