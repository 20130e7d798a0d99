#pragma once

// Periodic orbits at fixed energy: brake orbits and rotations by shooting,
// monodromy by differentiating the integrator, degeneracy classification.

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <vector>

#include "jmlab/dynamics.hpp"
#include "jmlab/reference.hpp"

namespace jmlab {

enum class OrbitKind { Rotation, Brake };

struct RestPoint {
    double t = 0.0;
    Eigen::VectorXd x;
};

struct PeriodicOrbit {
    OrbitKind kind = OrbitKind::Brake;
    double period = 0.0;
    double energy = 0.0;
    Trajectory trajectory;  // over [0, period]
    std::vector<RestPoint> rest_points;
    double closure_residual = 0.0;
    double symmetry_residual = 0.0;  // brake: sup |x(T/2 + t) - x(T/2 - t)|
    double min_kinetic = 0.0;        // min F^2/2 over samples
    bool minimal = true;             // no closure at T/m, m = 2..divisors
    int iterations = 0;

    Eigen::VectorXd x0() const { return trajectory.x(0); }
    Eigen::VectorXd v0() const { return trajectory.v(0); }
};

struct ShootingOptions {
    Tolerances tol{1e-12, 1e-14};
    double t_max = 100.0;
    int max_iterations = 40;
    double newton_tol = 1e-11;
    double closure_tol = 1e-8;  // relative to 1 + |state(0)|
    int minimal_divisors = 6;
    std::optional<double> period_guess;  // rotations only
};

/// Brake orbit from a guess of a rest point near {U = E}.
PeriodicOrbit find_brake(const SystemSpec& sys, const Eigen::VectorXd& seed, const ShootingOptions& opt = {});

/// Rotation through the hyperplane {<a, x - x0> = 0}; a defaults to v0.
PeriodicOrbit find_rotation(const SystemSpec& sys, const PhaseState& seed,
                            std::optional<Eigen::VectorXd> section_normal = std::nullopt,
                            const ShootingOptions& opt = {});

/// Wraps known periodic initial data (e.g. a closed form) into a checked
/// PeriodicOrbit; throws ShootingError when it does not close.
PeriodicOrbit make_periodic_orbit(const SystemSpec& sys, const PhaseState& start, double period, OrbitKind kind,
                                  const ShootingOptions& opt = {});

struct MonodromyReport {
    Eigen::MatrixXd matrix;
    std::vector<std::complex<double>> eigenvalues;
    int trivial_multiplicity = 0;
    bool nondegenerate = false;
    double det_error = 0.0;  // |det M - 1|
    double tol_eig = 1e-6;
};

MonodromyReport analyze_monodromy(Eigen::MatrixXd M, double tol_eig = 1e-6);

/// Derivative of the time-`iterates * period` flow map at the orbit's
/// initial state, by dual numbers through the integrator's accepted steps.
MonodromyReport monodromy(const SystemSpec& sys, const PeriodicOrbit& orbit, int iterates = 1, double tol_eig = 1e-6,
                          const Tolerances& tol = {1e-12, 1e-14});

struct FamilyMember {
    double s = 0.0;
    double residual = 0.0;  // sup |x'' - lagrange_rhs| over samples
    double energy = 0.0;
    double closure = 0.0;   // |state(2 pi / base) - state(0)|
};

struct FamilyReport {
    std::vector<FamilyMember> members;
    double period = 0.0;
    double energy_spread = 0.0;
    double max_residual = 0.0;
};

/// Lissajous members x_{*,s} of a resonant oscillator checked against the
/// equations of motion.
FamilyReport verify_degenerate_family(const OscillatorSpec& osc, double a1, double a2, const std::vector<double>& s,
                                      int samples = 200);

}  // namespace jmlab
