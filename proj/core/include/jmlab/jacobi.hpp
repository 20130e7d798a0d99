#pragma once

// Jacobi-Maupertuis correspondence: energy-E orbits of L = F^2/2 - U and
// unit-speed geodesics of Fbar^2 = 2(E - U) F^2, related by ds/dt = 2(E - U).

#include <Eigen/Dense>

#include "jmlab/dynamics.hpp"
#include "jmlab/jacobi_metric.hpp"
#include "jmlab/trajectory.hpp"

namespace jmlab {

enum class JacobiRoute {
    Conformal,  // conformal-change formula for Gbar
    Direct,     // generic finsler kernel on the expression psi F^2
};

/// dx/ds from dx/dt: v / psi(x).
Eigen::VectorXd orbit_to_geodesic_velocity(const JacobiMetric& jm, const Eigen::VectorXd& x, const Eigen::VectorXd& v);
/// dx/dt from dx/ds: w psi(x).
Eigen::VectorXd geodesic_to_orbit_velocity(const JacobiMetric& jm, const Eigen::VectorXd& x, const Eigen::VectorXd& w);

/// Geodesic of Fbar from (x0, w0) over s in [s0, s1]; the scalar column is Fbar^2.
Trajectory integrate_jacobi_geodesic(const JacobiMetric& jm, const Eigen::VectorXd& x0, const Eigen::VectorXd& w0,
                                     double s0, double s1, const Tolerances& tol = {},
                                     JacobiRoute route = JacobiRoute::Conformal);

/// Reparametrizes an energy-E orbit by Fbar arc length, s(t0) = s_start.
/// The output keeps samples only; its scalar column is Fbar^2 (= 1).
/// Errors: energy mismatch > 1e-6 (PreconditionError), boundary contact
/// (DegeneracyError).
Trajectory orbit_to_geodesic(const Trajectory& orbit, const JacobiMetric& jm, double s_start = 0.0,
                             const Tolerances& tol = {});

/// Inverse map t(s) = t_start + (1/2) int ds / (E - U). The input must be
/// Fbar-unit-speed within 1e-6. The scalar column is the total energy.
Trajectory geodesic_to_orbit(const Trajectory& geodesic, const JacobiMetric& jm, double t_start = 0.0,
                             const Tolerances& tol = {});

struct CorrespondenceResult {
    double max_deviation = 0.0;   // sup |x_orbit(t) - x_geodesic(t(s))| over the window
    double max_speed_error = 0.0; // sup |Fbar^2 - 1| along the geodesic
    double t_covered = 0.0;
};

/// Integrates the Lagrangian flow over [0, T] and the Fbar geodesic from the
/// matched initial data, maps the geodesic to time and compares.
CorrespondenceResult correspondence_check(const SystemSpec& sys, const Eigen::VectorXd& x0,
                                          const Eigen::VectorXd& v0, double T, const Tolerances& tol = {},
                                          JacobiRoute route = JacobiRoute::Conformal, int samples = 200);

}  // namespace jmlab
