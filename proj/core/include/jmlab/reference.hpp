#pragma once

// Closed forms for the harmonic oscillator H = sum (y_i^2 + alpha_i^2 x_i^2) / 2.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "jmlab/system.hpp"
#include "jmlab/trajectory.hpp"

namespace jmlab {

/// alpha_i = m_i * base for every i.
struct Resonance {
    double base = 1.0;
    std::vector<int> m;
};

struct OscillatorSpec {
    std::vector<double> alpha;
    double energy = 0.5;
    std::optional<Resonance> resonance;

    /// Validates alpha_i > 0, E > 0 and a declared resonance to 1e-12.
    OscillatorSpec(std::vector<double> alpha, double energy, std::optional<Resonance> resonance = std::nullopt);
    int dimension() const { return static_cast<int>(alpha.size()); }
};

/// Euclidean kinetic energy, U = sum alpha_i^2 x_i^2 / 2, at the oscillator's energy.
SystemSpec oscillator_system(const OscillatorSpec& osc);

/// Brake orbit along axis j (0-based): x_j = sqrt(2E)/alpha_j sin(alpha_j t).
PhaseState brake_orbit_closed_form(const OscillatorSpec& osc, int j, double t);
double brake_period(const OscillatorSpec& osc, int j);
double brake_amplitude(const OscillatorSpec& osc, int j);

/// Solution of v'' + alpha^2 v = 0: v_i(0) cos(alpha_i t) + v'_i(0) / alpha_i sin(alpha_i t).
Eigen::VectorXd jacobi_field_closed_form(const OscillatorSpec& osc, const Eigen::VectorXd& v0,
                                         const Eigen::VectorXd& vdot0, double t);

/// Two-frequency Lissajous member x^1 = a1 cos(m1 base t - s),
/// x^2 = a2 cos(m2 base t); remaining coordinates at rest at 0.
PhaseState lissajous_state(const OscillatorSpec& osc, double a1, double a2, double s, double t);
/// (alpha_1^2 a1^2 + alpha_2^2 a2^2) / 2, independent of s.
double lissajous_energy(const OscillatorSpec& osc, double a1, double a2);
/// 2 pi / base.
double lissajous_period(const OscillatorSpec& osc);

}  // namespace jmlab
