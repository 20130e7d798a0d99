#pragma once

// JSON run configuration: system, tolerances and per-command blocks.
// Every field with a library default may be omitted.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "jmlab/intersect.hpp"
#include "jmlab/jacobi.hpp"
#include "jmlab/orbits.hpp"
#include "jmlab/perturb.hpp"

namespace jmlab::io {

using nlohmann::json;

/// Anything wrong with the config itself; the CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "config"; }
};

SystemSpec parse_system(const json& j);
Tolerances parse_tolerances(const json& j, Tolerances def = {});
ShootingOptions parse_shooting(const json& j);
IntersectOptions parse_intersect(const json& j);

/// One entry of the "orbits" list.
struct OrbitRequest {
    enum class Type { Brake, Rotation, Periodic } type = Type::Brake;
    Eigen::VectorXd x0, v0;  // brake: x0 is the seed
    std::optional<Eigen::VectorXd> section_normal;
    std::optional<double> period_guess;
    double period = 0.0;  // periodic only
    OrbitKind kind = OrbitKind::Brake;
};

std::vector<OrbitRequest> parse_orbits(const json& j, int dimension);

struct IntegrateRequest {
    Eigen::VectorXd x0, v0;
    double t0 = 0.0, t1 = 1.0;
    int samples = 0;  // 0: accepted steps as they come
};

IntegrateRequest parse_integrate(const json& j, int dimension);

struct JacobiCheckRequest {
    int count = 50;
    std::uint64_t seed = 1;
    double duration = 1.0;
    std::vector<std::pair<double, double>> box;  // per-coordinate sampling range
    double margin = 0.05;                        // keep E - U >= margin
    JacobiRoute route = JacobiRoute::Conformal;
    int samples = 200;
};

JacobiCheckRequest parse_jacobi_check(const json& j, const SystemSpec& sys);

struct PerturbRequest {
    std::string demo;  // "planar_crossing", "lissajous" or "" for a custom tube
    double s = 0.05, eta = 1.0, eps = 0.1;
    std::optional<double> rho;
    Eigen::VectorXd p, w;
    std::optional<Eigen::VectorXd> displacement;
    IntegrateRequest other;  // custom: the strand to clear
    int samples = 1000;
    std::uint64_t seed = 1;
    // phi grid on the plane origin + a e1 + b e2
    std::optional<Eigen::VectorXd> grid_origin, grid_e1, grid_e2;
    double grid_extent1 = 0.0, grid_extent2 = 0.0;
    int grid_n1 = 101, grid_n2 = 41;
};

PerturbRequest parse_perturb(const json& j);

struct OscillatorRequest {
    OscillatorSpec osc;
    // optional closed-form Lissajous member of a resonant pair
    bool lissajous = false;
    double a1 = 0.0, a2 = 0.0, s = 0.0;
};

OscillatorRequest parse_oscillator(const json& j);

Eigen::VectorXd parse_vector(const json& j, const char* what, int dimension = -1);

}  // namespace jmlab::io
