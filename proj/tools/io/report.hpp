#pragma once

// JSON artifacts written by the command-line tool.

#include <optional>
#include <string>

#include "config.hpp"

namespace jmlab::io {

json to_json(const Eigen::VectorXd& v);
json to_json(const Eigen::MatrixXd& m);  // row-major nested arrays

/// {kind, period, energy, closure_residual, rest_points, eigenvalues, nondegenerate, ...};
/// the last two are null without a monodromy report.
json orbit_json(const PeriodicOrbit& orbit, const MonodromyReport* mono);
json monodromy_json(const MonodromyReport& m);
json intersection_json(const IntersectionReport& r);
json checks_json(const PerturbationChecks& c);
json removal_json(const RemovalReport& r);
json phi_grid_json(const PhiGrid& g);

json error_json(const std::string& command, int exit_code, const char* category, const std::string& message);

/// Pretty JSON with a trailing newline.
void write_json(const json& j, const std::string& path);

}  // namespace jmlab::io
