#include "report.hpp"

#include <fstream>

namespace jmlab::io {

json to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json to_json(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::VectorXd row = m.row(i).transpose();
        a.push_back(to_json(row));
    }
    return a;
}

namespace {

json eigen_list(const std::vector<std::complex<double>>& ev) {
    json a = json::array();
    for (const auto& z : ev) a.push_back({z.real(), z.imag()});
    return a;
}

}  // namespace

json orbit_json(const PeriodicOrbit& o, const MonodromyReport* mono) {
    json j;
    j["kind"] = o.kind == OrbitKind::Brake ? "brake" : "rotation";
    j["period"] = o.period;
    j["energy"] = o.energy;
    j["closure_residual"] = o.closure_residual;
    json rp = json::array();
    for (const auto& r : o.rest_points) rp.push_back({{"t", r.t}, {"x", to_json(r.x)}});
    j["rest_points"] = rp;
    j["eigenvalues"] = mono ? eigen_list(mono->eigenvalues) : json(nullptr);
    j["nondegenerate"] = mono ? json(mono->nondegenerate) : json(nullptr);
    j["x0"] = to_json(o.x0());
    j["v0"] = to_json(o.v0());
    j["symmetry_residual"] = o.symmetry_residual;
    j["min_kinetic"] = o.min_kinetic;
    j["minimal"] = o.minimal;
    j["energy_drift"] = o.trajectory.drift();
    return j;
}

json monodromy_json(const MonodromyReport& m) {
    return {{"matrix", to_json(m.matrix)},
            {"eigenvalues", eigen_list(m.eigenvalues)},
            {"trivial_multiplicity", m.trivial_multiplicity},
            {"nondegenerate", m.nondegenerate},
            {"det_error", m.det_error},
            {"tol_eig", m.tol_eig}};
}

json intersection_json(const IntersectionReport& r) {
    json pairs = json::array();
    for (const auto& p : r.pairs)
        pairs.push_back({{"s", p.s}, {"t", p.t}, {"point", to_json(p.point)}, {"kind", to_string(p.kind)}, {"gap", p.gap}});
    json nm = json::array();
    for (const auto& m : r.near_misses) nm.push_back({{"s", m.s}, {"t", m.t}, {"gap", m.gap}, {"converged", m.converged}});
    json pts = json::array();
    for (const auto& x : r.points) pts.push_back(to_json(x));
    return {{"pairs", pairs},
            {"dp_count", r.dp_count},
            {"reversal_count", r.reversal_count},
            {"tangential_count", r.tangential_count},
            {"points", pts},
            {"near_misses", nm},
            {"ambiguous", r.ambiguous()},
            {"tol_space", r.tol_space},
            {"tol_angle", r.tol_angle}};
}

json checks_json(const PerturbationChecks& c) {
    return {{"on_curve_max", c.on_curve_max},
            {"support_samples", c.support_samples},
            {"support_violations", c.support_violations},
            {"geodesic_residual", c.geodesic_residual},
            {"identity_residual", c.identity_residual},
            {"max_abs_phi", c.max_abs_phi},
            {"length_center", c.length_center},
            {"length_displaced", c.length_displaced}};
}

json removal_json(const RemovalReport& r) {
    auto ca = [](const ClosestApproach& c) { return json{{"distance", c.distance}, {"s", c.s}, {"t", c.t}}; };
    return {{"s", r.s},
            {"gap_before", ca(r.before)},
            {"gap_after", ca(r.after)},
            {"required_gap", r.required_gap},
            {"removed", r.removed},
            {"other_strand_clear", r.other_strand_clear},
            {"flight_time", r.flight_time},
            {"closure", r.closure},
            {"path_deviation", r.path_deviation}};
}

json phi_grid_json(const PhiGrid& g) {
    return {{"origin", to_json(g.origin)}, {"e1", to_json(g.e1)}, {"e2", to_json(g.e2)},
            {"a", g.a},                    {"b", g.b},            {"values", g.values}};
}

json error_json(const std::string& command, int exit_code, const char* category, const std::string& message) {
    return {{"command", command}, {"exit_code", exit_code}, {"category", category}, {"message", message}};
}

void write_json(const json& j, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << j.dump(2) << '\n';
}

}  // namespace jmlab::io
