#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>

#include "report.hpp"

namespace jmlab::io {

namespace fs = std::filesystem;

namespace {

json load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config '" + path + "'");
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

struct Context {
    json cfg;
    fs::path out;
    std::ostream& log;

    std::string file(const std::string& name) const { return (out / name).string(); }
};

int output_samples(const json& cfg) {
    int n = cfg.value("output_samples", 1001);
    if (n < 2) throw ConfigError("'output_samples' must be at least 2");
    return n;
}

void write_trajectory(const Trajectory& traj, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_csv(traj, os);
}

PeriodicOrbit solve(const SystemSpec& sys, const OrbitRequest& r, const ShootingOptions& base) {
    ShootingOptions opt = base;
    switch (r.type) {
        case OrbitRequest::Type::Brake:
            return find_brake(sys, r.x0, opt);
        case OrbitRequest::Type::Rotation:
            opt.period_guess = r.period_guess;
            return find_rotation(sys, {r.x0, r.v0}, r.section_normal, opt);
        case OrbitRequest::Type::Periodic:
            break;
    }
    return make_periodic_orbit(sys, {r.x0, r.v0}, r.period, r.kind, opt);
}

struct MonodromyBlock {
    int iterates = 1;
    double tol_eig = 1e-6;
};

MonodromyBlock parse_monodromy(const json& cfg) {
    MonodromyBlock m;
    if (!cfg.contains("monodromy")) return m;
    const json& b = cfg.at("monodromy");
    m.iterates = b.value("iterates", 1);
    m.tol_eig = b.value("tol_eig", 1e-6);
    if (m.iterates < 1 || !(m.tol_eig > 0)) throw ConfigError("bad monodromy block");
    return m;
}

/// Monodromy where the model supports it; finsler orbits get none.
std::optional<MonodromyReport> try_monodromy(const SystemSpec& sys, const PeriodicOrbit& o, const MonodromyBlock& mb,
                                             const Tolerances& tol) {
    if (!sys.metric().riemannian()) return std::nullopt;
    return monodromy(sys, o, mb.iterates, mb.tol_eig, tol);
}

// ---- commands ---------------------------------------------------------------

void cmd_integrate(Context& c) {
    SystemSpec sys = parse_system(c.cfg);
    auto req = parse_integrate(c.cfg.contains("integrate") ? c.cfg.at("integrate") : json(), sys.dimension());
    Tolerances tol = parse_tolerances(c.cfg.value("tolerances", json()));
    Trajectory traj = integrate(sys, req.x0, req.v0, req.t0, req.t1, tol);
    if (req.samples > 0) {
        Trajectory r = resample(traj, req.samples);
        std::vector<double> h;
        for (std::size_t i = 0; i < r.size(); ++i) h.push_back(total_energy(sys, r.x(i), r.v(i)));
        r.set_scalar(h);
        traj = std::move(r);
    }
    write_trajectory(traj, c.file("trajectory.csv"));
    c.log << "integrate: " << traj.size() << " samples, energy drift " << traj.drift() << "\n";
}

void cmd_find(Context& c, OrbitRequest::Type type) {
    SystemSpec sys = parse_system(c.cfg);
    auto reqs = parse_orbits(c.cfg, sys.dimension());
    auto shoot = parse_shooting(c.cfg);
    auto mb = parse_monodromy(c.cfg);
    const int samples = output_samples(c.cfg);
    json list = json::array();
    int k = 0;
    for (const auto& r : reqs) {
        if (r.type != type) continue;
        PeriodicOrbit o = solve(sys, r, shoot);
        auto mono = try_monodromy(sys, o, mb, shoot.tol);
        list.push_back(orbit_json(o, mono ? &*mono : nullptr));
        write_trajectory(resample(o.trajectory, samples), c.file("orbit_" + std::to_string(k) + ".csv"));
        c.log << "orbit " << k << ": period " << std::setprecision(12) << o.period << "\n";
        ++k;
    }
    if (k == 0) throw ConfigError("no matching entries in 'orbits'");
    write_json({{"orbits", list}}, c.file("orbits.json"));
}

void cmd_monodromy(Context& c) {
    SystemSpec sys = parse_system(c.cfg);
    auto reqs = parse_orbits(c.cfg, sys.dimension());
    if (reqs.empty()) throw ConfigError("'orbits' is empty");
    auto shoot = parse_shooting(c.cfg);
    auto mb = parse_monodromy(c.cfg);
    json list = json::array();
    for (const auto& r : reqs) {
        PeriodicOrbit o = solve(sys, r, shoot);
        MonodromyReport m = monodromy(sys, o, mb.iterates, mb.tol_eig, shoot.tol);
        json e = monodromy_json(m);
        e["orbit"] = orbit_json(o, &m);
        list.push_back(e);
        c.log << "monodromy: trivial multiplicity " << m.trivial_multiplicity << ", det error " << m.det_error << "\n";
    }
    write_json({{"orbits", list}}, c.file("monodromy.json"));
}

void cmd_intersections(Context& c) {
    SystemSpec sys = parse_system(c.cfg);
    auto reqs = parse_orbits(c.cfg, sys.dimension());
    if (reqs.empty()) throw ConfigError("'orbits' is empty");
    auto shoot = parse_shooting(c.cfg);
    auto opt = parse_intersect(c.cfg);
    bool mutual = c.cfg.value("intersections", json::object()).value("mutual", true);
    std::vector<PeriodicOrbit> orbits;
    for (const auto& r : reqs) orbits.push_back(solve(sys, r, shoot));
    json self = json::array(), pairs = json::array();
    int dp = 0;
    bool ambiguous = false;
    for (std::size_t i = 0; i < orbits.size(); ++i) {
        auto rep = self_intersections(orbits[i], opt);
        dp += rep.dp_count;
        ambiguous = ambiguous || rep.ambiguous();
        json e = intersection_json(rep);
        e["orbit"] = i;
        self.push_back(e);
    }
    if (mutual)
        for (std::size_t i = 0; i < orbits.size(); ++i)
            for (std::size_t k = i + 1; k < orbits.size(); ++k) {
                auto rep = mutual_intersections(orbits[i], orbits[k], opt);
                ambiguous = ambiguous || rep.ambiguous();
                json e = intersection_json(rep);
                e["a"] = i;
                e["b"] = k;
                pairs.push_back(e);
            }
    write_json({{"self", self}, {"mutual", pairs}, {"dp_count", dp}, {"ambiguous", ambiguous}},
               c.file("intersections.json"));
    c.log << "intersections: " << dp << " double points\n";
}

void cmd_jacobi_check(Context& c) {
    SystemSpec sys = parse_system(c.cfg);
    auto req = parse_jacobi_check(c.cfg, sys);
    Tolerances tol = parse_tolerances(c.cfg.value("tolerances", json()));
    const double threshold = c.cfg.value("jacobi_check", json::object()).value("threshold", 1e-6);
    const int n = sys.dimension();
    const double E = sys.energy();

    std::mt19937_64 rng(req.seed);
    std::normal_distribution<double> normal;
    std::ofstream csv(c.file("jacobi_check.csv"));
    csv << "index";
    for (int i = 1; i <= n; ++i) csv << ",x" << i;
    for (int i = 1; i <= n; ++i) csv << ",v" << i;
    csv << ",max_deviation,max_speed_error\n" << std::setprecision(17);

    double worst = 0.0, worst_speed = 0.0;
    int attempts = 0;
    for (int k = 0; k < req.count; ++k) {
        Eigen::VectorXd x(n), v(n);
        double U = 0.0;
        do {
            if (++attempts > 1000 * req.count) throw ConfigError("jacobi_check.box has no room inside the Hill region");
            for (int i = 0; i < n; ++i)
                x[i] = std::uniform_real_distribution<double>(req.box[i].first, req.box[i].second)(rng);
            U = sys.potential_value<double>({x.data(), static_cast<std::size_t>(n)});
        } while (!(E - U >= req.margin));
        for (int i = 0; i < n; ++i) v[i] = normal(rng);
        double f2 = kernel::f2<double>(sys.metric(), {x.data(), static_cast<std::size_t>(n)},
                                       {v.data(), static_cast<std::size_t>(n)});
        v *= std::sqrt(2.0 * (E - U) / f2);
        auto res = correspondence_check(sys, x, v, req.duration, tol, req.route, req.samples);
        worst = std::max(worst, res.max_deviation);
        worst_speed = std::max(worst_speed, res.max_speed_error);
        csv << k;
        for (int i = 0; i < n; ++i) csv << ',' << x[i];
        for (int i = 0; i < n; ++i) csv << ',' << v[i];
        csv << ',' << res.max_deviation << ',' << res.max_speed_error << '\n';
    }
    write_json({{"count", req.count},
                {"seed", req.seed},
                {"duration", req.duration},
                {"max_deviation", worst},
                {"max_speed_error", worst_speed},
                {"threshold", threshold},
                {"passed", worst < threshold}},
               c.file("jacobi_check.json"));
    c.log << "jacobi-check: max deviation " << worst << "\n";
}

void cmd_perturb(Context& c) {
    auto req = parse_perturb(c.cfg);
    std::optional<RemovalCase> rc;
    if (req.demo == "planar_crossing") {
        rc.emplace(planar_crossing_case(req.s, req.eta, req.eps));
    } else if (req.demo == "lissajous") {
        rc.emplace(lissajous_case(req.s, req.eta, req.eps));
    } else {
        SystemSpec sys = parse_system(c.cfg);
        if (req.p.size() != sys.dimension()) throw ConfigError("perturb.p does not match the dimension");
        auto pert = build_perturbation(sys.jacobi(), req.p, req.w, req.eta, req.eps, req.s, req.rho, req.displacement);
        Tolerances tol = parse_tolerances(c.cfg.value("tolerances", json()), {1e-12, 1e-14});
        auto strand = std::make_shared<Trajectory>(integrate(sys, req.other.x0, req.other.v0, req.other.t0, req.other.t1, tol));
        const int n = sys.dimension();
        Strand other{[strand, n](double t) {
                         State y = strand->at(t);
                         return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(y.data(), n));
                     },
                     strand->t_begin(), strand->t_end()};
        rc.emplace(RemovalCase{sys, pert, other});
    }
    const auto& pert = rc->pert;
    SystemSpec psys = perturbed_system(rc->sys, {pert});
    auto checks = check_perturbation(rc->sys, pert, req.samples, req.seed);
    auto removal = verify_removal(rc->sys, pert, rc->other);

    // phi grid, by default in the plane of the center tangent and the displacement
    const int n = rc->sys.dimension();
    Eigen::VectorXd origin, e1, e2;
    double ext1 = req.grid_extent1, ext2 = req.grid_extent2;
    if (req.grid_origin) {
        origin = *req.grid_origin;
        e1 = *req.grid_e1;
        e2 = *req.grid_e2;
    } else {
        auto c0 = pert.tube->center().eval(0.0, 1);
        origin = Eigen::Map<const Eigen::VectorXd>(c0[0].data(), n);
        e1 = Eigen::Map<const Eigen::VectorXd>(c0[1].data(), n);
        ext1 = 2.0 * pert.eta() * e1.norm();
        e1.normalize();
        e2 = pert.tube->displacement();
        e2.normalize();
        ext2 = 2.0 * pert.eps();
    }
    auto grid = phi_grid(pert, origin, e1, e2, ext1, ext2, req.grid_n1, req.grid_n2);

    // U~ spot values along the displaced curve
    json spots = json::array();
    for (int k = 0; k <= 16; ++k) {
        double t = -2.0 * pert.eta() + pert.eta() * k / 4.0;
        auto p = pert.curve.eval(t, 0)[0];
        std::span<const double> x(p.data(), p.size());
        spots.push_back({{"t", t},
                         {"x", p},
                         {"phi", pert.phi->eval(x)},
                         {"U", rc->sys.potential_value<double>(x)},
                         {"U_perturbed", psys.potential_value<double>(x)}});
    }

    const bool passed = removal.removed && checks.on_curve_max < 1e-10 && checks.support_violations == 0 &&
                        checks.identity_residual < 1e-12 && checks.geodesic_residual < 1e-6;
    json out = {{"perturbation",
                 {{"s", pert.s}, {"eta", pert.eta()}, {"eps", pert.eps()}, {"rho", pert.phi->rho()}}},
                {"potential",
                 {{"base", print(rc->sys.base_potential())},
                  {"energy", rc->sys.energy()},
                  {"form", "U + (exp(phi) - 1) (U - E)"},
                  {"samples", spots}}},
                {"checks", checks_json(checks)},
                {"removal", removal_json(removal)},
                {"passed", passed}};
    write_json(out, c.file("perturb.json"));
    write_json(phi_grid_json(grid), c.file("phi_grid.json"));
    c.log << "perturb: gap " << removal.after.distance << " (required " << removal.required_gap << ")\n";
}

double eigen_match_error(std::vector<std::complex<double>> got, const std::vector<std::complex<double>>& want) {
    double worst = 0.0;
    for (const auto& w : want) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < got.size(); ++i)
            if (std::abs(got[i] - w) < std::abs(got[best] - w)) best = i;
        worst = std::max(worst, std::abs(got[best] - w));
        got.erase(got.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return worst;
}

void cmd_oscillator_report(Context& c) {
    auto req = parse_oscillator(c.cfg);
    const auto& osc = req.osc;
    SystemSpec sys = oscillator_system(osc);
    auto shoot = parse_shooting(c.cfg);
    auto mb = parse_monodromy(c.cfg);
    auto opt = parse_intersect(c.cfg);
    const int n = osc.dimension();
    const double pi = std::numbers::pi;

    std::vector<PeriodicOrbit> brakes;
    json bj = json::array();
    bool nondeg = true;
    int dp = 0;
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd seed = Eigen::VectorXd::Zero(n);
        seed[j] = brake_amplitude(osc, j);
        PeriodicOrbit o = find_brake(sys, seed, shoot);
        MonodromyReport m = monodromy(sys, o, mb.iterates, mb.tol_eig, shoot.tol);
        std::vector<std::complex<double>> predicted{1.0, 1.0};
        for (int i = 0; i < n; ++i)
            if (i != j) {
                double th = 2.0 * pi * osc.alpha[i] / osc.alpha[j] * mb.iterates;
                predicted.emplace_back(std::cos(th), std::sin(th));
                predicted.emplace_back(std::cos(th), -std::sin(th));
            }
        auto self = self_intersections(o, opt);
        double amp = 0.0;
        for (const auto& r : o.rest_points) amp = std::max(amp, std::abs(r.x[j]));
        json e = orbit_json(o, &m);
        e["axis"] = j;
        e["period_closed_form"] = brake_period(osc, j);
        e["period_error"] = std::abs(o.period - brake_period(osc, j));
        e["amplitude"] = amp;
        e["amplitude_error"] = std::abs(amp - brake_amplitude(osc, j));
        e["eigenvalues_closed_form"] = json::array();
        for (const auto& z : predicted) e["eigenvalues_closed_form"].push_back({z.real(), z.imag()});
        e["eigenvalue_error"] = eigen_match_error(m.eigenvalues, predicted);
        e["trivial_multiplicity"] = m.trivial_multiplicity;
        e["det_error"] = m.det_error;
        e["intersections"] = intersection_json(self);
        bj.push_back(e);
        nondeg = nondeg && m.nondegenerate;
        dp += self.dp_count;
        brakes.push_back(std::move(o));
    }

    json mutual = json::array();
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) {
            auto rep = mutual_intersections(brakes[i], brakes[k], opt);
            json e = intersection_json(rep);
            e["a"] = i;
            e["b"] = k;
            mutual.push_back(e);
        }

    json out = {{"alpha", osc.alpha}, {"energy", osc.energy}, {"resonant", osc.resonance.has_value()},
                {"brake_orbits", bj},  {"mutual", mutual}};
    if (req.lissajous) {
        PhaseState st = lissajous_state(osc, req.a1, req.a2, req.s, 0.0);
        PeriodicOrbit o = make_periodic_orbit(sys, st, lissajous_period(osc), OrbitKind::Rotation, shoot);
        MonodromyReport m = monodromy(sys, o, mb.iterates, mb.tol_eig, shoot.tol);
        auto self = self_intersections(o, opt);
        json e = orbit_json(o, &m);
        e["a1"] = req.a1;
        e["a2"] = req.a2;
        e["s"] = req.s;
        e["trivial_multiplicity"] = m.trivial_multiplicity;
        e["det_error"] = m.det_error;
        e["intersections"] = intersection_json(self);
        out["lissajous"] = e;
        nondeg = nondeg && m.nondegenerate;
        dp += self.dp_count;
    }
    out["dp_count"] = dp;
    out["nondegenerate"] = nondeg;
    write_json(out, c.file("oscillator_report.json"));
    c.log << "oscillator-report: dp_count " << dp << ", nondegenerate " << (nondeg ? "true" : "false") << "\n";
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"integrate",    "find-brake",    "find-rotation", "monodromy",
                                                "intersections", "jacobi-check", "perturb",       "oscillator-report"};
    return names;
}

int run(const std::string& command, const std::string& config_path, const std::string& out_dir, std::ostream& log) {
    fs::path out(out_dir);
    auto fail = [&](int code, const char* category, const std::string& msg) {
        log << "error (" << category << "): " << msg << "\n";
        try {
            fs::create_directories(out);
            write_json(error_json(command, code, category, msg), (out / "error.json").string());
        } catch (const std::exception&) {
        }
        return code;
    };
    try {
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec || !fs::is_directory(out)) throw ConfigError("cannot create output directory '" + out_dir + "'");
        fs::remove(out / "error.json", ec);
        Context c{load(config_path), out, log};
        if (command == "integrate") cmd_integrate(c);
        else if (command == "find-brake") cmd_find(c, OrbitRequest::Type::Brake);
        else if (command == "find-rotation") cmd_find(c, OrbitRequest::Type::Rotation);
        else if (command == "monodromy") cmd_monodromy(c);
        else if (command == "intersections") cmd_intersections(c);
        else if (command == "jacobi-check") cmd_jacobi_check(c);
        else if (command == "perturb") cmd_perturb(c);
        else if (command == "oscillator-report") cmd_oscillator_report(c);
        else throw ConfigError("unknown command '" + command + "'");
        return Ok;
    } catch (const ConfigError& e) {
        return fail(ConfigFailure, e.category(), e.what());
    } catch (const json::exception& e) {
        return fail(ConfigFailure, "config", e.what());
    } catch (const Error& e) {
        return fail(NumericFailure, e.category(), e.what());
    } catch (const std::exception& e) {
        return fail(NumericFailure, "error", e.what());
    }
}

}  // namespace jmlab::io
