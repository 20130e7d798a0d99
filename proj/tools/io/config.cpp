#include "config.hpp"

#include <cmath>

namespace jmlab::io {

namespace {

const json& need(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
    return j.at(key);
}

double number(const json& j, const char* what) {
    if (!j.is_number()) throw ConfigError(std::string("'") + what + "' must be a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(std::string("'") + what + "' is not finite");
    return v;
}

double number_or(const json& j, const char* key, double def) {
    return j.is_object() && j.contains(key) ? number(j.at(key), key) : def;
}

int int_or(const json& j, const char* key, int def) {
    if (!j.is_object() || !j.contains(key)) return def;
    if (!j.at(key).is_number_integer()) throw ConfigError(std::string("'") + key + "' must be an integer");
    return j.at(key).get<int>();
}

std::string string_of(const json& j, const char* what) {
    if (!j.is_string()) throw ConfigError(std::string("'") + what + "' must be a string");
    return j.get<std::string>();
}

Expr expression(const json& j, const char* what, int dimension) {
    auto src = string_of(j, what);
    try {
        return parse(src, dimension);
    } catch (const ParseError& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

Eigen::VectorXd parse_vector(const json& j, const char* what, int dimension) {
    if (!j.is_array()) throw ConfigError(std::string("'") + what + "' must be an array");
    if (dimension >= 0 && static_cast<int>(j.size()) != dimension)
        throw ConfigError(std::string("'") + what + "' has " + std::to_string(j.size()) + " entries, expected " +
                          std::to_string(dimension));
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = number(j[i], what);
    return v;
}

SystemSpec parse_system(const json& j) {
    const json& js = need(j, "system");
    const int n = int_or(js, "dimension", 0);
    if (n < 1 || n > 9) throw ConfigError("'dimension' must be in 1..9");

    Space space;
    if (js.contains("space")) {
        const json& sp = js.at("space");
        auto type = string_of(need(sp, "type"), "space.type");
        if (type == "torus") {
            auto p = parse_vector(need(sp, "periods"), "space.periods", n);
            for (double L : p)
                if (!(L > 0)) throw ConfigError("torus periods must be positive");
            space = Space::flat_torus({p.data(), p.data() + n});
        } else if (type != "euclidean") {
            throw ConfigError("unknown space type '" + type + "'");
        }
    }

    try {
        MetricModel metric = MetricModel::euclidean(n, space);
        if (js.contains("metric")) {
            const json& jm = js.at("metric");
            auto kind = string_of(need(jm, "kind"), "metric.kind");
            if (kind == "riemannian") {
                const json& g = need(jm, "g");
                if (!g.is_array() || static_cast<int>(g.size()) != n)
                    throw ConfigError("metric.g must be an n x n array of expressions");
                std::vector<std::vector<Expr>> rows(n);
                for (int i = 0; i < n; ++i) {
                    if (!g[i].is_array() || static_cast<int>(g[i].size()) != n)
                        throw ConfigError("metric.g must be an n x n array of expressions");
                    for (int k = 0; k < n; ++k) rows[i].push_back(expression(g[i][k], "metric.g", n));
                }
                metric = MetricModel::riemannian(rows, space);
            } else if (kind == "finsler") {
                metric = MetricModel::finsler(expression(need(jm, "f2"), "metric.f2", n), space);
            } else if (kind != "euclidean") {
                throw ConfigError("unknown metric kind '" + kind + "'");
            }
        }
        Expr U = expression(need(js, "potential"), "potential", n);
        if (space.torus()) check_periodic(U, space, "potential");
        return SystemSpec(std::move(metric), std::move(U), number(need(js, "energy"), "energy"));
    } catch (const ModelError& e) {
        throw ConfigError(std::string("system: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }
}

Tolerances parse_tolerances(const json& j, Tolerances def) {
    if (!j.is_object()) return def;
    def.rtol = number_or(j, "rtol", def.rtol);
    def.atol = number_or(j, "atol", def.atol);
    def.h0 = number_or(j, "h0", def.h0);
    def.hmax = number_or(j, "hmax", def.hmax);
    def.max_steps = int_or(j, "max_steps", static_cast<int>(std::min<long>(def.max_steps, 2'000'000'000)));
    if (!(def.rtol > 0) || !(def.atol > 0) || !(def.hmax > 0) || def.max_steps < 1)
        throw ConfigError("tolerances must be positive");
    return def;
}

ShootingOptions parse_shooting(const json& j) {
    ShootingOptions opt;
    if (j.contains("tolerances")) opt.tol = parse_tolerances(j.at("tolerances"), opt.tol);
    if (!j.contains("shooting")) return opt;
    const json& s = j.at("shooting");
    opt.t_max = number_or(s, "t_max", opt.t_max);
    opt.max_iterations = int_or(s, "max_iterations", opt.max_iterations);
    opt.newton_tol = number_or(s, "newton_tol", opt.newton_tol);
    opt.closure_tol = number_or(s, "closure_tol", opt.closure_tol);
    opt.minimal_divisors = int_or(s, "minimal_divisors", opt.minimal_divisors);
    if (s.contains("tolerances")) opt.tol = parse_tolerances(s.at("tolerances"), opt.tol);
    return opt;
}

IntersectOptions parse_intersect(const json& j) {
    IntersectOptions opt;
    if (!j.contains("intersections")) return opt;
    const json& s = j.at("intersections");
    if (s.contains("tol_space")) opt.tol_space = number(s.at("tol_space"), "tol_space");
    opt.tol_angle = number_or(s, "tol_angle", opt.tol_angle);
    if (s.contains("max_step")) opt.max_step = number(s.at("max_step"), "max_step");
    opt.min_samples = int_or(s, "min_samples", opt.min_samples);
    opt.max_samples = int_or(s, "max_samples", opt.max_samples);
    opt.near_miss_factor = number_or(s, "near_miss_factor", opt.near_miss_factor);
    return opt;
}

std::vector<OrbitRequest> parse_orbits(const json& j, int n) {
    std::vector<OrbitRequest> out;
    if (!j.contains("orbits")) return out;
    const json& list = j.at("orbits");
    if (!list.is_array()) throw ConfigError("'orbits' must be an array");
    for (const json& e : list) {
        OrbitRequest r;
        auto type = string_of(need(e, "type"), "orbits.type");
        if (type == "brake") {
            r.type = OrbitRequest::Type::Brake;
            r.x0 = parse_vector(need(e, "seed"), "seed", n);
        } else if (type == "rotation") {
            r.type = OrbitRequest::Type::Rotation;
            r.kind = OrbitKind::Rotation;
            r.x0 = parse_vector(need(e, "x0"), "x0", n);
            r.v0 = parse_vector(need(e, "v0"), "v0", n);
            if (e.contains("section_normal")) r.section_normal = parse_vector(e.at("section_normal"), "section_normal", n);
            if (e.contains("period_guess")) r.period_guess = number(e.at("period_guess"), "period_guess");
        } else if (type == "periodic") {
            r.type = OrbitRequest::Type::Periodic;
            r.x0 = parse_vector(need(e, "x0"), "x0", n);
            r.v0 = parse_vector(need(e, "v0"), "v0", n);
            r.period = number(need(e, "period"), "period");
            if (!(r.period > 0)) throw ConfigError("'period' must be positive");
            auto kind = e.contains("kind") ? string_of(e.at("kind"), "kind") : std::string("rotation");
            if (kind == "brake") r.kind = OrbitKind::Brake;
            else if (kind == "rotation") r.kind = OrbitKind::Rotation;
            else throw ConfigError("unknown orbit kind '" + kind + "'");
        } else {
            throw ConfigError("unknown orbit type '" + type + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

IntegrateRequest parse_integrate(const json& j, int n) {
    IntegrateRequest r;
    r.x0 = parse_vector(need(j, "x0"), "x0", n);
    r.v0 = parse_vector(need(j, "v0"), "v0", n);
    r.t0 = number_or(j, "t0", 0.0);
    r.t1 = number(need(j, "t1"), "t1");
    r.samples = int_or(j, "samples", 0);
    if (r.samples == 1 || r.samples < 0) throw ConfigError("'samples' must be 0 or at least 2");
    return r;
}

JacobiCheckRequest parse_jacobi_check(const json& j, const SystemSpec& sys) {
    JacobiCheckRequest r;
    const int n = sys.dimension();
    const json& s = j.contains("jacobi_check") ? j.at("jacobi_check") : json::object();
    r.count = int_or(s, "count", r.count);
    r.seed = static_cast<std::uint64_t>(int_or(s, "seed", 1));
    r.duration = number_or(s, "duration", r.duration);
    r.margin = number_or(s, "margin", r.margin);
    r.samples = int_or(s, "samples", r.samples);
    if (r.count < 1 || !(r.duration > 0) || !(r.margin > 0)) throw ConfigError("bad jacobi_check block");
    if (s.contains("route")) {
        auto route = string_of(s.at("route"), "route");
        if (route == "direct") r.route = JacobiRoute::Direct;
        else if (route != "conformal") throw ConfigError("unknown route '" + route + "'");
    }
    if (s.contains("box")) {
        const json& b = s.at("box");
        if (!b.is_array() || static_cast<int>(b.size()) != n) throw ConfigError("'box' needs one [lo, hi] per coordinate");
        for (const json& e : b) {
            auto v = parse_vector(e, "box", 2);
            if (!(v[0] < v[1])) throw ConfigError("'box' ranges must have lo < hi");
            r.box.emplace_back(v[0], v[1]);
        }
    } else if (sys.space().torus()) {
        for (double L : sys.space().periods) r.box.emplace_back(0.0, L);
    } else {
        throw ConfigError("jacobi_check.box is required on R^n");
    }
    return r;
}

PerturbRequest parse_perturb(const json& j) {
    PerturbRequest r;
    const json& s = need(j, "perturb");
    if (s.contains("demo")) {
        r.demo = string_of(s.at("demo"), "demo");
        if (r.demo != "planar_crossing" && r.demo != "lissajous") throw ConfigError("unknown demo '" + r.demo + "'");
        if (r.demo == "lissajous") {
            r.eta = 0.4;
            r.eps = 0.05;
            r.s = 0.02;
        }
    }
    r.s = number_or(s, "s", r.s);
    r.eta = number_or(s, "eta", r.eta);
    r.eps = number_or(s, "eps", r.eps);
    if (s.contains("rho")) r.rho = number(s.at("rho"), "rho");
    r.samples = int_or(s, "samples", r.samples);
    r.seed = static_cast<std::uint64_t>(int_or(s, "seed", 1));
    if (r.demo.empty()) {
        r.p = parse_vector(need(s, "p"), "p");
        const int n = static_cast<int>(r.p.size());
        r.w = parse_vector(need(s, "w"), "w", n);
        if (s.contains("displacement")) r.displacement = parse_vector(s.at("displacement"), "displacement", n);
        r.other = parse_integrate(need(s, "other"), n);
    }
    if (s.contains("grid")) {
        const json& g = s.at("grid");
        r.grid_origin = parse_vector(need(g, "origin"), "grid.origin");
        const int n = static_cast<int>(r.grid_origin->size());
        r.grid_e1 = parse_vector(need(g, "e1"), "grid.e1", n);
        r.grid_e2 = parse_vector(need(g, "e2"), "grid.e2", n);
        r.grid_extent1 = number(need(g, "extent1"), "grid.extent1");
        r.grid_extent2 = number(need(g, "extent2"), "grid.extent2");
        r.grid_n1 = int_or(g, "n1", r.grid_n1);
        r.grid_n2 = int_or(g, "n2", r.grid_n2);
        if (r.grid_n1 < 2 || r.grid_n2 < 2) throw ConfigError("grid needs at least 2 points per side");
    }
    return r;
}

OscillatorRequest parse_oscillator(const json& j) {
    const json& s = need(j, "oscillator");
    auto alpha = parse_vector(need(s, "alpha"), "alpha");
    double E = number(need(s, "energy"), "energy");
    std::optional<Resonance> res;
    if (s.contains("resonance")) {
        const json& r = s.at("resonance");
        Resonance rr;
        rr.base = number_or(r, "base", 1.0);
        const json& m = need(r, "m");
        if (!m.is_array()) throw ConfigError("'resonance.m' must be an array of integers");
        for (const json& e : m) {
            if (!e.is_number_integer()) throw ConfigError("'resonance.m' must be an array of integers");
            rr.m.push_back(e.get<int>());
        }
        res = rr;
    }
    OscillatorRequest out{[&] {
        try {
            return OscillatorSpec({alpha.data(), alpha.data() + alpha.size()}, E, res);
        } catch (const Error& e) {
            throw ConfigError(std::string("oscillator: ") + e.what());
        }
    }()};
    if (s.contains("lissajous")) {
        const json& l = s.at("lissajous");
        if (!res) throw ConfigError("a Lissajous member needs a declared resonance");
        out.lissajous = true;
        out.a1 = number(need(l, "a1"), "a1");
        out.a2 = number(need(l, "a2"), "a2");
        out.s = number_or(l, "s", 0.0);
        double el = lissajous_energy(out.osc, out.a1, out.a2);
        if (std::abs(el - E) > 1e-9 * (1 + E))
            throw ConfigError("Lissajous amplitudes give energy " + std::to_string(el) + ", not E");
    }
    return out;
}

}  // namespace jmlab::io
