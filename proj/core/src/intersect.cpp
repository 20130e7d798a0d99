#include "jmlab/intersect.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace jmlab {

using Eigen::VectorXd;

const char* to_string(IntersectionKind k) {
    switch (k) {
        case IntersectionKind::DoublePoint: return "double_point";
        case IntersectionKind::Reversal: return "reversal";
        case IntersectionKind::Tangential: return "tangential";
    }
    return "?";
}

namespace {

VectorXd to_eigen(const std::vector<double>& v) { return Eigen::Map<const VectorXd>(v.data(), v.size()); }

VectorXd diff(const Space& space, const VectorXd& a, const VectorXd& b) {
    return to_eigen(space.difference(std::span<const double>(a.data(), a.size()),
                                     std::span<const double>(b.data(), b.size())));
}

double wrap_time(double t, double period) {
    double r = std::fmod(t, period);
    if (r < 0.0) r += period;
    return r;
}

// Distance of a from 0 on the circle of length period.
double cyclic(double a, double period) {
    double r = wrap_time(a, period);
    return std::min(r, period - r);
}

struct Sample {
    VectorXd x, v;
};

Sample eval(const PeriodicOrbit& orb, double t) {
    const int n = static_cast<int>(orb.trajectory.dimension());
    State y = orb.trajectory.at(wrap_time(t, orb.period));
    return {Eigen::Map<const VectorXd>(y.data(), n), Eigen::Map<const VectorXd>(y.data() + n, n)};
}

struct Refined {
    double s = 0.0, t = 0.0, gap = 0.0;
    bool converged = false;
};

// Levenberg-Marquardt on |x_a(s) - x_b(t)|^2 with steps clamped to `hmax`.
Refined refine(const PeriodicOrbit& a, const PeriodicOrbit& b, const Space& space, double s, double t, double hmax) {
    Sample pa = eval(a, s), pb = eval(b, t);
    VectorXd F = diff(space, pa.x, pb.x);
    double f = F.squaredNorm(), mu = 1e-12;
    const double tscale = std::max(a.period, b.period);
    Refined r;
    for (int it = 0; it < 80; ++it) {
        Eigen::MatrixXd J(F.size(), 2);
        J.col(0) = pa.v;
        J.col(1) = -pb.v;
        Eigen::Matrix2d A = J.transpose() * J;
        Eigen::Vector2d g = J.transpose() * F;
        if (f == 0.0) {
            r.converged = true;
            break;
        }
        Eigen::Matrix2d Am = A;
        Am.diagonal().array() += mu * (1.0 + A.diagonal().maxCoeff());
        Eigen::Vector2d d = Am.ldlt().solve(-g);
        if (!d.allFinite()) break;
        double dn = d.lpNorm<Eigen::Infinity>();
        if (dn > hmax) d *= hmax / dn;
        Sample qa = eval(a, s + d[0]), qb = eval(b, t + d[1]);
        VectorXd Fn = diff(space, qa.x, qb.x);
        double fn = Fn.squaredNorm();
        if (fn <= f) {
            s += d[0];
            t += d[1];
            pa = std::move(qa);
            pb = std::move(qb);
            F = std::move(Fn);
            bool small = d.lpNorm<Eigen::Infinity>() <= 1e-14 * tscale;
            f = fn;
            mu = std::max(mu * 0.1, 1e-15);
            if (small) {
                r.converged = true;
                break;
            }
        } else {
            mu *= 10.0;
            if (mu > 1e8) {
                // No descent left: a stationary point of the distance.
                r.converged = true;
                break;
            }
        }
    }
    r.s = wrap_time(s, a.period);
    r.t = wrap_time(t, b.period);
    r.gap = std::sqrt(f);
    return r;
}

struct CellKey {
    std::vector<long long> c;
    bool operator==(const CellKey& o) const { return c == o.c; }
};

struct CellHash {
    std::size_t operator()(const CellKey& k) const {
        std::size_t h = 1469598103934665603ull;
        for (long long v : k.c) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
        return h;
    }
};

// Cell geometry: on the torus each axis holds a whole number of cells.
struct Grid {
    int n = 0;
    std::vector<double> size;
    std::vector<long long> count;  // 0: unbounded axis

    Grid(const Space& space, int dim, double radius) : n(dim), size(dim, radius), count(dim, 0) {
        if (space.torus())
            for (int k = 0; k < n; ++k) {
                double L = space.periods[k];
                count[k] = std::max<long long>(1, static_cast<long long>(std::floor(L / radius)));
                size[k] = L / static_cast<double>(count[k]);
            }
    }

    long long index(int k, double x) const { return static_cast<long long>(std::floor(x / size[k])); }
    long long reduce(int k, long long i) const {
        if (count[k] == 0) return i;
        i %= count[k];
        return i < 0 ? i + count[k] : i;
    }
};

// Cells covering the bounding box of the segment, widened by `pad` cells.
template <typename Fn>
void for_cells(const Grid& grid, const Space& space, const VectorXd& x, const VectorXd& step, int pad, Fn&& fn) {
    const int n = grid.n;
    VectorXd start = to_eigen(space.wrap(std::span<const double>(x.data(), n)));
    std::vector<long long> lo(n), hi(n);
    for (int k = 0; k < n; ++k) {
        double a = start[k], b = start[k] + step[k];
        lo[k] = grid.index(k, std::min(a, b)) - pad;
        hi[k] = grid.index(k, std::max(a, b)) + pad;
        // A periodic axis never needs more than all of its cells.
        if (grid.count[k] > 0 && hi[k] - lo[k] + 1 > grid.count[k]) hi[k] = lo[k] + grid.count[k] - 1;
    }
    CellKey key{lo};
    std::vector<long long> cur = lo;
    for (;;) {
        for (int k = 0; k < n; ++k) key.c[k] = grid.reduce(k, cur[k]);
        fn(key);
        int k = 0;
        while (k < n && ++cur[k] > hi[k]) {
            cur[k] = lo[k];
            ++k;
        }
        if (k == n) break;
    }
}

}  // namespace

Polyline sample_polyline(const PeriodicOrbit& orbit, const Space& space, int samples) {
    if (samples < 4) throw PreconditionError("polyline needs at least 4 samples");
    if (!(orbit.period > 0.0) || orbit.trajectory.empty()) throw PreconditionError("orbit has no trajectory");
    Polyline p;
    p.period = orbit.period;
    p.t.resize(samples);
    p.x.resize(samples);
    const double dt = orbit.period / samples;
    for (int k = 0; k < samples; ++k) {
        p.t[k] = k * dt;
        p.x[k] = eval(orbit, p.t[k]).x;
    }
    p.step.resize(samples);
    p.arc.assign(samples + 1, 0.0);
    VectorXd lo = p.x[0], hi = p.x[0];
    for (int k = 0; k < samples; ++k) {
        const VectorXd& next = p.x[(k + 1) % samples];
        p.step[k] = diff(space, next, p.x[k]);
        double len = p.step[k].norm();
        p.max_step = std::max(p.max_step, len);
        p.arc[k + 1] = p.arc[k] + len;
        lo = lo.cwiseMin(p.x[k]);
        hi = hi.cwiseMax(p.x[k]);
    }
    p.diameter = (hi - lo).norm();
    if (space.torus()) {
        double d = 0.0;
        for (double L : space.periods) d += L * L;
        p.diameter = std::min(p.diameter, std::sqrt(d));
    }
    return p;
}

Polyline adaptive_polyline(const PeriodicOrbit& orbit, const Space& space, const IntersectOptions& opt) {
    int N = std::max(opt.min_samples, 4);
    Polyline p = sample_polyline(orbit, space, N);
    const double bound = opt.max_step ? *opt.max_step : p.diameter / 1000.0;
    if (!(bound > 0.0)) throw PreconditionError("polyline step bound must be positive (orbit of zero extent?)");
    while (p.max_step > bound) {
        long long next = static_cast<long long>(std::ceil(N * 1.1 * p.max_step / bound));
        if (next > opt.max_samples) throw PreconditionError("polyline would need more than max_samples samples");
        N = static_cast<int>(std::max<long long>(next, 2LL * N));
        N = std::min(N, opt.max_samples);
        p = sample_polyline(orbit, space, N);
    }
    return p;
}

SegmentDistance segment_distance(const Polyline& p, int i, const Polyline& q, int j, const Space& space) {
    const VectorXd& u = p.step[i];
    const VectorXd& v = q.step[j];
    VectorXd w = -diff(space, q.x[j], p.x[i]);  // P0 - Q0 at minimal image
    const double a = u.squaredNorm(), b = u.dot(v), c = v.squaredNorm(), d = u.dot(w), e = v.dot(w);
    const double tiny = 1e-300;
    double sc = 0.0, tc = 0.0;
    if (a <= tiny && c <= tiny) {
        sc = tc = 0.0;
    } else if (a <= tiny) {
        tc = std::clamp(e / c, 0.0, 1.0);
    } else if (c <= tiny) {
        sc = std::clamp(-d / a, 0.0, 1.0);
    } else {
        const double D = a * c - b * b;
        double sN, sD = D, tN, tD = D;
        if (D <= 1e-14 * a * c) {
            sN = 0.0;
            sD = 1.0;
            tN = e;
            tD = c;
        } else {
            sN = b * e - c * d;
            tN = a * e - b * d;
            if (sN < 0.0) {
                sN = 0.0;
                tN = e;
                tD = c;
            } else if (sN > sD) {
                sN = sD;
                tN = e + b;
                tD = c;
            }
        }
        if (tN < 0.0) {
            tN = 0.0;
            if (-d < 0.0) sN = 0.0;
            else if (-d > a) sN = sD;
            else {
                sN = -d;
                sD = a;
            }
        } else if (tN > tD) {
            tN = tD;
            if (-d + b < 0.0) sN = 0.0;
            else if (-d + b > a) sN = sD;
            else {
                sN = -d + b;
                sD = a;
            }
        }
        sc = sN / sD;
        tc = tN / tD;
    }
    return {(w + sc * u - tc * v).norm(), sc, tc};
}

bool admissible_self_pair(const Polyline& p, int i, int j, double radius) {
    if (i >= j) return false;
    const double total = p.arc.back();
    double inner = p.arc[j] - p.arc[i + 1];
    double outer = total - p.arc[j + 1] + p.arc[i];
    return std::min(inner, outer) > 2.0 * radius;
}

std::vector<std::pair<int, int>> candidate_pairs(const Polyline& p, const Polyline& q, double radius,
                                                 const Space& space, bool same) {
    if (!(radius > 0.0)) throw PreconditionError("candidate radius must be positive");
    const int n = static_cast<int>(p.x.front().size());
    Grid grid(space, n, radius);
    std::unordered_map<CellKey, std::vector<int>, CellHash> cells;
    for (int j = 0; j < q.size(); ++j)
        for_cells(grid, space, q.x[j], q.step[j], 0, [&](const CellKey& k) {
            auto& list = cells[k];
            if (list.empty() || list.back() != j) list.push_back(j);
        });
    std::vector<std::pair<int, int>> out;
    std::vector<int> seen(q.size(), -1);
    for (int i = 0; i < p.size(); ++i) {
        for_cells(grid, space, p.x[i], p.step[i], 1, [&](const CellKey& k) {
            auto it = cells.find(k);
            if (it == cells.end()) return;
            for (int j : it->second) {
                if (seen[j] == i) continue;
                seen[j] = i;
                if (same && !admissible_self_pair(p, i, j, radius)) continue;
                if (segment_distance(p, i, q, j, space).distance <= radius) out.emplace_back(i, j);
            }
        });
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

IntersectionReport resolve_candidates(const PeriodicOrbit& a, const Polyline& pa, const PeriodicOrbit* b,
                                      const Polyline* pb, const std::vector<std::pair<int, int>>& candidates,
                                      const Space& space, double tol_space, double tol_angle,
                                      double near_miss_factor) {
    const bool self = b == nullptr;
    const PeriodicOrbit& ob = self ? a : *b;
    const Polyline& qb = self ? pa : *pb;
    const double dta = a.period / pa.size(), dtb = ob.period / qb.size();
    const double hmax = 4.0 * std::max(dta, dtb);
    const double radius = std::max(pa.max_step, qb.max_step);
    const bool brake = self && a.kind == OrbitKind::Brake && !a.rest_points.empty();
    const double r0 = brake ? a.rest_points.front().t : 0.0;
    const double tau = a.period;
    const double cos_tol = std::cos(tol_angle);

    IntersectionReport rep;
    rep.samples_a = pa.size();
    rep.samples_b = qb.size();
    rep.tol_space = tol_space;
    rep.tol_angle = tol_angle;

    // Reversal pairs (s, t) with s + t = 2 r0 (mod tau), stored by the
    // half-offset sigma in [0, tau/2] so that the continuum becomes runs.
    std::vector<double> sigmas;
    auto add_reversal = [&](double s) {
        double sg = wrap_time(s - r0, tau);
        sigmas.push_back(sg > tau / 2 ? tau - sg : sg);
    };
    auto reversal_offset = [&](double s, double t) { return cyclic(s + t - 2.0 * r0, tau); };

    std::vector<Refined> hits, misses;
    for (auto [i, j] : candidates) {
        SegmentDistance sd = segment_distance(pa, i, qb, j, space);
        double s0 = pa.t[i] + sd.a * dta, t0 = qb.t[j] + sd.b * dtb;
        if (brake && reversal_offset(s0, t0) <= 3.0 * dta) {
            add_reversal(s0);
            continue;
        }
        Refined r = refine(a, ob, space, s0, t0, hmax);
        if (self && cyclic(r.s - r.t, tau) <= 1e-9 * tau) {
            // Slid onto the diagonal: nothing certified either way.
            r.converged = false;
            r.gap = sd.distance;
            misses.push_back(r);
            continue;
        }
        if (brake && reversal_offset(r.s, r.t) <= 1e-6 * tau) {
            add_reversal(r.s);
            continue;
        }
        if (r.gap <= tol_space) hits.push_back(r);
        else if (!r.converged || r.gap <= near_miss_factor * tol_space) {
            if (r.gap <= radius) misses.push_back(r);
        }
    }

    auto normalize = [&](Refined& r) {
        if (self && r.s > r.t) std::swap(r.s, r.t);
    };
    auto merge = [&](std::vector<Refined>& v) {
        for (auto& r : v) normalize(r);
        std::sort(v.begin(), v.end(), [](const Refined& x, const Refined& y) {
            return x.s != y.s ? x.s < y.s : x.t < y.t;
        });
        std::vector<Refined> out;
        const double eps = 1e-7 * std::max(tau, ob.period);
        for (const auto& r : v) {
            bool dup = false;
            for (const auto& o : out)
                if (cyclic(o.s - r.s, tau) <= eps && cyclic(o.t - r.t, ob.period) <= eps) {
                    dup = true;
                    break;
                }
            if (!dup) out.push_back(r);
        }
        v = std::move(out);
    };
    merge(hits);
    merge(misses);

    for (const auto& r : hits) {
        Sample x = eval(a, r.s), y = eval(ob, r.t);
        IntersectionPair pr;
        pr.s = r.s;
        pr.t = r.t;
        pr.point = to_eigen(space.wrap(std::span<const double>(x.x.data(), x.x.size())));
        pr.gap = r.gap;
        double nx = x.v.norm(), ny = y.v.norm();
        double c = (nx > 0.0 && ny > 0.0) ? x.v.dot(y.v) / (nx * ny) : 1.0;
        if (c >= cos_tol) pr.kind = IntersectionKind::Tangential;
        else if (c <= -cos_tol) pr.kind = self ? IntersectionKind::Reversal : IntersectionKind::Tangential;
        else pr.kind = IntersectionKind::DoublePoint;
        rep.pairs.push_back(std::move(pr));
    }
    for (const auto& r : misses) rep.near_misses.push_back({r.s, r.t, r.gap, r.converged});

    // Collapse the reversal continuum into runs.
    std::sort(sigmas.begin(), sigmas.end());
    for (std::size_t k = 0; k < sigmas.size();) {
        std::size_t e = k;
        double gap = 0.0;
        while (e + 1 < sigmas.size() && sigmas[e + 1] - sigmas[e] <= 4.0 * dta) ++e;
        for (std::size_t m = k; m <= e; ++m) {
            double sg = sigmas[m];
            gap = std::max(gap, space.distance(std::span<const double>(eval(a, r0 + sg).x.data(), pa.x[0].size()),
                                               std::span<const double>(eval(a, r0 - sg).x.data(), pa.x[0].size())));
        }
        double mid = 0.5 * (sigmas[k] + sigmas[e]);
        IntersectionPair pr;
        pr.s = wrap_time(r0 - mid, tau);
        pr.t = wrap_time(r0 + mid, tau);
        if (pr.s > pr.t) std::swap(pr.s, pr.t);
        VectorXd x = eval(a, pr.s).x;
        pr.point = to_eigen(space.wrap(std::span<const double>(x.data(), x.size())));
        pr.kind = IntersectionKind::Reversal;
        pr.gap = gap;
        rep.pairs.push_back(std::move(pr));
        k = e + 1;
    }

    std::sort(rep.pairs.begin(), rep.pairs.end(), [](const IntersectionPair& x, const IntersectionPair& y) {
        return x.s != y.s ? x.s < y.s : x.t < y.t;
    });
    std::vector<VectorXd> dp_points;
    auto add_point = [&](std::vector<VectorXd>& pts, const VectorXd& x) {
        for (const auto& q : pts)
            if (space.distance(std::span<const double>(q.data(), q.size()), std::span<const double>(x.data(), x.size())) <=
                10.0 * tol_space)
                return;
        pts.push_back(x);
    };
    for (const auto& pr : rep.pairs) {
        switch (pr.kind) {
            case IntersectionKind::DoublePoint: add_point(dp_points, pr.point); break;
            case IntersectionKind::Reversal: ++rep.reversal_count; break;
            case IntersectionKind::Tangential: ++rep.tangential_count; break;
        }
        if (pr.kind != IntersectionKind::Reversal) add_point(rep.points, pr.point);
    }
    rep.dp_count = static_cast<int>(dp_points.size());
    return rep;
}

IntersectionReport self_intersections(const PeriodicOrbit& orbit, const IntersectOptions& opt) {
    const Space& space = orbit.trajectory.space();
    Polyline p = adaptive_polyline(orbit, space, opt);
    const double tol = opt.tol_space ? *opt.tol_space : 1e-6 * p.diameter;
    auto cand = candidate_pairs(p, p, p.max_step, space, true);
    return resolve_candidates(orbit, p, nullptr, nullptr, cand, space, tol, opt.tol_angle, opt.near_miss_factor);
}

IntersectionReport mutual_intersections(const PeriodicOrbit& a, const PeriodicOrbit& b,
                                        const IntersectOptions& opt) {
    const Space& space = a.trajectory.space();
    if (space.periods != b.trajectory.space().periods) throw PreconditionError("orbits live in different charts");
    if (a.trajectory.dimension() != b.trajectory.dimension())
        throw PreconditionError("orbits live in different dimensions");
    Polyline pa = adaptive_polyline(a, space, opt);
    IntersectOptions ob = opt;
    if (!ob.max_step) ob.max_step = pa.diameter / 1000.0;
    Polyline pb = adaptive_polyline(b, space, ob);
    const double diam = std::max(pa.diameter, pb.diameter);
    const double tol = opt.tol_space ? *opt.tol_space : 1e-6 * diam;
    auto cand = candidate_pairs(pa, pb, std::max(pa.max_step, pb.max_step), space, false);
    return resolve_candidates(a, pa, &b, &pb, cand, space, tol, opt.tol_angle, opt.near_miss_factor);
}

}  // namespace jmlab
