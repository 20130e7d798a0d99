#include "jmlab/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "jmlab/ode.hpp"

namespace jmlab {

namespace {

using Eigen::VectorXd;

std::span<const double> as_span(const VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Eigen::MatrixXd gbar_at(const JacobiMetric& jm, std::span<const double> x, std::span<const double> v) {
    const int n = jm.dimension();
    double psi = jm.psi(x);
    auto g = kernel::metric(jm.base(), x, v);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = psi * g[i * n + j];
    return M;
}

// Nodes on [-2 eta, 2 eta] containing the cut-off breakpoints, spacing <= eps/8.
std::vector<double> tube_nodes(double eta, double eps) {
    const double b[] = {-2 * eta, -eta - 4 * eps, -eta - 2 * eps, 0.0, eta + 2 * eps, eta + 4 * eps, 2 * eta};
    const double h = eps / 8.0;
    std::vector<double> t{b[0]};
    for (int k = 0; k + 1 < 7; ++k) {
        int m = std::max(1, static_cast<int>(std::ceil((b[k + 1] - b[k]) / h - 1e-9)));
        for (int i = 1; i <= m; ++i) t.push_back(i == m ? b[k + 1] : b[k] + (b[k + 1] - b[k]) * i / m);
    }
    return t;
}

struct NodeData {
    std::vector<std::vector<double>> x, dx, ddx;
};

// Unit-speed Fbar geodesic through p with direction v, sampled at `nodes`
// (which straddle 0).
NodeData geodesic_nodes(const JacobiMetric& jm, const VectorXd& p, const VectorXd& v,
                        const std::vector<double>& nodes) {
    const int n = jm.dimension();
    double speed = std::sqrt(jm.f2<double>(as_span(p), as_span(v)));
    if (!(speed > 0.0)) throw PerturbationError("zero initial velocity for the tube geodesic");
    State y0(2 * n);
    for (int i = 0; i < n; ++i) {
        y0[i] = p[i];
        y0[n + i] = v[i] / speed;
    }
    auto rhs = [&](double, const State& y, State& dy) {
        std::span<const double> x(y.data(), n), w(y.data() + n, n);
        auto G = jm.geodesic_coefficients(x, w);
        for (int i = 0; i < n; ++i) {
            dy[i] = y[n + i];
            dy[n + i] = -2.0 * G[i];
        }
    };
    Tolerances tol;
    tol.rtol = 1e-12;
    tol.atol = 1e-14;
    OdeSolution fwd = dopri5(rhs, 0.0, y0, nodes.back(), tol);
    OdeSolution bwd = dopri5(rhs, 0.0, y0, nodes.front(), tol);
    NodeData d;
    for (double t : nodes) {
        State y = t >= 0.0 ? fwd.at(t) : bwd.at(t);
        State dy(2 * n);
        rhs(t, y, dy);
        d.x.emplace_back(y.begin(), y.begin() + n);
        d.dx.emplace_back(y.begin() + n, y.end());
        d.ddx.emplace_back(dy.begin() + n, dy.end());
    }
    return d;
}

}  // namespace

QuinticSpline::QuinticSpline(std::vector<double> t, std::vector<std::vector<double>> x,
                             std::vector<std::vector<double>> dx, std::vector<std::vector<double>> ddx)
    : t_(std::move(t)), x_(std::move(x)) {
    if (t_.size() < 2 || x_.size() != t_.size() || dx.size() != t_.size() || ddx.size() != t_.size())
        throw PreconditionError("spline needs at least two nodes with matching data");
    dim_ = static_cast<int>(x_[0].size());
    coef_.resize((t_.size() - 1) * 6 * dim_);
    for (std::size_t k = 0; k + 1 < t_.size(); ++k) {
        double h = t_[k + 1] - t_[k];
        if (!(h > 0.0)) throw PreconditionError("spline nodes must increase");
        for (int i = 0; i < dim_; ++i) {
            double p0 = x_[k][i], p1 = x_[k + 1][i];
            double m0 = h * dx[k][i], m1 = h * dx[k + 1][i];
            double a0 = h * h * ddx[k][i], a1 = h * h * ddx[k + 1][i];
            double* c = &coef_[(k * dim_ + i) * 6];
            c[0] = p0;
            c[1] = m0;
            c[2] = 0.5 * a0;
            c[3] = -10 * p0 - 6 * m0 - 1.5 * a0 + 0.5 * a1 - 4 * m1 + 10 * p1;
            c[4] = 15 * p0 + 8 * m0 + 1.5 * a0 - a1 + 7 * m1 - 15 * p1;
            c[5] = -6 * p0 - 3 * m0 - 0.5 * a0 + 0.5 * a1 - 3 * m1 + 6 * p1;
        }
    }
}

std::size_t QuinticSpline::segment(double t) const {
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t k = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
    return std::min(k, t_.size() - 2);
}

std::array<double, 3> smoothstep(double u) {
    if (u <= 0.0) return {0.0, 0.0, 0.0};
    if (u >= 1.0) return {1.0, 0.0, 0.0};
    double u2 = u * u;
    return {u2 * u * (10.0 + u * (-15.0 + 6.0 * u)), 30.0 * u2 * (1.0 - u) * (1.0 - u),
            60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)};
}

std::array<double, 3> cutoff_alpha(double t, double eta, double eps) {
    double a = std::abs(t);
    double sgn = t < 0.0 ? -1.0 : 1.0;
    auto s = smoothstep((a - eta - 2.0 * eps) / (2.0 * eps));
    double k = 1.0 / (2.0 * eps);
    return {1.0 - s[0], -sgn * k * s[1], -k * k * s[2]};
}

TubeFrame TubeFrame::build(const JacobiMetric& jm, const VectorXd& p, const VectorXd& v, double eta, double eps,
                           std::optional<VectorXd> displacement) {
    const int n = jm.dimension();
    if (!jm.base().riemannian())
        throw PerturbationError("tube construction needs a riemannian kinetic model");
    if (n < 2) throw PerturbationError("tube construction needs dimension >= 2");
    if (!(eps > 0.0) || !(7.0 * eps < eta)) throw PerturbationError("tube parameters must satisfy 0 < 7 eps < eta");
    if (p.size() != n || v.size() != n) throw PreconditionError("tube seed has wrong dimension");
    if (!jm.inside(as_span(p))) throw PerturbationError("tube center lies outside the Hill region interior");
    TubeFrame tube(jm);
    tube.eta_ = eta;
    tube.eps_ = eps;
    auto nodes = tube_nodes(eta, eps);
    NodeData d = geodesic_nodes(jm, p, v, nodes);
    tube.center_ = QuinticSpline(nodes, d.x, d.dx, d.ddx);

    VectorXd u = v.normalized();
    if (displacement) {
        if (displacement->size() != n) throw PreconditionError("displacement direction has wrong dimension");
        tube.d_ = *displacement;
    } else {
        int best = 0;
        for (int i = 1; i < n; ++i)
            if (std::abs(u[i]) < std::abs(u[best])) best = i;
        tube.d_ = VectorXd::Unit(n, best);
    }
    VectorXd dn = tube.d_.normalized();
    if ((dn - dn.dot(u) * u).norm() < 1e-6) throw PerturbationError("displacement direction is tangent to the curve");

    double overlap = tube.overlap_distance();
    if (overlap < eps / 10.0)
        throw PerturbationError("tube self-overlap: distinct tube points " + std::to_string(overlap) + " apart");
    return tube;
}

std::vector<VectorXd> TubeFrame::frame(double t) const {
    const int n = dimension();
    auto c = center_.eval(t, 1);
    Eigen::MatrixXd g = gbar_at(jm_, c[0], c[1]);
    auto ip = [&](const VectorXd& a, const VectorXd& b) { return a.dot(g * b); };
    std::vector<VectorXd> basis;
    VectorXd tan = Eigen::Map<const VectorXd>(c[1].data(), n);
    basis.push_back(tan / std::sqrt(ip(tan, tan)));
    std::vector<VectorXd> candidates{d_};
    for (int i = 0; i < n; ++i) candidates.push_back(VectorXd::Unit(n, i));
    std::vector<VectorXd> normals;
    for (const auto& cand : candidates) {
        if (static_cast<int>(normals.size()) == n - 1) break;
        VectorXd w = cand;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) w -= ip(b, w) * b;
        double len = std::sqrt(std::max(ip(w, w), 0.0));
        if (len < 1e-8 * std::sqrt(ip(cand, cand))) continue;
        w /= len;
        basis.push_back(w);
        normals.push_back(w);
    }
    return normals;
}

VectorXd TubeFrame::xi(double t, std::span<const double> u) const {
    const int n = dimension();
    auto c = center_.eval(t, 0);
    VectorXd x = Eigen::Map<const VectorXd>(c[0].data(), n);
    auto w = frame(t);
    for (std::size_t k = 0; k < u.size() && k < w.size(); ++k) x += u[k] * w[k];
    return x;
}

std::pair<double, std::vector<double>> TubeFrame::inverse(const VectorXd& x) const {
    const int n = dimension();
    // x lies in the affine normal plane at c(t) iff gbar(c'(t), x - c(t)) = 0.
    auto defect = [&](double t) {
        auto c = center_.eval(t, 1);
        VectorXd cv = Eigen::Map<const VectorXd>(c[1].data(), n);
        VectorXd r = x - Eigen::Map<const VectorXd>(c[0].data(), n);
        return cv.dot(gbar_at(jm_, c[0], c[1]) * r);
    };
    const auto& t = center_.nodes();
    std::size_t best = 0;
    double bestd = 1e300;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& c = center_.node_value(i);
        double dd = 0.0;
        for (int k = 0; k < n; ++k) dd += (x[k] - c[k]) * (x[k] - c[k]);
        if (dd < bestd) {
            bestd = dd;
            best = i;
        }
    }
    double a = t[best > 0 ? best - 1 : 0], b = t[std::min(best + 1, t.size() - 1)];
    double fa = defect(a), fb = defect(b);
    if (fa * fb > 0.0) throw PerturbationError("point is outside the tube's local chart");
    for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
        double m = 0.5 * (a + b), fm = defect(m);
        if (fa * fm <= 0.0) {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    double ts = 0.5 * (a + b);
    auto c = center_.eval(ts, 1);
    Eigen::MatrixXd g = gbar_at(jm_, c[0], c[1]);
    VectorXd r = x - Eigen::Map<const VectorXd>(c[0].data(), n);
    std::vector<double> u;
    for (const auto& w : frame(ts)) u.push_back(w.dot(g * r));
    return {ts, u};
}

double TubeFrame::overlap_distance() const {
    const int n = dimension();
    struct Sample {
        double t;
        VectorXd x;
    };
    std::vector<Sample> pts;
    const auto& t = center_.nodes();
    for (std::size_t i = 0; i < t.size(); i += 2) {
        auto w = frame(t[i]);
        auto c = center_.eval(t[i], 0);
        VectorXd base = Eigen::Map<const VectorXd>(c[0].data(), n);
        pts.push_back({t[i], base});
        for (const auto& wk : w)
            for (double r : {-1.0, -0.5, 0.5, 1.0}) pts.push_back({t[i], base + r * eps_ * wk});
    }
    // Hash grid with cell eps/10; only neighboring cells can hold close pairs.
    const double cell = eps_ / 10.0;
    auto key = [&](const VectorXd& x, const std::vector<long>& off) {
        std::size_t h = 1469598103934665603ull;
        for (int k = 0; k < n; ++k) {
            long c = static_cast<long>(std::floor(x[k] / cell)) + (off.empty() ? 0 : off[k]);
            h = (h ^ static_cast<std::size_t>(c)) * 1099511628211ull;
        }
        return h;
    };
    std::unordered_map<std::size_t, std::vector<std::size_t>> grid;
    for (std::size_t i = 0; i < pts.size(); ++i) grid[key(pts[i].x, {})].push_back(i);
    double best = std::numeric_limits<double>::infinity();
    std::vector<long> off(n, -1);
    int combos = 1;
    for (int k = 0; k < n; ++k) combos *= 3;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (int c = 0; c < combos; ++c) {
            int r = c;
            for (int k = 0; k < n; ++k) {
                off[k] = r % 3 - 1;
                r /= 3;
            }
            auto it = grid.find(key(pts[i].x, off));
            if (it == grid.end()) continue;
            for (std::size_t j : it->second) {
                if (j <= i || std::abs(pts[i].t - pts[j].t) <= 3.0 * eps_) continue;
                best = std::min(best, (pts[i].x - pts[j].x).norm());
            }
        }
    }
    return best;
}

QuinticSpline displaced_curve(const TubeFrame& tube, double s) {
    const double eps = tube.eps(), eta = tube.eta();
    if (!(s >= 0.0) || !(s <= eps / 2.0)) throw PerturbationError("displacement s must satisfy 0 <= s <= eps/2");
    const int n = tube.dimension();
    const auto& nodes = tube.nodes();
    const QuinticSpline& c = tube.center();
    std::vector<std::vector<double>> x, dx, ddx;
    NodeData hat;
    if (s > 0.0) {
        auto c0 = c.eval(0.0, 1);
        VectorXd q = Eigen::Map<const VectorXd>(c0[0].data(), n) + s * tube.frame(0.0)[0];
        VectorXd v = Eigen::Map<const VectorXd>(c0[1].data(), n);
        if (!tube.metric().inside(as_span(q))) throw PerturbationError("displaced start leaves the Hill region");
        hat = geodesic_nodes(tube.metric(), q, v, nodes);
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        auto g = c.eval(nodes[k], 2);
        if (s == 0.0) {
            x.push_back(g[0]);
            dx.push_back(g[1]);
            ddx.push_back(g[2]);
            continue;
        }
        auto a = cutoff_alpha(nodes[k], eta, eps);
        std::vector<double> p(n), dp(n), ddp(n);
        for (int i = 0; i < n; ++i) {
            double D = hat.x[k][i] - g[0][i];
            double dD = hat.dx[k][i] - g[1][i];
            double ddD = hat.ddx[k][i] - g[2][i];
            p[i] = g[0][i] + a[0] * D;
            dp[i] = g[1][i] + a[1] * D + a[0] * dD;
            ddp[i] = g[2][i] + a[2] * D + 2.0 * a[1] * dD + a[0] * ddD;
        }
        x.push_back(p);
        dx.push_back(dp);
        ddx.push_back(ddp);
    }
    return QuinticSpline(nodes, x, dx, ddx);
}

ConformalFactor::ConformalFactor(JacobiMetric jm, QuinticSpline curve, double eta, double eps, double rho)
    : jm_(std::move(jm)), curve_(std::move(curve)), eta_(eta), eps_(eps), rho_(rho) {
    if (!jm_.base().riemannian()) throw PerturbationError("conformal factor needs a riemannian kinetic model");
    if (!(rho_ > 0.0) || rho_ > eps_) throw PerturbationError("extension radius must satisfy 0 < rho <= eps");
    const int n = jm_.dimension();
    box_lo_.assign(n, std::numeric_limits<double>::infinity());
    box_hi_.assign(n, -std::numeric_limits<double>::infinity());
    const auto& t = curve_.nodes();
    for (std::size_t k = 0; k < t.size(); ++k) {
        double a = std::abs(t[k]);
        if (a < eta_ + 2.0 * eps_ - 1e-12 || a > eta_ + 4.0 * eps_ + 1e-12) continue;
        const auto& x = curve_.node_value(k);
        for (int i = 0; i < n; ++i) {
            box_lo_[i] = std::min(box_lo_[i], x[i]);
            box_hi_[i] = std::max(box_hi_[i], x[i]);
        }
    }
    // Node spacing is eps/8, so curve points between nodes stay within the
    // node box padded by the chord sagitta; rho covers the tube.
    for (int i = 0; i < n; ++i) {
        box_lo_[i] -= 1.5 * rho_;
        box_hi_[i] += 1.5 * rho_;
    }
}

bool ConformalFactor::near_box(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < box_lo_[i] || x[i] > box_hi_[i]) return false;
    return true;
}

std::pair<double, double> ConformalFactor::nearest(std::span<const double> x) const {
    const int n = jm_.dimension();
    const auto& t = curve_.nodes();
    std::size_t best = 0;
    double bestd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto& c = curve_.node_value(k);
        double dd = 0.0;
        for (int i = 0; i < n; ++i) dd += (x[i] - c[i]) * (x[i] - c[i]);
        if (dd < bestd) {
            bestd = dd;
            best = k;
        }
    }
    auto h = [&](double s) {
        auto c = curve_.eval(s, 2);
        double f = 0.0, df = 0.0;
        for (int i = 0; i < n; ++i) {
            double r = x[i] - c[0][i];
            f += r * c[1][i];
            df += r * c[2][i] - c[1][i] * c[1][i];
        }
        return std::pair{f, df};
    };
    auto dist2 = [&](double s) {
        auto c = curve_.eval(s, 0);
        double dd = 0.0;
        for (int i = 0; i < n; ++i) dd += (x[i] - c[0][i]) * (x[i] - c[0][i]);
        return dd;
    };
    // Minimize over the two segments adjacent to the closest node.
    double best_t = t[best], best_d = bestd;
    for (int side = 0; side < 2; ++side) {
        if ((side == 0 && best == 0) || (side == 1 && best + 1 >= t.size())) continue;
        double a = side == 0 ? t[best - 1] : t[best];
        double b = side == 0 ? t[best] : t[best + 1];
        double fa = h(a).first, fb = h(b).first;
        // h = -(1/2) d/dt |x - c|^2: an interior minimum needs h(a) > 0 > h(b).
        if (!(fa > 0.0 && fb < 0.0)) continue;
        double s = 0.5 * (a + b);
        for (int it = 0; it < 60; ++it) {
            auto [f, df] = h(s);
            if (f > 0.0) a = s; else b = s;
            double next = df < 0.0 ? s - f / df : 0.5 * (a + b);
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            if (std::abs(next - s) <= 1e-16 * (1.0 + std::abs(s))) {
                s = next;
                break;
            }
            s = next;
        }
        double d = dist2(s);
        if (d < best_d) {
            best_d = d;
            best_t = s;
        }
    }
    return {best_t, best_d};
}

}  // namespace jmlab
