#include "jmlab/ode.hpp"

#include <algorithm>
#include <cmath>

namespace jmlab {

namespace {

namespace dp = detail::dp;

constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double beta = 0.04;
constexpr double expo1 = 0.2 - beta * 0.75;
constexpr double safe = 0.9;
constexpr double facc1 = 1.0 / 0.2;   // largest shrink
constexpr double facc2 = 1.0 / 10.0;  // largest growth

double rms_norm(const State& e, const State& y0, const State& y1, const Tolerances& tol) {
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        double sk = tol.atol + tol.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        double r = e[i] / sk;
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(e.size()));
}

double initial_step(const OdeRhs& f, double t0, const State& y0, const State& f0, double dir,
                    const Tolerances& tol, long& evals) {
    const std::size_t n = y0.size();
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sk = tol.atol + tol.rtol * std::abs(y0[i]);
        dnf += (f0[i] / sk) * (f0[i] / sk);
        dny += (y0[i] / sk) * (y0[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, tol.hmax);
    State y1(n), f1(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + dir * h * f0[i];
    f(t0 + dir * h, y1, f1);
    ++evals;
    double der2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sk = tol.atol + tol.rtol * std::abs(y0[i]);
        double d = (f1[i] - f0[i]) / sk;
        der2 += d * d;
    }
    der2 = std::sqrt(der2) / h;
    double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 1.0 / 5.0);
    return std::min({100.0 * std::abs(h), h1, tol.hmax});
}

bool crosses(double g0, double g1, int direction) {
    bool up = g0 < 0.0 && g1 >= 0.0;
    bool down = g0 > 0.0 && g1 <= 0.0;
    if (direction > 0) return up;
    if (direction < 0) return down;
    return up || down;
}

}  // namespace

State DenseSegment::eval(double time) const {
    const std::size_t n = rcont.size() / 5;
    double theta = h == 0.0 ? 0.0 : (time - t0) / h;
    double theta1 = 1.0 - theta;
    State y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rcont[i] +
               theta * (rcont[n + i] +
                        theta1 * (rcont[2 * n + i] + theta * (rcont[3 * n + i] + theta1 * rcont[4 * n + i])));
    }
    return y;
}

State OdeSolution::at(double time) const {
    if (segments.empty()) return y.front();
    const bool forward = t.back() >= t.front();
    const double lo = forward ? t.front() : t.back(), hi = forward ? t.back() : t.front();
    const double slack = 1e-12 * (1.0 + std::abs(hi - lo));
    if (time < lo - slack || time > hi + slack)
        throw PreconditionError("dense output requested outside the integrated interval");
    // Index of the segment whose interval contains `time`.
    std::size_t idx;
    if (forward) {
        auto it = std::upper_bound(t.begin(), t.end(), time);
        idx = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    } else {
        auto it = std::upper_bound(t.begin(), t.end(), time, [](double a, double b) { return a > b; });
        idx = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    }
    idx = std::min(idx, segments.size() - 1);
    return segments[idx].eval(time);
}

std::vector<double> replay_nodes(const OdeSolution& sol, double t_end) {
    const double dir = sol.t.back() >= sol.t.front() ? 1.0 : -1.0;
    std::vector<double> nodes{sol.t.front()};
    for (std::size_t i = 1; i < sol.t.size(); ++i) {
        if (dir * (t_end - sol.t[i]) > 1e-9 * (1.0 + std::abs(t_end))) nodes.push_back(sol.t[i]);
        else break;
    }
    return nodes;
}

OdeSolution dopri5(const OdeRhs& f, double t0, State y0, double t1, const Tolerances& tol,
                   const std::vector<Event>& events) {
    using namespace dp;
    if (!(tol.rtol >= 1e-13) || !(tol.atol > 0.0)) throw PreconditionError("tolerances out of range (rtol >= 1e-13)");
    const std::size_t n = y0.size();
    OdeSolution sol;
    sol.dim = static_cast<int>(n);
    sol.t.push_back(t0);
    sol.y.push_back(y0);
    if (t1 == t0) return sol;
    for (double c : y0)
        if (!std::isfinite(c)) throw IntegrationError("non-finite initial state", t0, y0);

    const double dir = t1 > t0 ? 1.0 : -1.0;
    State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n), err(n);
    f(t0, y0, k1);
    ++sol.rhs_evals;
    double h = tol.h0 > 0.0 ? std::min(tol.h0, tol.hmax) : initial_step(f, t0, y0, k1, dir, tol, sol.rhs_evals);
    h *= dir;

    std::vector<double> gprev(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) gprev[e] = events[e].fn(t0, y0);

    double t = t0;
    State y = y0;
    double facold = 1e-4;
    bool last_rejected = false;
    long steps = 0;

    auto stage = [&](double ci, std::initializer_list<std::pair<double, const State*>> terms, State& out) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (const auto& [c, k] : terms) acc += c * (*k)[i];
            ytmp[i] = y[i] + h * acc;
        }
        f(t + ci * h, ytmp, out);
        ++sol.rhs_evals;
    };

    for (;;) {
        if (++steps > tol.max_steps) throw IntegrationError("maximum number of steps exceeded", t, y);
        if (std::abs(h) < 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw IntegrationError("step size underflow", t, y);
        bool final_step = false;
        if (dir * (t + 1.01 * h - t1) >= 0.0) {
            h = t1 - t;
            final_step = true;
        }
        stage(c2, {{a21, &k1}}, k2);
        stage(c3, {{a31, &k1}, {a32, &k2}}, k3);
        stage(c4, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, k4);
        stage(c5, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, k5);
        stage(1.0, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, k6);
        for (std::size_t i = 0; i < n; ++i)
            y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        f(t + h, y1, k7);
        ++sol.rhs_evals;
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            finite = finite && std::isfinite(y1[i]) && std::isfinite(err[i]);
        }
        double errn = finite ? rms_norm(err, y, y1, tol) : 1e10;
        double fac11 = std::pow(errn, expo1);
        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(facc2, std::min(facc1, fac / safe));
        double hnew = h / fac;

        if (errn > 1.0) {
            hnew = h / std::min(facc1, fac11 / safe);
            if (!finite) hnew = 0.1 * h;
            last_rejected = true;
            ++sol.rejected;
            h = hnew;
            continue;
        }

        // Accepted.
        facold = std::max(errn, 1e-4);
        DenseSegment seg;
        seg.t0 = t;
        seg.h = h;
        seg.rcont.resize(5 * n);
        for (std::size_t i = 0; i < n; ++i) {
            double ydiff = y1[i] - y[i];
            double bspl = h * k1[i] - ydiff;
            seg.rcont[i] = y[i];
            seg.rcont[n + i] = ydiff;
            seg.rcont[2 * n + i] = bspl;
            seg.rcont[3 * n + i] = ydiff - h * k7[i] - bspl;
            seg.rcont[4 * n + i] =
                h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        double tnew = final_step ? t1 : t + h;

        // Event location: earliest sign change in this step.
        int hit = -1;
        double thit = 0.0;
        std::vector<double> gnew(events.size());
        for (std::size_t e = 0; e < events.size(); ++e) {
            gnew[e] = events[e].fn(tnew, y1);
            if (!crosses(gprev[e], gnew[e], events[e].direction)) continue;
            double a = t, b = tnew, ga = gprev[e];
            while (std::abs(b - a) > 1e-12 * std::max(1.0, std::abs(b))) {
                double m = 0.5 * (a + b);
                double gm = events[e].fn(m, seg.eval(m));
                if (crosses(ga, gm, events[e].direction) || (gm == 0.0 && ga != 0.0)) {
                    b = m;
                } else {
                    a = m;
                    ga = gm;
                }
            }
            double te = b;
            EventHit eh{static_cast<int>(e), te, seg.eval(te)};
            if (events[e].terminal && (hit < 0 || dir * (te - thit) < 0.0)) {
                hit = static_cast<int>(e);
                thit = te;
            }
            sol.events.push_back(std::move(eh));
        }
        if (hit >= 0) {
            // Drop non-terminal hits recorded after the terminal one.
            sol.events.erase(std::remove_if(sol.events.begin(), sol.events.end(),
                                            [&](const EventHit& eh) { return dir * (eh.t - thit) > 0.0; }),
                             sol.events.end());
            sol.segments.push_back(seg);
            sol.t.push_back(thit);
            sol.y.push_back(seg.eval(thit));
            sol.terminated = true;
            return sol;
        }
        std::stable_sort(sol.events.begin(), sol.events.end(),
                         [&](const EventHit& a, const EventHit& b) { return dir * (a.t - b.t) < 0.0; });
        gprev = gnew;
        sol.segments.push_back(std::move(seg));
        sol.t.push_back(tnew);
        sol.y.push_back(y1);
        y = y1;
        k1 = k7;
        t = tnew;
        if (final_step) return sol;
        if (std::abs(hnew) > tol.hmax) hnew = dir * tol.hmax;
        if (last_rejected) hnew = dir * std::min(std::abs(hnew), std::abs(h));
        last_rejected = false;
        h = hnew;
    }
}

}  // namespace jmlab
