#pragma once

// Dormand-Prince 5(4) with PI step control, FSAL, 4th-order dense output and
// event location. Integration may run backwards (t1 < t0).

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "jmlab/errors.hpp"

namespace jmlab {

using State = std::vector<double>;
using OdeRhs = std::function<void(double t, const State& y, State& dy)>;

struct Tolerances {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h0 = 0.0;  // 0: automatic initial step
    double hmax = std::numeric_limits<double>::infinity();
    long max_steps = 2'000'000;
};

struct Event {
    std::function<double(double t, const State& y)> fn;
    int direction = 0;  // +1: - to +, -1: + to -, 0: either
    bool terminal = false;
};

struct EventHit {
    int index = 0;
    double t = 0.0;
    State y;
};

/// Interpolant over one accepted step [t0, t0 + h].
struct DenseSegment {
    double t0 = 0.0;
    double h = 0.0;
    std::vector<double> rcont;  // 5 blocks of size dim

    State eval(double t) const;
};

struct OdeSolution {
    int dim = 0;
    std::vector<double> t;        // accepted step ends, t[0] = t0
    std::vector<State> y;
    std::vector<DenseSegment> segments;  // segments[i] covers [t[i], t[i+1]]
    std::vector<EventHit> events;
    bool terminated = false;  // stopped by a terminal event
    long rhs_evals = 0;
    long rejected = 0;

    double t_begin() const { return t.front(); }
    double t_end() const { return t.back(); }
    /// Dense output anywhere in the covered interval.
    State at(double time) const;
};

OdeSolution dopri5(const OdeRhs& f, double t0, State y0, double t1, const Tolerances& tol = {},
                   const std::vector<Event>& events = {});

namespace detail {
namespace dp {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
}  // namespace dp

template <class T, class H>
std::vector<T> axpy_sum(const std::vector<T>& y, const H& h, std::initializer_list<std::pair<double, const std::vector<T>*>> terms) {
    std::vector<T> out(y);
    for (std::size_t i = 0; i < out.size(); ++i) {
        T acc(0.0);
        for (const auto& [c, k] : terms)
            if (c != 0.0) acc += c * (*k)[i];
        out[i] += h * acc;
    }
    return out;
}
}  // namespace detail

/// One fifth-order Dormand-Prince step with step length h (double or dual).
template <class T, class H, class F>
void rk5_step(F& f, std::vector<T>& y, const H& h) {
    using namespace detail::dp;
    using detail::axpy_sum;
    const std::size_t n = y.size();
    std::vector<T> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n);
    f(y, k1);
    f(axpy_sum(y, h, {{a21, &k1}}), k2);
    f(axpy_sum(y, h, {{a31, &k1}, {a32, &k2}}), k3);
    f(axpy_sum(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}), k4);
    f(axpy_sum(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}), k5);
    f(axpy_sum(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}), k6);
    y = axpy_sum(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
}

/// Re-runs the accepted step sequence `nodes` (t_0 < ... < t_k, or
/// decreasing) of an autonomous system with scalar type T, then one last
/// step from t_k to `t_end`. Differentiating the result gives the exact
/// derivative of the discrete flow map, including with respect to t_end.
template <class T, class F>
std::vector<T> rk_replay(F&& f, std::vector<T> y, std::span<const double> nodes, const T& t_end) {
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) rk5_step(f, y, nodes[i + 1] - nodes[i]);
    T h = t_end - nodes.back();
    rk5_step(f, y, h);
    return y;
}

/// Node times of `sol` strictly before `t_end` (in the integration
/// direction), suitable for rk_replay.
std::vector<double> replay_nodes(const OdeSolution& sol, double t_end);

}  // namespace jmlab
