#include "jmlab/reference.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace jmlab {

OscillatorSpec::OscillatorSpec(std::vector<double> a, double e, std::optional<Resonance> r)
    : alpha(std::move(a)), energy(e), resonance(std::move(r)) {
    if (alpha.empty()) throw PreconditionError("oscillator needs at least one frequency");
    for (double x : alpha)
        if (!(x > 0.0) || !std::isfinite(x)) throw PreconditionError("oscillator frequencies must be positive");
    if (!(energy > 0.0) || !std::isfinite(energy)) throw PreconditionError("oscillator energy must be positive");
    if (resonance) {
        if (resonance->m.size() != alpha.size() || !(resonance->base > 0.0))
            throw PreconditionError("resonance needs one multiplier per frequency and a positive base");
        for (std::size_t i = 0; i < alpha.size(); ++i)
            if (std::abs(alpha[i] - resonance->m[i] * resonance->base) > 1e-12)
                throw PreconditionError("declared resonance does not hold for alpha_" + std::to_string(i + 1));
    }
}

SystemSpec oscillator_system(const OscillatorSpec& osc) {
    const int n = osc.dimension();
    std::string u;
    char buf[64];
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%s%.17g*x%d^2", i ? " + " : "", 0.5 * osc.alpha[i] * osc.alpha[i], i + 1);
        u += buf;
    }
    return SystemSpec(MetricModel::euclidean(n), parse(u, n), osc.energy);
}

double brake_period(const OscillatorSpec& osc, int j) { return 2.0 * std::numbers::pi / osc.alpha.at(j); }

double brake_amplitude(const OscillatorSpec& osc, int j) { return std::sqrt(2.0 * osc.energy) / osc.alpha.at(j); }

PhaseState brake_orbit_closed_form(const OscillatorSpec& osc, int j, double t) {
    const int n = osc.dimension();
    if (j < 0 || j >= n) throw PreconditionError("brake orbit axis out of range");
    PhaseState s{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    double a = osc.alpha[j], r = std::sqrt(2.0 * osc.energy);
    s.x[j] = r / a * std::sin(a * t);
    s.v[j] = r * std::cos(a * t);
    return s;
}

Eigen::VectorXd jacobi_field_closed_form(const OscillatorSpec& osc, const Eigen::VectorXd& v0,
                                         const Eigen::VectorXd& vdot0, double t) {
    const int n = osc.dimension();
    if (v0.size() != n || vdot0.size() != n) throw PreconditionError("Jacobi field data has wrong dimension");
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
        double a = osc.alpha[i];
        v[i] = v0[i] * std::cos(a * t) + vdot0[i] / a * std::sin(a * t);
    }
    return v;
}

namespace {
const Resonance& two_frequency(const OscillatorSpec& osc) {
    if (!osc.resonance || osc.dimension() < 2) throw PreconditionError("Lissajous family needs a declared resonance");
    return *osc.resonance;
}
}  // namespace

PhaseState lissajous_state(const OscillatorSpec& osc, double a1, double a2, double s, double t) {
    const auto& r = two_frequency(osc);
    const int n = osc.dimension();
    PhaseState st{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    double w1 = r.m[0] * r.base, w2 = r.m[1] * r.base;
    st.x[0] = a1 * std::cos(w1 * t - s);
    st.v[0] = -a1 * w1 * std::sin(w1 * t - s);
    st.x[1] = a2 * std::cos(w2 * t);
    st.v[1] = -a2 * w2 * std::sin(w2 * t);
    return st;
}

double lissajous_energy(const OscillatorSpec& osc, double a1, double a2) {
    two_frequency(osc);
    return 0.5 * (osc.alpha[0] * osc.alpha[0] * a1 * a1 + osc.alpha[1] * osc.alpha[1] * a2 * a2);
}

double lissajous_period(const OscillatorSpec& osc) { return 2.0 * std::numbers::pi / two_frequency(osc).base; }

}  // namespace jmlab
