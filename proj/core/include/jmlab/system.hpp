#pragma once

// A Lagrangian system of classical type: L = F^2/2 - U(x) at energy E.

#include <memory>
#include <variant>
#include <vector>

#include "jmlab/conformal.hpp"
#include "jmlab/geometry.hpp"

namespace jmlab {

/// U~ = (1 - exp(sum phi)) E + exp(sum phi) U, so that
/// 2(E - U~) F^2 = exp(sum phi) 2(E - U) F^2.
struct PerturbedPotential {
    Expr base;
    double energy = 0.0;
    std::vector<std::shared_ptr<const ConformalFactor>> factors;
};

using Potential = std::variant<Expr, PerturbedPotential>;

class SystemSpec {
public:
    SystemSpec(MetricModel metric, Potential potential, double energy);

    const MetricModel& metric() const { return metric_; }
    const Potential& potential() const { return potential_; }
    /// The expression part of the potential (U itself, or the unperturbed U).
    const Expr& base_potential() const;
    bool perturbed() const { return std::holds_alternative<PerturbedPotential>(potential_); }
    double energy() const { return energy_; }
    int dimension() const { return metric_.dimension(); }
    const Space& space() const { return metric_.space(); }

    /// Jacobi metric at the system energy; needs an unperturbed potential.
    JacobiMetric jacobi(double floor = -1.0) const;

    template <class T>
    T potential_value(std::span<const T> x) const {
        if (const auto* e = std::get_if<Expr>(&potential_)) return evaluate(*e, x);
        const auto& p = std::get<PerturbedPotential>(potential_);
        T u = evaluate(p.base, x);
        if (p.factors.empty()) return u;
        T phi(0.0);
        for (const auto& f : p.factors) phi += f->eval(x);
        using std::exp;
        // Same as E + exp(phi) (U - E), but exactly U where phi = 0.
        return u + (exp(phi) - 1.0) * (u - p.energy);
    }

    /// U and its gradient.
    template <class T>
    std::pair<T, std::vector<T>> potential_jet(std::span<const T> x) const {
        const int n = dimension();
        using D = Dual<T>;
        std::vector<D> xs(n);
        for (int k = 0; k < n; ++k) xs[k] = D::variable(x[k], n, k);
        D u = potential_value<D>(std::span<const D>(xs));
        std::vector<T> g(n);
        for (int k = 0; k < n; ++k) g[k] = u.deriv(k);
        return {u.val, g};
    }

private:
    MetricModel metric_;
    Potential potential_;
    double energy_;
};

}  // namespace jmlab
