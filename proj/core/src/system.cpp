#include "jmlab/system.hpp"

namespace jmlab {

SystemSpec::SystemSpec(MetricModel metric, Potential potential, double energy)
    : metric_(std::move(metric)), potential_(std::move(potential)), energy_(energy) {
    if (!std::isfinite(energy_)) throw PreconditionError("energy must be finite");
    const Expr& u = base_potential();
    if (u.empty()) throw ModelError("potential is missing");
    if (u.dimension() != metric_.dimension()) throw ModelError("potential dimension does not match the metric");
    if (!u.position_only()) throw ModelError("potential must depend on x only");
    if (metric_.space().torus()) check_periodic(u, metric_.space(), "potential");
    if (const auto* p = std::get_if<PerturbedPotential>(&potential_)) {
        if (p->energy != energy_) throw ModelError("perturbed potential was built for a different energy");
        for (const auto& f : p->factors)
            if (!f || f->metric().dimension() != dimension())
                throw ModelError("conformal factor dimension does not match the system");
    }
}

const Expr& SystemSpec::base_potential() const {
    if (const auto* e = std::get_if<Expr>(&potential_)) return *e;
    return std::get<PerturbedPotential>(potential_).base;
}

JacobiMetric SystemSpec::jacobi(double floor) const {
    if (perturbed()) throw PreconditionError("the Jacobi metric object needs an unperturbed potential");
    return JacobiMetric(metric_, base_potential(), energy_, floor);
}

}  // namespace jmlab
