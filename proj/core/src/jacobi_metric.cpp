#include "jmlab/jacobi_metric.hpp"

#include <cmath>

namespace jmlab {

namespace {
std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

void check_query(const JacobiMetric& jm, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    if (x.size() != jm.dimension() || v.size() != jm.dimension())
        throw PreconditionError("point/vector dimension does not match the Jacobi metric");
}
}  // namespace

JacobiMetric::JacobiMetric(MetricModel base, Expr potential, double energy, double floor)
    : base_(std::move(base)), potential_(std::move(potential)), energy_(energy) {
    if (!std::isfinite(energy_)) throw PreconditionError("energy must be finite");
    if (potential_.dimension() != base_.dimension())
        throw ModelError("potential dimension does not match the metric");
    if (!potential_.position_only()) throw ModelError("potential must depend on x only");
    floor_ = floor < 0.0 ? 1e-8 * (1.0 + std::abs(energy_)) : floor;
    const int n = base_.dimension();
    Expr psi = Expr::constant(2.0, n) * (Expr::constant(energy_, n) - potential_);
    composed_ = MetricModel::finsler_unchecked(psi * base_.f2(), base_.space());
}

bool JacobiMetric::inside(std::span<const double> x) const {
    try {
        return energy_ - evaluate(potential_, x) > floor_;
    } catch (const DomainError&) {
        return false;
    }
}

double jacobi_F2(const JacobiMetric& jm, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    check_query(jm, x, v);
    return jm.f2<double>(as_span(x), as_span(v));
}

Eigen::VectorXd jacobi_geodesic_coefficients(const JacobiMetric& jm, const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& v) {
    check_query(jm, x, v);
    if (v.squaredNorm() == 0.0) throw PreconditionError("geodesic coefficients need v != 0");
    auto G = jm.geodesic_coefficients<double>(as_span(x), as_span(v));
    return Eigen::Map<Eigen::VectorXd>(G.data(), jm.dimension());
}

Eigen::VectorXd jacobi_geodesic_coefficients_direct(const JacobiMetric& jm, const Eigen::VectorXd& x,
                                                    const Eigen::VectorXd& v) {
    check_query(jm, x, v);
    jm.psi<double>(as_span(x));  // degeneracy guard
    return geodesic_coefficients(jm.composed(), x, v);
}

}  // namespace jmlab
