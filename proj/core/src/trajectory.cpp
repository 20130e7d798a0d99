#include "jmlab/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace jmlab {

Trajectory::Trajectory(int dimension, Space space, std::vector<double> t, std::vector<State> y,
                       std::shared_ptr<const OdeSolution> dense)
    : n_(dimension), space_(std::move(space)), t_(std::move(t)), y_(std::move(y)), dense_(std::move(dense)) {
    if (t_.size() != y_.size()) throw PreconditionError("trajectory times and states differ in length");
    for (std::size_t i = 1; i < t_.size(); ++i)
        if (!(t_[i] > t_[i - 1])) throw PreconditionError("trajectory times must increase strictly");
    for (const auto& s : y_)
        if (static_cast<int>(s.size()) != 2 * n_) throw PreconditionError("trajectory state has wrong size");
}

Eigen::VectorXd Trajectory::x(std::size_t i) const { return Eigen::Map<const Eigen::VectorXd>(y_[i].data(), n_); }

Eigen::VectorXd Trajectory::v(std::size_t i) const {
    return Eigen::Map<const Eigen::VectorXd>(y_[i].data() + n_, n_);
}

State Trajectory::at(double t) const {
    if (t_.empty()) throw PreconditionError("empty trajectory");
    const double slack = 1e-12 * (1.0 + std::abs(t_.back() - t_.front()));
    if (t < t_.front() - slack || t > t_.back() + slack)
        throw PreconditionError("time " + std::to_string(t) + " outside the trajectory");
    t = std::clamp(t, t_.front(), t_.back());
    if (dense_) return dense_->at(t);
    if (interp_) return interp_(t);
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t k = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
    if (k + 1 >= t_.size()) return y_.back();
    double h = t_[k + 1] - t_[k], u = (t - t_[k]) / h;
    double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    const State &a = y_[k], &b = y_[k + 1];
    State out(2 * n_);
    for (int i = 0; i < n_; ++i) {
        out[i] = h00 * a[i] + h10 * h * a[n_ + i] + h01 * b[i] + h11 * h * b[n_ + i];
        out[n_ + i] = (1 - u) * a[n_ + i] + u * b[n_ + i];
    }
    return out;
}

void Trajectory::set_scalar(std::vector<double> h) {
    if (!h.empty() && h.size() != t_.size()) throw PreconditionError("scalar column has wrong length");
    h_ = std::move(h);
}

double Trajectory::drift() const {
    double d = 0.0;
    for (double h : h_) d = std::max(d, std::abs(h - h_.front()));
    return d;
}

void write_csv(const Trajectory& traj, std::ostream& os) {
    const int n = traj.dimension();
    os << "t";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    for (int i = 1; i <= n; ++i) os << ",v" << i;
    os << ",H\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const State& y = traj.states()[k];
        put(traj.times()[k]);
        auto x = traj.space().wrap(std::span<const double>(y.data(), n));
        for (int i = 0; i < n; ++i) {
            os << ',';
            put(x[i]);
        }
        for (int i = 0; i < n; ++i) {
            os << ',';
            put(y[n + i]);
        }
        os << ',';
        put(traj.scalar().empty() ? std::nan("") : traj.scalar()[k]);
        os << '\n';
    }
}

Trajectory resample(const Trajectory& traj, int count) {
    if (count < 2) throw PreconditionError("resample needs at least two samples");
    std::vector<double> t(count);
    std::vector<State> y(count);
    for (int k = 0; k < count; ++k) {
        t[k] = k + 1 == count ? traj.t_end() : traj.t_begin() + (traj.t_end() - traj.t_begin()) * k / (count - 1);
        y[k] = traj.at(t[k]);
    }
    Trajectory out(traj.dimension(), traj.space(), t, y, traj.dense_shared());
    if (!traj.has_dense() && traj.has_interpolant()) out.set_interpolant([traj](double s) { return traj.at(s); });
    out.events = traj.events;
    out.terminated = traj.terminated;
    return out;
}

}  // namespace jmlab
