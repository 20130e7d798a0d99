#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "jmlab/geometry.hpp"
#include "jmlab/ode.hpp"

namespace jmlab {

struct PhaseState {
    Eigen::VectorXd x;
    Eigen::VectorXd v;
};

/// Samples (t, x, v) in the covering chart, an optional dense interpolant and
/// a per-sample scalar (total energy for orbits, Fbar^2 for geodesics).
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(int dimension, Space space, std::vector<double> t, std::vector<State> y,
               std::shared_ptr<const OdeSolution> dense = nullptr);

    int dimension() const { return n_; }
    const Space& space() const { return space_; }
    std::size_t size() const { return t_.size(); }
    bool empty() const { return t_.empty(); }
    double t_begin() const { return t_.front(); }
    double t_end() const { return t_.back(); }
    const std::vector<double>& times() const { return t_; }
    const std::vector<State>& states() const { return y_; }
    Eigen::VectorXd x(std::size_t i) const;
    Eigen::VectorXd v(std::size_t i) const;
    bool has_dense() const { return dense_ != nullptr; }
    const OdeSolution* dense() const { return dense_.get(); }
    std::shared_ptr<const OdeSolution> dense_shared() const { return dense_; }
    /// Continuous representation used when there is no integrator output,
    /// e.g. for reparametrized curves.
    using Interpolant = std::function<State(double)>;
    void set_interpolant(Interpolant f) { interp_ = std::move(f); }
    bool has_interpolant() const { return dense_ != nullptr || static_cast<bool>(interp_); }

    /// State at any t in range: the integrator's dense output or the
    /// interpolant when present, otherwise cubic Hermite in x (using v) and
    /// linear in v.
    State at(double t) const;

    const std::vector<double>& scalar() const { return h_; }
    void set_scalar(std::vector<double> h);
    /// max |h(t) - h(t0)| over samples.
    double drift() const;

    std::vector<EventHit> events;
    bool terminated = false;

private:
    int n_ = 0;
    Space space_;
    std::vector<double> t_;
    std::vector<State> y_;
    std::vector<double> h_;
    std::shared_ptr<const OdeSolution> dense_;
    Interpolant interp_;
};

/// Header t,x1..xn,v1..vn,H; 17 significant digits; x wrapped on a torus.
void write_csv(const Trajectory& traj, std::ostream& os);

/// `count` equally spaced samples (count >= 2); the scalar column is dropped.
Trajectory resample(const Trajectory& traj, int count);

}  // namespace jmlab
