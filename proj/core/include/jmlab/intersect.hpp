#pragma once

// Self- and mutual intersections of periodic orbits: spatial-hash candidate
// detection on a sampled polyline, refinement on the dense orbit, and
// classification into double points, reversals and tangential contacts.

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "jmlab/orbits.hpp"

namespace jmlab {

enum class IntersectionKind { DoublePoint, Reversal, Tangential };

const char* to_string(IntersectionKind k);

struct IntersectionPair {
    double s = 0.0;  // parameter on the first orbit
    double t = 0.0;  // parameter on the second orbit (or the same one)
    Eigen::VectorXd point;
    IntersectionKind kind = IntersectionKind::DoublePoint;
    double gap = 0.0;  // distance at the refined pair; for a reversal run the max over the run
};

/// Candidates whose refinement ends between tol_space and the detection
/// radius, or does not converge. Neither confirmed nor excluded.
struct NearMiss {
    double s = 0.0, t = 0.0;
    double gap = 0.0;
    bool converged = false;
};

struct IntersectionReport {
    std::vector<IntersectionPair> pairs;  // sorted by (s, t)
    std::vector<NearMiss> near_misses;
    std::vector<Eigen::VectorXd> points;  // distinct non-reversal intersection points
    int dp_count = 0;  // distinct double points, not pairs
    int reversal_count = 0;
    int tangential_count = 0;
    int samples_a = 0, samples_b = 0;
    double tol_space = 0.0, tol_angle = 0.0;

    bool ambiguous() const { return tangential_count > 0 || !near_misses.empty(); }
};

struct IntersectOptions {
    std::optional<double> tol_space;  // default 1e-6 * diameter
    double tol_angle = 1e-3;
    std::optional<double> max_step;   // polyline segment length; default diameter / 1000
    int min_samples = 2000;
    int max_samples = 1 << 21;
    double near_miss_factor = 100.0;  // gaps up to this * tol_space are near misses
};

/// Uniform-in-time closed polyline through an orbit. Positions are in the
/// covering space; segment k runs from x[k] to x[k] + step[k].
struct Polyline {
    double period = 0.0;
    std::vector<double> t;
    std::vector<Eigen::VectorXd> x;
    std::vector<Eigen::VectorXd> step;
    std::vector<double> arc;  // arc[k]: polyline length from x[0] to x[k]; arc[N] = total
    double max_step = 0.0;
    double diameter = 0.0;

    int size() const { return static_cast<int>(t.size()); }
};

Polyline sample_polyline(const PeriodicOrbit& orbit, const Space& space, int samples);

/// Samples until every segment is shorter than the step bound.
Polyline adaptive_polyline(const PeriodicOrbit& orbit, const Space& space, const IntersectOptions& opt);

struct SegmentDistance {
    double distance = 0.0;
    double a = 0.0, b = 0.0;  // closest-point fractions along the two segments
};

/// Distance between segment i of `p` and segment j of `q`, minimal image on the torus.
SegmentDistance segment_distance(const Polyline& p, int i, const Polyline& q, int j, const Space& space);

/// For self-pairs (`same` true): i < j and the shorter polyline arc between
/// the two segments exceeds 2 * radius, so neighbours along the curve are
/// not candidates.
bool admissible_self_pair(const Polyline& p, int i, int j, double radius);

/// Segment pairs within `radius`, found through a uniform hash grid with cell
/// size >= radius. Sorted, unique.
std::vector<std::pair<int, int>> candidate_pairs(const Polyline& p, const Polyline& q, double radius, const Space& space,
                                                 bool same);

/// Refines and classifies candidate segment pairs; `b` is null for self-intersections.
IntersectionReport resolve_candidates(const PeriodicOrbit& a, const Polyline& pa, const PeriodicOrbit* b,
                                      const Polyline* pb, const std::vector<std::pair<int, int>>& candidates,
                                      const Space& space, double tol_space, double tol_angle,
                                      double near_miss_factor = 100.0);

/// The orbit's chart (R^n or torus) comes from its trajectory.
IntersectionReport self_intersections(const PeriodicOrbit& orbit, const IntersectOptions& opt = {});

IntersectionReport mutual_intersections(const PeriodicOrbit& a, const PeriodicOrbit& b,
                                        const IntersectOptions& opt = {});

}  // namespace jmlab
