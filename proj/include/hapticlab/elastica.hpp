#pragma once

#include "hapticlab/shape_field.hpp"

#include <Eigen/Core>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hapticlab {

struct ElasticaSettings {
  int nodes_per_span = 64;     // segments between consecutive constraints, >= 50
  double tolerance = 1e-9;     // on constraint residuals, relative to the span
  int max_iterations = 600;    // Newton iterations summed over all penalty stages
  double penalty_start = 1e4;  // divided by the length slack when it is below one mean spacing
  double penalty_growth = 10.0;
  double penalty_max = 1e9;

  void validate() const;
};

/// Inextensible polyline through the constraint points with clamped horizontal
/// end tangents. Segment lengths are uniform within each span between
/// consecutive constraints; the constraint points are nodes of the polyline.
struct ElasticaSolution {
  std::vector<Point2> nodes;                // mm
  std::vector<std::size_t> span_first_node;  // node index of each constraint, size = constraints
  std::vector<double> segment_length;       // per span, mm
  double bending_energy = 0;                // Σ Δθ² / h scaled by the chord span (dimensionless)
  double arc_length = 0;                    // mm
  double prescribed_length = 0;             // mm
  Eigen::VectorXd constraint_residuals;     // per constraint distance to the pixel, then length error (mm)
  std::vector<std::vector<double>> objective_history;  // penalised objective per Newton step, one list per stage
  int iterations = 0;

  /// Height of the curve at abscissa x: cubic Hermite in arc length through the nodes.
  /// Where the curve overhangs, the first crossing in arc length wins. Zero outside the curve.
  double height(double x) const;
  double maxResidual() const { return constraint_residuals.size() ? constraint_residuals.cwiseAbs().maxCoeff() : 0.0; }
};

class InfeasibleExcessError : public std::domain_error {
 public:
  InfeasibleExcessError() : std::domain_error("infeasible excess") {}
};

class ElasticaConvergenceError : public std::runtime_error {
 public:
  ElasticaConvergenceError(ElasticaSolution best, double residual)
      : std::runtime_error("elastica solver did not converge (residual " + std::to_string(residual) + ")"),
        best_(std::move(best)),
        residual_(residual) {}
  const ElasticaSolution& best() const { return best_; }
  double residual() const { return residual_; }

 private:
  ElasticaSolution best_;
  double residual_;
};

/// Minimises discrete bending energy over inextensible polylines of length
/// (x_last - x_first) + excess passing through every constraint.
/// Constraints must be sorted by x with at least two entries.
/// `guide`, when given, is a curve y(x) through the constraints used as the
/// starting iterate; otherwise a cubic Hermite interpolant is used.
using GuideCurve = std::function<double(double)>;
ElasticaSolution solveElastica1d(const std::vector<Point2>& constraints, double excess_length,
                                 const ElasticaSettings& settings = {}, const GuideCurve& guide = {});

}  // namespace hapticlab
