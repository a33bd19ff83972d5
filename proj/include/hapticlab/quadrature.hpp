#pragma once

#include <Eigen/Core>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <stdexcept>

namespace hapticlab {

/// Composite Simpson weights for `intervals` equal panels (intervals must be even).
/// Weights already include the panel width.
inline Eigen::VectorXd simpsonWeights(int intervals, double a, double b) {
  if (intervals < 2 || intervals % 2 != 0) throw std::invalid_argument("simpson needs an even number of intervals");
  Eigen::VectorXd w(intervals + 1);
  for (int i = 0; i <= intervals; ++i) w[i] = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
  return w * ((b - a) / (3.0 * intervals));
}

template <typename F>
double simpson(F&& f, double a, double b, int intervals) {
  const Eigen::VectorXd w = simpsonWeights(intervals, a, b);
  const double h = (b - a) / intervals;
  double sum = 0.0;
  for (int i = 0; i <= intervals; ++i) sum += w[i] * f(a + h * i);
  return sum;
}

/// Adaptive Gauss-Kronrod (15 point) integration to a relative tolerance.
template <typename F>
double adaptiveIntegral(F&& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 15, rel_tol);
}

}  // namespace hapticlab
