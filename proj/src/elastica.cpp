#include "hapticlab/elastica.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hapticlab {

void ElasticaSettings::validate() const {
  if (nodes_per_span < 50) throw std::invalid_argument("elastica needs at least 50 nodes per span");
  if (!(tolerance > 0.0)) throw std::invalid_argument("elastica tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("elastica max_iterations must be positive");
  if (!(penalty_start > 0.0) || !(penalty_growth > 1.0) || !(penalty_max >= penalty_start))
    throw std::invalid_argument("elastica penalty schedule must be positive and increasing");
}

double ElasticaSolution::height(double x) const {
  const std::size_t n = nodes.size();
  if (n < 2) return 0.0;
  // Node tangent: mean direction of the adjacent segments.
  auto tangent = [&](std::size_t i) {
    const Point2 prev = i > 0 ? (nodes[i] - nodes[i - 1]).normalized() : (nodes[1] - nodes[0]).normalized();
    const Point2 next = i + 1 < n ? (nodes[i + 1] - nodes[i]).normalized() : prev;
    return (prev + next).normalized();
  };
  // Cubic Hermite in arc length on segment i; the abscissa is solved by bisection when monotone.
  auto evaluate = [&](std::size_t i) {
    const Point2& a = nodes[i];
    const Point2& b = nodes[i + 1];
    const double h = (b - a).norm();
    const Point2 ta = tangent(i) * h;
    const Point2 tb = tangent(i + 1) * h;
    auto curve = [&](double t) {
      const double t2 = t * t;
      const double t3 = t2 * t;
      return Point2((2 * t3 - 3 * t2 + 1) * a + (t3 - 2 * t2 + t) * ta + (-2 * t3 + 3 * t2) * b + (t3 - t2) * tb);
    };
    const bool increasing = b.x() > a.x() && ta.x() > 0 && tb.x() > 0;
    if (!increasing) {
      if (b.x() == a.x()) return std::max(a.y(), b.y());
      return a.y() + (x - a.x()) / (b.x() - a.x()) * (b.y() - a.y());
    }
    // Safeguarded Newton on x(t) = x.
    double lo = 0.0;
    double hi = 1.0;
    double t = std::clamp((x - a.x()) / (b.x() - a.x()), 0.0, 1.0);
    for (int it = 0; it < 60; ++it) {
      const double fx = curve(t).x() - x;
      if (std::abs(fx) <= 1e-14 * h) break;
      (fx < 0.0 ? lo : hi) = t;
      const double t2 = t * t;
      const double dx = (6 * t2 - 6 * t) * a.x() + (3 * t2 - 4 * t + 1) * ta.x() + (-6 * t2 + 6 * t) * b.x() +
                        (3 * t2 - 2 * t) * tb.x();
      double next = dx > 0.0 ? t - fx / dx : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo < 1e-15) break;
      t = next;
    }
    return curve(t).y();
  };
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < n && monotone; ++i) monotone = nodes[i + 1].x() > nodes[i].x();
  if (monotone) {
    if (x < nodes.front().x() || x > nodes.back().x()) return 0.0;
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x, [](double v, const Point2& p) { return v < p.x(); });
    std::size_t i = static_cast<std::size_t>(it - nodes.begin());
    i = i == 0 ? 0 : std::min(i - 1, n - 2);
    return evaluate(i);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double lo = std::min(nodes[i].x(), nodes[i + 1].x());
    const double hi = std::max(nodes[i].x(), nodes[i + 1].x());
    if (x < lo || x > hi) continue;
    return evaluate(i);
  }
  return 0.0;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Discrete problem in units of the mean constraint spacing.
class Problem {
 public:
  Problem(std::vector<double> dx, std::vector<double> dy, double total_length, int per_span)
      : dx_(std::move(dx)), dy_(std::move(dy)), total_(total_length), m_(per_span) {
    spans_ = static_cast<int>(dx_.size());
    segments_ = spans_ * m_;
    free_ = segments_ - 2;
    nz_ = free_ + spans_;
  }

  int variables() const { return nz_; }
  int constraints() const { return 2 * spans_ + 1; }
  int spans() const { return spans_; }
  int perSpan() const { return m_; }
  int segments() const { return segments_; }

  double theta(const Eigen::VectorXd& z, int g) const { return (g == 0 || g == segments_ - 1) ? 0.0 : z[g - 1]; }
  double length(const Eigen::VectorXd& z, int s) const { return z[free_ + s]; }
  int thetaVar(int g) const { return (g == 0 || g == segments_ - 1) ? -1 : g - 1; }
  int lengthVar(int s) const { return free_ + s; }
  int spanOf(int g) const { return g / m_; }

  double energy(const Eigen::VectorXd& z) const {
    double e = 0.0;
    for (int g = 0; g + 1 < segments_; ++g) {
      const double d = theta(z, g + 1) - theta(z, g);
      e += d * d / junctionLength(z, g);
    }
    return e;
  }

  Eigen::VectorXd residuals(const Eigen::VectorXd& z) const {
    Eigen::VectorXd c(constraints());
    double sum_l = 0.0;
    for (int s = 0; s < spans_; ++s) {
      double sc = 0.0;
      double ss = 0.0;
      for (int k = 0; k < m_; ++k) {
        const double t = theta(z, s * m_ + k);
        sc += std::cos(t);
        ss += std::sin(t);
      }
      const double h = length(z, s) / m_;
      c[2 * s] = h * sc - dx_[static_cast<std::size_t>(s)];
      c[2 * s + 1] = h * ss - dy_[static_cast<std::size_t>(s)];
      sum_l += length(z, s);
    }
    c[2 * spans_] = sum_l - total_;
    return c;
  }

  // Augmented Lagrangian: energy + lambda.c + mu/2 |c|^2.
  double objective(const Eigen::VectorXd& z, double mu, const Eigen::VectorXd& lambda) const {
    const Eigen::VectorXd c = residuals(z);
    return energy(z) + lambda.dot(c) + 0.5 * mu * c.squaredNorm();
  }

  SpMat jacobian(const Eigen::VectorXd& z) const {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(2 * segments_ + 3 * spans_));
    for (int s = 0; s < spans_; ++s) {
      const double h = length(z, s) / m_;
      double sc = 0.0;
      double ss = 0.0;
      for (int k = 0; k < m_; ++k) {
        const int g = s * m_ + k;
        const double th = theta(z, g);
        sc += std::cos(th);
        ss += std::sin(th);
        const int v = thetaVar(g);
        if (v < 0) continue;
        t.emplace_back(2 * s, v, -h * std::sin(th));
        t.emplace_back(2 * s + 1, v, h * std::cos(th));
      }
      t.emplace_back(2 * s, lengthVar(s), sc / m_);
      t.emplace_back(2 * s + 1, lengthVar(s), ss / m_);
      t.emplace_back(2 * spans_, lengthVar(s), 1.0);
    }
    SpMat j(constraints(), nz_);
    j.setFromTriplets(t.begin(), t.end());
    return j;
  }

  // Gradient and Hessian of the augmented objective; constraint curvature is
  // weighted by the multiplier estimate lambda + mu * c.
  void derivatives(const Eigen::VectorXd& z, double mu, const Eigen::VectorXd& lambda, Eigen::VectorXd& grad, SpMat& kkt,
                   Eigen::VectorXd& hess_diag) const {
    grad = Eigen::VectorXd::Zero(nz_);
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(segments_) * static_cast<std::size_t>(m_ + 8));
    const double dm = 0.5 / m_;
    for (int g = 0; g + 1 < segments_; ++g) {
      const double d = theta(z, g + 1) - theta(z, g);
      const double mj = junctionLength(z, g);
      const int a = thetaVar(g);
      const int b = thetaVar(g + 1);
      const double w = 2.0 / mj;
      if (b >= 0) grad[b] += w * d;
      if (a >= 0) grad[a] -= w * d;
      if (a >= 0) t.emplace_back(a, a, w);
      if (b >= 0) t.emplace_back(b, b, w);
      if (a >= 0 && b >= 0) {
        t.emplace_back(a, b, -w);
        t.emplace_back(b, a, -w);
      }
      const int sa = spanOf(g);
      const int sb = spanOf(g + 1);
      const int la = lengthVar(sa);
      const int lb = lengthVar(sb);
      // dm/dL for each span touching the junction (sa may equal sb).
      const double dl_a = (sa == sb) ? 2.0 * dm : dm;
      const double de_dm = -d * d / (mj * mj);
      grad[la] += de_dm * dl_a;
      if (sb != sa) grad[lb] += de_dm * dm;
      const double cross = -2.0 * d / (mj * mj);  // d²E / dθ_b dm
      auto addCross = [&](int lv, double dl) {
        if (b >= 0) {
          t.emplace_back(b, lv, cross * dl);
          t.emplace_back(lv, b, cross * dl);
        }
        if (a >= 0) {
          t.emplace_back(a, lv, -cross * dl);
          t.emplace_back(lv, a, -cross * dl);
        }
      };
      addCross(la, dl_a);
      if (sb != sa) addCross(lb, dm);
      const double curv = 2.0 * d * d / (mj * mj * mj);
      t.emplace_back(la, la, curv * dl_a * dl_a);
      if (sb != sa) {
        t.emplace_back(lb, lb, curv * dm * dm);
        t.emplace_back(la, lb, curv * dl_a * dm);
        t.emplace_back(lb, la, curv * dl_a * dm);
      }
    }

    const Eigen::VectorXd c = residuals(z);
    const SpMat j = jacobian(z);
    const Eigen::VectorXd multiplier = lambda + mu * c;
    grad += j.transpose() * multiplier;
    for (int s = 0; s < spans_; ++s) {
      const double h = length(z, s) / m_;
      const double lx = multiplier[2 * s];
      const double ly = multiplier[2 * s + 1];
      const int lv = lengthVar(s);
      for (int k = 0; k < m_; ++k) {
        const int g = s * m_ + k;
        const int v = thetaVar(g);
        if (v < 0) continue;
        const double th = theta(z, g);
        const double cs = std::cos(th);
        const double sn = std::sin(th);
        t.emplace_back(v, v, -lx * h * cs - ly * h * sn);
        const double tl = (-lx * sn + ly * cs) / m_;
        t.emplace_back(v, lv, tl);
        t.emplace_back(lv, v, tl);
      }
    }
    // Saddle-point form [B J^T; J -I/mu]: its Schur complement is B + mu J^T J,
    // and the sparsity stays linear in the number of segments.
    for (int k = 0; k < j.outerSize(); ++k)
      for (SpMat::InnerIterator it(j, k); it; ++it) {
        t.emplace_back(nz_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        t.emplace_back(static_cast<int>(it.col()), nz_ + static_cast<int>(it.row()), it.value());
      }
    for (int r = 0; r < constraints(); ++r) t.emplace_back(nz_ + r, nz_ + r, -1.0 / mu);
    kkt.resize(nz_ + constraints(), nz_ + constraints());
    kkt.setFromTriplets(t.begin(), t.end());
    hess_diag.resize(nz_);
    for (int v = 0; v < nz_; ++v) hess_diag[v] = kkt.coeff(v, v) + mu * j.col(v).squaredNorm();
  }

 private:
  double junctionLength(const Eigen::VectorXd& z, int g) const {
    return 0.5 * (length(z, spanOf(g)) + length(z, spanOf(g + 1))) / m_;
  }

  std::vector<double> dx_;
  std::vector<double> dy_;
  double total_;
  int m_;
  int spans_ = 0;
  int segments_ = 0;
  int free_ = 0;
  int nz_ = 0;
};

// Cubic Hermite through the constraints with centred-difference slopes and flat
// ends, or the guide curve when one is supplied (in normalised units).
Eigen::VectorXd initialGuess(const Problem& prob, const std::vector<double>& dx, const std::vector<double>& dy,
                             const std::function<double(int, double)>& guide) {
  const int spans = prob.spans();
  const int m = prob.perSpan();
  std::vector<double> slope(static_cast<std::size_t>(spans) + 1, 0.0);
  for (int i = 1; i < spans; ++i) {
    const auto k = static_cast<std::size_t>(i);
    slope[k] = (dy[k - 1] + dy[k]) / (dx[k - 1] + dx[k]);
  }
  Eigen::VectorXd z(prob.variables());
  for (int s = 0; s < spans; ++s) {
    const auto k = static_cast<std::size_t>(s);
    const double w = dx[k];
    const double m0 = slope[k] * w;
    const double m1 = slope[k + 1] * w;
    auto y = [&](double t) {
      if (guide) return guide(s, t);
      const double t2 = t * t;
      const double t3 = t2 * t;
      return (-2 * t3 + 3 * t2) * dy[k] + (t3 - 2 * t2 + t) * m0 + (t3 - t2) * m1;
    };
    double len = 0.0;
    for (int i = 0; i < m; ++i) {
      const double t0 = static_cast<double>(i) / m;
      const double t1 = static_cast<double>(i + 1) / m;
      const double ex = w / m;
      const double ey = y(t1) - y(t0);
      len += std::hypot(ex, ey);
      const int v = prob.thetaVar(s * m + i);
      if (v >= 0) z[v] = std::atan2(ey, ex);
    }
    z[prob.lengthVar(s)] = len;
  }
  return z;
}

bool lengthsPositive(const Problem& prob, const Eigen::VectorXd& z) {
  for (int s = 0; s < prob.spans(); ++s)
    if (!(prob.length(z, s) > 0.0)) return false;
  return true;
}

}  // namespace

ElasticaSolution solveElastica1d(const std::vector<Point2>& constraints, double excess_length,
                                 const ElasticaSettings& settings, const GuideCurve& guide) {
  settings.validate();
  if (constraints.size() < 2) throw std::invalid_argument("elastica needs at least two constraints");
  if (!(excess_length >= 0.0) || !std::isfinite(excess_length)) throw std::invalid_argument("excess length must be >= 0");
  for (std::size_t i = 0; i + 1 < constraints.size(); ++i)
    if (!(constraints[i + 1].x() > constraints[i].x())) throw std::invalid_argument("constraints must be strictly sorted in x");

  const std::size_t spans = constraints.size() - 1;
  const double chord_span = constraints.back().x() - constraints.front().x();
  const double unit = chord_span / static_cast<double>(spans);
  const double prescribed = chord_span + excess_length;
  const int m = settings.nodes_per_span;

  ElasticaSolution out;
  out.prescribed_length = prescribed;

  std::vector<double> dx(spans);
  std::vector<double> dy(spans);
  double polyline = 0.0;
  bool flat = true;
  for (std::size_t s = 0; s < spans; ++s) {
    dx[s] = (constraints[s + 1].x() - constraints[s].x()) / unit;
    dy[s] = (constraints[s + 1].y() - constraints[s].y()) / unit;
    polyline += std::hypot(dx[s], dy[s]);
    flat = flat && dy[s] == 0.0;
  }
  const double total = prescribed / unit;
  // Slack below the solver tolerance is treated as taut rather than infeasible.
  const double slack = total - polyline;
  if (slack < -settings.tolerance) throw InfeasibleExcessError();

  auto assemble = [&](const Problem& prob, const Eigen::VectorXd& z) {
    ElasticaSolution sol = out;
    sol.nodes.clear();
    sol.span_first_node.clear();
    sol.segment_length.clear();
    Point2 p = constraints.front();
    sol.nodes.push_back(p);
    double arc = 0.0;
    for (int s = 0; s < prob.spans(); ++s) {
      sol.span_first_node.push_back(sol.nodes.size() - 1);
      const double h = prob.length(z, s) / m * unit;
      sol.segment_length.push_back(h);
      for (int k = 0; k < m; ++k) {
        const double th = prob.theta(z, s * m + k);
        p += h * Point2(std::cos(th), std::sin(th));
        sol.nodes.push_back(p);
        arc += h;
      }
    }
    sol.span_first_node.push_back(sol.nodes.size() - 1);
    sol.arc_length = arc;
    sol.bending_energy = prob.energy(z) * static_cast<double>(prob.spans());
    sol.constraint_residuals.resize(static_cast<Eigen::Index>(constraints.size() + 1));
    for (std::size_t i = 0; i < constraints.size(); ++i)
      sol.constraint_residuals[static_cast<Eigen::Index>(i)] = (sol.nodes[sol.span_first_node[i]] - constraints[i]).norm();
    sol.constraint_residuals[static_cast<Eigen::Index>(constraints.size())] = arc - prescribed;
    return sol;
  };

  Problem prob(dx, dy, total, m);
  if (flat && slack <= settings.tolerance) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(prob.variables());
    for (std::size_t s = 0; s < spans; ++s) z[prob.lengthVar(static_cast<int>(s))] = dx[s];
    return assemble(prob, z);
  }

  std::function<double(int, double)> span_guide;
  if (guide) {
    // Relative height along span s at fraction t, pinned to the constraint at t = 0.
    span_guide = [&](int s, double t) {
      const auto k = static_cast<std::size_t>(s);
      const double x = constraints[k].x() + t * (constraints[k + 1].x() - constraints[k].x());
      const double base = constraints[k].y() + t * (constraints[k + 1].y() - constraints[k].y());
      const double guide_base = guide(constraints[k].x()) + t * (guide(constraints[k + 1].x()) - guide(constraints[k].x()));
      return (guide(x) - guide_base + base - constraints[k].y()) / unit;
    };
  }
  Eigen::VectorXd z = initialGuess(prob, dx, dy, span_guide);
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analysed = false;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(prob.constraints());
  int iterations = 0;
  bool budget_exhausted = false;

  // A small slack needs a stiff start, or the first stages flatten the curve
  // onto the degenerate straight state.
  const double mu_scale = 1.0 / std::clamp(slack, 1e-300, 1.0);
  const double mu_end = settings.penalty_max * mu_scale * (1.0 + 1e-12);
  for (double mu = settings.penalty_start * mu_scale; mu <= mu_end && !budget_exhausted;
       mu *= settings.penalty_growth) {
    std::vector<double> history;
    double f = prob.objective(z, mu, lambda);
    history.push_back(f);
    double damping = 0.0;
    for (int stage_it = 0; stage_it < 200; ++stage_it) {
      if (iterations >= settings.max_iterations) {
        budget_exhausted = true;
        break;
      }
      ++iterations;
      Eigen::VectorXd grad;
      SpMat kkt;
      Eigen::VectorXd hess_diag;
      prob.derivatives(z, mu, lambda, grad, kkt, hess_diag);
      if (!analysed) {
        ldlt.analyzePattern(kkt);
        analysed = true;
      }
      const double diag_scale = std::max(1.0, hess_diag.cwiseAbs().maxCoeff());
      const int n = prob.variables();
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(kkt.rows());
      rhs.head(n) = -grad;
      Eigen::VectorXd step;
      bool accepted = false;
      for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
        SpMat damped = kkt;
        if (damping > 0.0)
          for (int v = 0; v < n; ++v) damped.coeffRef(v, v) += damping * diag_scale;
        ldlt.factorize(damped);
        // The reduced Hessian is positive definite exactly when the factor has
        // one negative pivot per constraint.
        const auto& dvec = ldlt.vectorD();
        const bool pd = ldlt.info() == Eigen::Success && (dvec.array() < 0.0).count() == prob.constraints() &&
                        (dvec.array() != 0.0).all() && dvec.allFinite();
        if (!pd) {
          damping = std::max(1e-12, damping * 10.0);
          continue;
        }
        step = ldlt.solve(rhs).head(n);
        const double slope = grad.dot(step);
        if (!(slope < 0.0)) {
          damping = std::max(1e-12, damping * 10.0);
          continue;
        }
        double t = 1.0;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
          const Eigen::VectorXd trial = z + t * step;
          if (!lengthsPositive(prob, trial)) continue;
          const double ft = prob.objective(trial, mu, lambda);
          if (ft <= f + 1e-4 * t * slope) {
            z = trial;
            f = ft;
            accepted = true;
            break;
          }
        }
        if (!accepted) damping = std::max(1e-12, damping * 10.0);
      }
      if (!accepted) break;
      history.push_back(f);
      damping *= 0.1;
      if (damping < 1e-12) damping = 0.0;
      const double decrement = -grad.dot(step);
      if (decrement < 1e-13 * std::max(1.0, f) || step.cwiseAbs().maxCoeff() < 1e-12) break;
    }
    out.objective_history.push_back(std::move(history));
    const Eigen::VectorXd c_stage = prob.residuals(z);
    lambda += mu * c_stage;
    if (c_stage.cwiseAbs().maxCoeff() <= 1e-3 * settings.tolerance) break;
  }

  // Project onto the constraint manifold with minimum-norm Gauss-Newton steps.
  Eigen::VectorXd c = prob.residuals(z);
  for (int it = 0; it < 50 && c.cwiseAbs().maxCoeff() > 1e-3 * settings.tolerance; ++it) {
    const SpMat j = prob.jacobian(z);
    const Eigen::MatrixXd jd(j);
    const Eigen::MatrixXd jjt = jd * jd.transpose();
    const Eigen::VectorXd y = jjt.ldlt().solve(c);
    z -= jd.transpose() * y;
    c = prob.residuals(z);
  }

  ElasticaSolution sol = assemble(prob, z);
  sol.objective_history = out.objective_history;
  sol.iterations = iterations;
  const double residual = c.cwiseAbs().maxCoeff();
  if (budget_exhausted || !(residual <= settings.tolerance) || !std::isfinite(sol.bending_energy))
    throw ElasticaConvergenceError(std::move(sol), residual);
  return sol;
}

}  // namespace hapticlab
