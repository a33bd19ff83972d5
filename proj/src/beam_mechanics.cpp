#include "hapticlab/beam_mechanics.hpp"

#include "hapticlab/quadrature.hpp"

#include <limits>

namespace hapticlab {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kPi4 = kPi * kPi * kPi * kPi;

std::vector<double> logSpace(const AxisRange& r) {
  if (!(r.lo > 0.0) || !(r.hi > r.lo) || r.points < 2) throw std::invalid_argument("axis range must be positive and increasing");
  std::vector<double> out(static_cast<std::size_t>(r.points));
  const double a = std::log10(r.lo);
  const double b = std::log10(r.hi);
  for (int i = 0; i < r.points; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (r.points - 1));
  return out;
}
}  // namespace

double collapseIndex(double youngs_modulus_pa, double inertia_mm4, double winkler, double spacing) {
  if (winkler == 0.0) throw RigidLimitError();
  if (!(winkler > 0.0) || !(spacing > 0.0)) throw std::invalid_argument("winkler coefficient and spacing must be positive");
  const double ei = youngs_modulus_pa * kPaToNPerMm2 * inertia_mm4;
  const double d2 = spacing * spacing;
  return 16.0 * kPi4 * ei / (27.0 * winkler * d2 * d2);
}

CollapseClass classifyCollapse(double youngs_modulus_pa, double inertia_mm4, double winkler, double spacing) {
  if (winkler == 0.0) return CollapseClass::NoCollapse;
  return collapseIndex(youngs_modulus_pa, inertia_mm4, winkler, spacing) < 1.0 ? CollapseClass::Collapse
                                                                               : CollapseClass::NoCollapse;
}

double collapseIndexFromGroups(double material, double geometry) { return (16.0 * kPi4 / 27.0) * material * geometry; }

double collapseBoundaryGeometry(double material) { return 27.0 / (16.0 * kPi4 * material); }

PhaseDiagram phaseDiagram(const AxisRange& material, const AxisRange& geometry) {
  PhaseDiagram out;
  out.material = logSpace(material);
  out.geometry = logSpace(geometry);
  const auto rows = static_cast<Eigen::Index>(out.material.size());
  const auto cols = static_cast<Eigen::Index>(out.geometry.size());
  out.delta.resize(rows, cols);
  out.classes.assign(out.material.size(), std::vector<CollapseClass>(out.geometry.size()));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double delta = collapseIndexFromGroups(out.material[static_cast<std::size_t>(i)], out.geometry[static_cast<std::size_t>(j)]);
      out.delta(i, j) = delta;
      out.classes[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          delta < 1.0 ? CollapseClass::Collapse : CollapseClass::NoCollapse;
    }
  }
  return out;
}

LengthChange lengthChange(const BeamSpecd& beam, const FoundationSpecd& fnd, double wavelength) {
  LengthChange out;
  const double ncr = criticalLoad(1, beam, fnd, wavelength);
  out.exact = ncr * beam.length / (beam.youngs_modulus * kPaToNPerMm2 * beam.area());
  out.approximate = kPi * kPi * beam.thickness * beam.thickness * beam.length / (3.0 * wavelength * wavelength);
  out.relative_gap = std::abs(out.exact - out.approximate) / out.approximate;
  return out;
}

double membraneStrain(double cell_size, double displacement) {
  if (!(cell_size > 0.0) || displacement < 0.0) throw std::invalid_argument("cell size must be positive and displacement non-negative");
  const double half = cell_size / 2.0;
  return 2.0 * std::sqrt(half * half + displacement * displacement) / cell_size - 1.0;
}

double raisedCosineExcess(double amplitude, double wavelength) {
  const double k = 2.0 * kPi / wavelength;
  auto speed = [&](double x) {
    const double slope = -amplitude / 2.0 * k * std::sin(k * x);
    return std::sqrt(1.0 + slope * slope);
  };
  // The integrand is symmetric about the peak; integrate one half.
  return 2.0 * adaptiveIntegral(speed, 0.0, wavelength / 2.0, 1e-12) - wavelength;
}

RangeLimit rangeLimits(const BeamSpecd& beam, double yield_strain, double servo_travel, double wavelength) {
  if (!(yield_strain > 0.0) || !(servo_travel > 0.0) || !(wavelength > 0.0))
    throw std::invalid_argument("yield strain, servo travel and wavelength must be positive");
  RangeLimit out;
  // Peak curvature of the raised cosine is 2π²A/l²; surface strain is κ b / 2.
  out.curvature_limited = std::isfinite(yield_strain)
                              ? yield_strain * wavelength * wavelength / (kPi * kPi * beam.thickness)
                              : std::numeric_limits<double>::infinity();
  if (std::isfinite(servo_travel)) {
    double lo = 0.0;
    double hi = wavelength;
    while (raisedCosineExcess(hi, wavelength) < servo_travel) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (raisedCosineExcess(mid, wavelength) < servo_travel ? lo : hi) = mid;
    }
    out.travel_limited = 0.5 * (lo + hi);
  } else {
    out.travel_limited = std::numeric_limits<double>::infinity();
  }
  out.max_amplitude = std::min(out.curvature_limited, out.travel_limited);
  return out;
}

}  // namespace hapticlab
