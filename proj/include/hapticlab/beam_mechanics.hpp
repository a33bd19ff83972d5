#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

// Units: lengths in mm, forces in N, Young's modulus in Pa, Winkler coefficient
// in N/mm^2 (load per unit length per unit deflection). Moduli are converted to
// N/mm^2 internally so that every formula runs in the (N, mm) system.
namespace hapticlab {

constexpr double kPaToNPerMm2 = 1e-6;

template <typename Scalar>
struct BeamSpec {
  Scalar youngs_modulus{193e9};  // Pa
  Scalar width{4};               // mm
  Scalar thickness{0.1};         // mm
  Scalar length{150};            // mm

  Scalar inertia() const { return width * thickness * thickness * thickness / Scalar(12); }
  Scalar area() const { return width * thickness; }
  /// Flexural rigidity in N*mm^2.
  Scalar rigidity() const { return youngs_modulus * Scalar(kPaToNPerMm2) * inertia(); }
  bool valid() const { return youngs_modulus > 0 && width > 0 && thickness > 0 && length > 0; }
};

template <typename Scalar>
struct FoundationSpec {
  Scalar winkler{0};  // N/mm^2
};

template <typename Scalar>
struct LoadCase {
  Scalar point_load{0};   // P, N
  Scalar axial_load{0};   // N, N (compressive positive)
  Scalar wavelength{90};  // l, mm
  Scalar spacing{30};     // d, mm; the canonical case has l = 3d
};

using BeamSpecd = BeamSpec<double>;
using FoundationSpecd = FoundationSpec<double>;
using LoadCased = LoadCase<double>;

class BucklingThresholdError : public std::domain_error {
 public:
  BucklingThresholdError() : std::domain_error("axial load at buckling threshold") {}
};

class RigidLimitError : public std::domain_error {
 public:
  RigidLimitError() : std::domain_error("rigid-limit undefined") {}
};

/// Critical axial load of the n-th symmetric mode of a clamped-guided beam of
/// wavelength l on a Winkler foundation.
template <typename Scalar>
Scalar criticalLoad(int n, const BeamSpec<Scalar>& beam, const FoundationSpec<Scalar>& fnd, Scalar l) {
  if (n < 1) throw std::invalid_argument("mode number must be >= 1");
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar n2 = Scalar(n) * Scalar(n);
  const Scalar l2 = l * l;
  return (n2 * n2 * Scalar(16) * pi * pi * pi * pi * beam.rigidity() + Scalar(3) * fnd.winkler * l2 * l2) /
         (Scalar(4) * n2 * pi * pi * l2);
}

/// Mode-n denominator of the deflection series; zero exactly at criticalLoad(n).
template <typename Scalar>
Scalar seriesDenominator(int n, const LoadCase<Scalar>& load, const BeamSpec<Scalar>& beam,
                         const FoundationSpec<Scalar>& fnd) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar n2 = Scalar(n) * Scalar(n);
  const Scalar l2 = load.wavelength * load.wavelength;
  return n2 * n2 * Scalar(16) * pi * pi * pi * pi * beam.rigidity() - Scalar(4) * n2 * pi * pi * l2 * load.axial_load +
         Scalar(3) * fnd.winkler * l2 * l2;
}

/// Truncated trigonometric series for the deflection of the beam segment
/// [0, l] under the pixel point load P and axial load N.
template <typename Scalar>
Scalar deflectionSeries(Scalar x, const LoadCase<Scalar>& load, const BeamSpec<Scalar>& beam,
                        const FoundationSpec<Scalar>& fnd, int n_max = 64) {
  using std::cos;
  if (n_max < 8) throw std::invalid_argument("n_max must be >= 8");
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar l = load.wavelength;
  Scalar sum(0);
  for (int n = 1; n <= n_max; ++n) {
    const Scalar denom = seriesDenominator(n, load, beam, fnd);
    if (!(denom > Scalar(0))) throw BucklingThresholdError();
    const Scalar load_term = Scalar(1) - cos(Scalar(n) * pi * (l - load.spacing) / l);
    const Scalar shape = Scalar(1) - cos(Scalar(2 * n) * pi * x / l);
    sum += load_term * shape / denom;
  }
  return Scalar(4) * load.point_load * l * l * l * sum;
}

/// Collapse index 16π⁴EI / (27βd⁴); the skeleton collapses iff the index is below 1.
double collapseIndex(double youngs_modulus_pa, double inertia_mm4, double winkler, double spacing);

enum class CollapseClass { Collapse, NoCollapse };

/// Same as collapseIndex, but β = 0 classifies as no-collapse instead of throwing.
CollapseClass classifyCollapse(double youngs_modulus_pa, double inertia_mm4, double winkler, double spacing);

/// Index from the dimensionless material (E/β) and geometry (I/d⁴) groups.
double collapseIndexFromGroups(double material, double geometry);

/// Geometry group I/d⁴ on the Δ = 1 boundary for a given material group E/β.
double collapseBoundaryGeometry(double material);

struct AxisRange {
  double lo = 1.0;
  double hi = 10.0;
  int points = 16;
};

struct PhaseDiagram {
  std::vector<double> material;  // E/β, E in N/mm^2
  std::vector<double> geometry;  // I/d⁴
  Eigen::MatrixXd delta;         // rows: material, cols: geometry
  std::vector<std::vector<CollapseClass>> classes;
};

/// Log-spaced classification grid over the (E/β, I/d⁴) plane.
PhaseDiagram phaseDiagram(const AxisRange& material, const AxisRange& geometry);

struct LengthChange {
  double exact = 0;        // N_cr^(1) L / (E A), mm
  double approximate = 0;  // π² b² L / (3 l²), mm
  double relative_gap = 0;
};

/// Axial shortening of the skeleton at the first critical load. The
/// approximation assumes the bending term dominates (large collapse index);
/// that regime is the caller's responsibility.
LengthChange lengthChange(const BeamSpecd& beam, const FoundationSpecd& fnd, double wavelength);

/// Tent model of a membrane cell of size c pushed out by h at its centre.
double membraneStrain(double cell_size, double displacement);

/// Arc-length excess of one raised-cosine wavelength of amplitude A over its chord.
double raisedCosineExcess(double amplitude, double wavelength);

struct RangeLimit {
  double curvature_limited = 0;  // amplitude where surface strain hits the yield strain
  double travel_limited = 0;     // amplitude whose arc-length excess equals the servo travel
  double max_amplitude = 0;
};

RangeLimit rangeLimits(const BeamSpecd& beam, double yield_strain, double servo_travel, double wavelength);

}  // namespace hapticlab
