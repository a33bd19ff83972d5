#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hapticlab {

using Point2 = Eigen::Vector2d;

/// Single raised-cosine bump on a line: (A/2)(1 + cos(2π(x - X)/l)) on |x - X| <= l/2.
template <typename Scalar>
struct BumpField1D {
  Scalar peak{0};
  Scalar amplitude{1};
  Scalar wavelength{1};

  bool valid() const { return amplitude > Scalar(0) && wavelength > Scalar(0); }
};

/// Rotationally symmetric raised cosine with support diameter equal to the wavelength.
template <typename Scalar>
struct BumpField2D {
  Eigen::Matrix<Scalar, 2, 1> peak{Scalar(0), Scalar(0)};
  Scalar amplitude{1};
  Scalar wavelength{1};

  bool valid() const { return amplitude > Scalar(0) && wavelength > Scalar(0); }
};

using BumpField1Dd = BumpField1D<double>;
using BumpField2Dd = BumpField2D<double>;

template <typename Scalar>
Scalar raisedCosine(Scalar offset, Scalar amplitude, Scalar wavelength) {
  using std::abs;
  using std::cos;
  const Scalar u = offset / wavelength;
  if (abs(u) > Scalar(0.5)) return Scalar(0);
  return amplitude / Scalar(2) * (Scalar(1) + cos(Scalar(2) * std::numbers::pi_v<Scalar> * u));
}

template <typename Scalar>
Scalar bump1d(Scalar x, const BumpField1D<Scalar>& field) {
  return raisedCosine(x - field.peak, field.amplitude, field.wavelength);
}

template <typename Scalar>
Scalar bump2d(Scalar x, Scalar y, const BumpField2D<Scalar>& field) {
  using std::hypot;
  const Scalar r = hypot(x - field.peak.x(), y - field.peak.y());
  return raisedCosine(r, field.amplitude, field.wavelength);
}

/// d/dx of bump1d; continuous, vanishes at the support edge.
template <typename Scalar>
Scalar bump1dSlope(Scalar x, const BumpField1D<Scalar>& field) {
  using std::abs;
  using std::sin;
  const Scalar u = (x - field.peak) / field.wavelength;
  if (abs(u) > Scalar(0.5)) return Scalar(0);
  const Scalar k = Scalar(2) * std::numbers::pi_v<Scalar> / field.wavelength;
  return -field.amplitude / Scalar(2) * k * sin(Scalar(2) * std::numbers::pi_v<Scalar> * u);
}

/// Gradient of bump2d; zero at the peak and outside the support.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> bump2dGradient(Scalar x, Scalar y, const BumpField2D<Scalar>& field) {
  using std::hypot;
  using std::sin;
  const Eigen::Matrix<Scalar, 2, 1> rel(x - field.peak.x(), y - field.peak.y());
  const Scalar r = hypot(rel.x(), rel.y());
  if (r > field.wavelength / Scalar(2) || r == Scalar(0)) return Eigen::Matrix<Scalar, 2, 1>::Zero();
  const Scalar k = Scalar(2) * std::numbers::pi_v<Scalar> / field.wavelength;
  const Scalar dr = -field.amplitude / Scalar(2) * k * sin(k * r);
  return rel * (dr / r);
}

enum class LatticeKind { Line, Square, Hexagonal };

std::string toString(LatticeKind kind);
LatticeKind latticeKindFromString(const std::string& name);

/// Axis-aligned display region. For line lattices only the x range is used.
struct Box {
  Point2 lo{0, 0};
  Point2 hi{0, 0};

  bool contains(const Point2& p, double tol = 1e-9) const {
    return p.x() >= lo.x() - tol && p.x() <= hi.x() + tol && p.y() >= lo.y() - tol && p.y() <= hi.y() + tol;
  }
  double width() const { return hi.x() - lo.x(); }
  double height() const { return hi.y() - lo.y(); }
};

/// Where pixels live. `hex_rings` selects the hexagonal patch of the given ring
/// radius centered on the origin (ring radius 2 is the 19-pixel device);
/// otherwise the box is used.
struct Extents {
  Box box;
  std::optional<int> hex_rings;

  static Extents line(double length) { return {Box{{0, 0}, {length, 0}}, std::nullopt}; }
  static Extents rect(Point2 lo, Point2 hi) { return {Box{lo, hi}, std::nullopt}; }
  static Extents hexPatch(int rings) { return {Box{}, rings}; }
};

class Lattice {
 public:
  Lattice(LatticeKind kind, double pitch, Extents extents, std::vector<Point2> pixels);

  LatticeKind kind() const { return kind_; }
  double pitch() const { return pitch_; }
  const Extents& extents() const { return extents_; }
  const std::vector<Point2>& pixels() const { return pixels_; }
  std::size_t size() const { return pixels_.size(); }
  bool is1d() const { return kind_ == LatticeKind::Line; }

  /// Display region used for zero extension and for drawing peaks.
  /// Line: [x_1, x_n]. Box extents: the box. Hex patch: the convex hull of the pixels.
  bool inDisplay(const Point2& p, double tol = 1e-9) const;
  bool inDisplay(double x, double tol = 1e-9) const { return inDisplay(Point2(x, 0.0), tol); }
  /// Axis-aligned bounds of the display region.
  Box displayBounds() const;
  /// Signed distance to the display boundary, positive inside.
  double insetDistance(const Point2& p) const;

  /// Index of the nearest pixel; ties go to the lower index.
  std::size_t nearest(const Point2& p) const;
  std::size_t nearest(double x) const { return nearest(Point2(x, 0.0)); }

 private:
  LatticeKind kind_;
  double pitch_;
  Extents extents_;
  std::vector<Point2> pixels_;
  // Bucket grid for nearest lookups.
  Point2 grid_origin_;
  double cell_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::vector<std::size_t>> buckets_;
  std::vector<Point2> hull_;  // counter-clockwise, hex patches only
};

/// Raised on degenerate extents or non-positive pitch.
class LatticeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Deterministic pixel enumeration: row-major from low y to high y, low x to high x.
/// Hexagonal lattices are triangular point sets with horizontal rows; their
/// Voronoi cells are regular hexagons of apothem pitch/2.
Lattice makeLattice(LatticeKind kind, double pitch, const Extents& extents);

/// Box whose edges lie on mirror lines of the lattice and which covers at
/// least [-half_width, half_width]^2. Used for sweeps so that boundary cells
/// do not bias cell statistics.
Extents mirrorAlignedBox(LatticeKind kind, double pitch, double half_width);

using PixelHeights = Eigen::VectorXd;

PixelHeights samplePixels(const BumpField1Dd& field, const Lattice& lattice);
PixelHeights samplePixels(const BumpField2Dd& field, const Lattice& lattice);

}  // namespace hapticlab
