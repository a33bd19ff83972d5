#pragma once

#include "hapticlab/elastica.hpp"
#include "hapticlab/render_control.hpp"
#include "hapticlab/shape_field.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hapticlab {

enum class ModelVariant { PixelOnly, Linear, Crs };

std::string toString(ModelVariant variant);
ModelVariant modelVariantFromString(const std::string& name);

struct ReconstructionModel {
  ModelVariant variant = ModelVariant::PixelOnly;
  ElasticaSettings crs{};

  void validate() const { crs.validate(); }
};

class ExtrapolationError : public std::domain_error {
 public:
  ExtrapolationError() : std::domain_error("extrapolation not defined") {}
};

/// Zero-order hold: height of the nearest pixel, ties to the lower index.
double reconstructNearest(const PixelHeights& heights, const Lattice& lattice, const Point2& p);
double reconstructNearest(const PixelHeights& heights, const Lattice& lattice, double x);

/// Fixed triangulation of a square or hexagonal lattice. Square cells are split
/// along the lower-left to upper-right diagonal; hexagonal lattices use their
/// equilateral triangles.
class Triangulation {
 public:
  struct Located {
    std::size_t triangle;
    Eigen::Vector3d barycentric;
  };

  explicit Triangulation(const Lattice& lattice);

  const Lattice& lattice() const { return lattice_; }
  const std::vector<std::array<std::size_t, 3>>& triangles() const { return triangles_; }
  /// Cell owning each triangle: the triangle itself on hexagonal lattices, the square on square lattices.
  const std::vector<std::size_t>& cellOf() const { return cell_of_; }
  const std::vector<std::vector<std::size_t>>& cells() const { return cells_; }

  std::optional<Located> locate(const Point2& p, double tol = 1e-12) const;

 private:
  Lattice lattice_;
  std::vector<std::array<std::size_t, 3>> triangles_;
  std::vector<std::size_t> cell_of_;
  std::vector<std::vector<std::size_t>> cells_;  // corner pixels, counter-clockwise
  std::vector<std::vector<std::size_t>> incident_;
};

/// Piecewise-linear interpolation in 1D; throws ExtrapolationError outside [x_1, x_n].
double reconstructLinear(const PixelHeights& heights, const Lattice& lattice, double x);
/// Barycentric interpolation; throws ExtrapolationError outside the triangulated hull.
double reconstructLinear(const PixelHeights& heights, const Triangulation& mesh, const Point2& p);
double reconstructLinear(const PixelHeights& heights, const Lattice& lattice, const Point2& p);

/// Buckled-beam profile through the pixels of a 1D display.
class CrsProfile1D {
 public:
  CrsProfile1D(ElasticaSolution solution, PixelHeights heights, double excess)
      : solution_(std::move(solution)), heights_(std::move(heights)), excess_(excess) {}

  double operator()(double x) const { return solution_.height(x); }
  const ElasticaSolution& solution() const { return solution_; }
  const PixelHeights& pixelHeights() const { return heights_; }
  double excess() const { return excess_; }

 private:
  ElasticaSolution solution_;
  PixelHeights heights_;
  double excess_;
};

/// One beam spanning x_1..x_n, compressed by the target's arc-length excess over that range.
CrsProfile1D reconstructCrs1d(const BumpField1Dd& field, const Lattice& lattice, const ElasticaSettings& settings = {});

/// Stacked beams along every pixel row, blended inside each cell by inverse
/// squared distance to the cell's edges. Zero outside the pixel hull.
class CrsSurface2D {
 public:
  CrsSurface2D(const Lattice& lattice, std::vector<BeamLine> beams, std::vector<ElasticaSolution> profiles);

  double operator()(const Point2& p) const;
  double operator()(double x, double y) const { return (*this)(Point2(x, y)); }

  const std::vector<BeamLine>& beams() const { return beams_; }
  const std::vector<ElasticaSolution>& profiles() const { return profiles_; }
  /// Height of beam b at arc-length-free abscissa s measured from its start.
  double beamHeight(std::size_t b, double s) const { return profiles_[b].height(s); }

 private:
  struct Edge {
    std::size_t beam;
    double s0;  // abscissa of the first endpoint along the beam
    Point2 a;
    Point2 b;
  };
  Triangulation mesh_;
  std::vector<BeamLine> beams_;
  std::vector<ElasticaSolution> profiles_;
  std::vector<std::vector<Edge>> cell_edges_;
};

CrsSurface2D reconstructCrs2d(const BumpField2Dd& field, const Lattice& lattice, const ElasticaSettings& settings = {});

}  // namespace hapticlab
