#include "hapticlab/shape_field.hpp"

#include <algorithm>
#include <limits>

namespace hapticlab {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

std::vector<Point2> linePixels(double pitch, const Box& box) {
  std::vector<Point2> out;
  const double length = box.width();
  const auto count = static_cast<long>(std::floor(length / pitch + 1e-9));
  for (long i = 0; i <= count; ++i) out.emplace_back(box.lo.x() + static_cast<double>(i) * pitch, 0.0);
  return out;
}

std::vector<Point2> squarePixels(double pitch, const Box& box) {
  std::vector<Point2> out;
  const auto nx = static_cast<long>(std::floor(box.width() / pitch + 1e-9));
  const auto ny = static_cast<long>(std::floor(box.height() / pitch + 1e-9));
  for (long j = 0; j <= ny; ++j)
    for (long i = 0; i <= nx; ++i)
      out.emplace_back(box.lo.x() + static_cast<double>(i) * pitch, box.lo.y() + static_cast<double>(j) * pitch);
  return out;
}

std::vector<Point2> hexBoxPixels(double pitch, const Box& box) {
  std::vector<Point2> out;
  const double row = pitch * kSqrt3 / 2.0;
  const double tol = 1e-9 * pitch;
  const auto ny = static_cast<long>(std::floor(box.height() / row + 1e-9));
  for (long j = 0; j <= ny; ++j) {
    const double shift = (j % 2 == 0) ? 0.0 : pitch / 2.0;
    const double y = box.lo.y() + static_cast<double>(j) * row;
    for (long i = 0;; ++i) {
      const double x = box.lo.x() + shift + static_cast<double>(i) * pitch;
      if (x > box.hi.x() + tol) break;
      out.emplace_back(x, y);
    }
  }
  return out;
}

std::vector<Point2> hexPatchPixels(double pitch, int rings) {
  std::vector<Point2> out;
  for (int r = -rings; r <= rings; ++r) {
    for (int q = -rings; q <= rings; ++q) {
      if (std::abs(q + r) > rings) continue;
      out.emplace_back(pitch * (q + 0.5 * r), pitch * kSqrt3 / 2.0 * r);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Point2& a, const Point2& b) {
    return a.y() < b.y() || (a.y() == b.y() && a.x() < b.x());
  });
  return out;
}

}  // namespace

std::string toString(LatticeKind kind) {
  switch (kind) {
    case LatticeKind::Line: return "line";
    case LatticeKind::Square: return "square";
    case LatticeKind::Hexagonal: return "hexagonal";
  }
  return "unknown";
}

LatticeKind latticeKindFromString(const std::string& name) {
  if (name == "line") return LatticeKind::Line;
  if (name == "square") return LatticeKind::Square;
  if (name == "hexagonal" || name == "hex") return LatticeKind::Hexagonal;
  throw std::invalid_argument("unknown lattice kind '" + name + "'");
}

Lattice::Lattice(LatticeKind kind, double pitch, Extents extents, std::vector<Point2> pixels)
    : kind_(kind), pitch_(pitch), extents_(std::move(extents)), pixels_(std::move(pixels)), cell_(pitch) {
  Box b{pixels_.front(), pixels_.front()};
  for (const auto& p : pixels_) {
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  grid_origin_ = b.lo;
  nx_ = static_cast<int>(std::floor(b.width() / cell_)) + 1;
  ny_ = static_cast<int>(std::floor(b.height() / cell_)) + 1;
  buckets_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    const Point2 rel = (pixels_[i] - grid_origin_) / cell_;
    const int ix = std::clamp(static_cast<int>(std::floor(rel.x())), 0, nx_ - 1);
    const int iy = std::clamp(static_cast<int>(std::floor(rel.y())), 0, ny_ - 1);
    buckets_[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(ix)].push_back(i);
  }
  if (extents_.hex_rings) {
    const double radius = pitch_ * *extents_.hex_rings;
    for (int k = 0; k < 6; ++k) {
      const double angle = std::numbers::pi / 3.0 * k;
      hull_.emplace_back(radius * std::cos(angle), radius * std::sin(angle));
    }
  }
}

Box Lattice::displayBounds() const {
  if (kind_ == LatticeKind::Line) return Box{{pixels_.front().x(), 0.0}, {pixels_.back().x(), 0.0}};
  if (extents_.hex_rings) {
    Box b{hull_.front(), hull_.front()};
    for (const auto& v : hull_) {
      b.lo = b.lo.cwiseMin(v);
      b.hi = b.hi.cwiseMax(v);
    }
    return b;
  }
  return extents_.box;
}

double Lattice::insetDistance(const Point2& p) const {
  if (kind_ == LatticeKind::Line) return std::min(p.x() - pixels_.front().x(), pixels_.back().x() - p.x());
  if (extents_.hex_rings) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < hull_.size(); ++k) {
      const Point2& a = hull_[k];
      const Point2& b = hull_[(k + 1) % hull_.size()];
      const Point2 e = (b - a).normalized();
      const Point2 inward(-e.y(), e.x());
      best = std::min(best, inward.dot(p - a));
    }
    return best;
  }
  const Box& b = extents_.box;
  return std::min({p.x() - b.lo.x(), b.hi.x() - p.x(), p.y() - b.lo.y(), b.hi.y() - p.y()});
}

bool Lattice::inDisplay(const Point2& p, double tol) const { return insetDistance(p) >= -tol * pitch_; }

std::size_t Lattice::nearest(const Point2& p) const {
  const Point2 rel = (p - grid_origin_) / cell_;
  const int cx = static_cast<int>(std::floor(rel.x()));
  const int cy = static_cast<int>(std::floor(rel.y()));
  std::size_t best = pixels_.size();
  double best_d2 = std::numeric_limits<double>::infinity();
  auto consider = [&](std::size_t i) {
    const double d2 = (pixels_[i] - p).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
      best_d2 = d2;
      best = i;
    }
  };
  for (int iy = std::max(cy - 1, 0); iy <= std::min(cy + 1, ny_ - 1); ++iy)
    for (int ix = std::max(cx - 1, 0); ix <= std::min(cx + 1, nx_ - 1); ++ix)
      for (std::size_t i : buckets_[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(ix)])
        consider(i);
  if (best_d2 <= cell_ * cell_) return best;
  // Far from the pixel cloud: the 3x3 neighbourhood is not conclusive.
  best = pixels_.size();
  best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pixels_.size(); ++i) consider(i);
  return best;
}

Lattice makeLattice(LatticeKind kind, double pitch, const Extents& extents) {
  if (!(pitch > 0.0) || !std::isfinite(pitch)) throw LatticeError("pitch must be positive");
  std::vector<Point2> pixels;
  if (extents.hex_rings) {
    if (kind != LatticeKind::Hexagonal) throw LatticeError("hexagonal patch extents require a hexagonal lattice");
    if (*extents.hex_rings < 1) throw LatticeError("degenerate lattice");
    pixels = hexPatchPixels(pitch, *extents.hex_rings);
  } else {
    const Box& box = extents.box;
    const double tol = 1e-9 * pitch;
    if (box.width() < pitch - tol) throw LatticeError("degenerate lattice");
    if (kind != LatticeKind::Line && box.height() < pitch - tol) throw LatticeError("degenerate lattice");
    switch (kind) {
      case LatticeKind::Line: pixels = linePixels(pitch, box); break;
      case LatticeKind::Square: pixels = squarePixels(pitch, box); break;
      case LatticeKind::Hexagonal: pixels = hexBoxPixels(pitch, box); break;
    }
  }
  return Lattice(kind, pitch, extents, std::move(pixels));
}

Extents mirrorAlignedBox(LatticeKind kind, double pitch, double half_width) {
  double step_x = pitch;
  double step_y = pitch;
  if (kind == LatticeKind::Hexagonal) {
    step_x = pitch / 2.0;
    step_y = pitch * kSqrt3 / 2.0;
  }
  const double wx = std::ceil(half_width / step_x - 1e-9) * step_x;
  const double wy = std::ceil(half_width / step_y - 1e-9) * step_y;
  return Extents::rect({-wx, -wy}, {wx, wy});
}

PixelHeights samplePixels(const BumpField1Dd& field, const Lattice& lattice) {
  PixelHeights h(static_cast<Eigen::Index>(lattice.size()));
  for (std::size_t i = 0; i < lattice.size(); ++i) h[static_cast<Eigen::Index>(i)] = bump1d(lattice.pixels()[i].x(), field);
  return h;
}

PixelHeights samplePixels(const BumpField2Dd& field, const Lattice& lattice) {
  PixelHeights h(static_cast<Eigen::Index>(lattice.size()));
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const Point2& p = lattice.pixels()[i];
    h[static_cast<Eigen::Index>(i)] = bump2d(p.x(), p.y(), field);
  }
  return h;
}

}  // namespace hapticlab
