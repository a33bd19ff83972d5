#include "hapticlab/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace hapticlab {

std::string toString(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::PixelOnly: return "pixel-only";
    case ModelVariant::Linear: return "linear";
    case ModelVariant::Crs: return "crs";
  }
  return "unknown";
}

ModelVariant modelVariantFromString(const std::string& name) {
  if (name == "pixel-only") return ModelVariant::PixelOnly;
  if (name == "linear") return ModelVariant::Linear;
  if (name == "crs") return ModelVariant::Crs;
  throw std::invalid_argument("unknown model '" + name + "' (expected pixel-only, linear or crs)");
}

double reconstructNearest(const PixelHeights& heights, const Lattice& lattice, const Point2& p) {
  return heights[static_cast<Eigen::Index>(lattice.nearest(p))];
}

double reconstructNearest(const PixelHeights& heights, const Lattice& lattice, double x) {
  return heights[static_cast<Eigen::Index>(lattice.nearest(x))];
}

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

std::optional<std::size_t> pixelAt(const Lattice& lattice, const Point2& q) {
  const std::size_t i = lattice.nearest(q);
  if ((lattice.pixels()[i] - q).norm() <= 1e-6 * lattice.pitch()) return i;
  return std::nullopt;
}

Eigen::Vector3d barycentric(const Point2& p, const Point2& a, const Point2& b, const Point2& c) {
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const double l1 = ((b.x() - p.x()) * (c.y() - p.y()) - (c.x() - p.x()) * (b.y() - p.y())) / det;
  const double l2 = ((c.x() - p.x()) * (a.y() - p.y()) - (a.x() - p.x()) * (c.y() - p.y())) / det;
  return {l1, l2, 1.0 - l1 - l2};
}

}  // namespace

Triangulation::Triangulation(const Lattice& lattice) : lattice_(lattice) {
  if (lattice.is1d()) throw std::invalid_argument("triangulation needs a 2D lattice");
  const double d = lattice.pitch();
  const auto& px = lattice.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const Point2 p = px[i];
    if (lattice.kind() == LatticeKind::Square) {
      const auto b = pixelAt(lattice, p + Point2(d, 0));
      const auto c = pixelAt(lattice, p + Point2(d, d));
      const auto e = pixelAt(lattice, p + Point2(0, d));
      if (!b || !c || !e) continue;
      const std::size_t cell = cells_.size();
      cells_.push_back({i, *b, *c, *e});
      triangles_.push_back({i, *b, *c});
      triangles_.push_back({i, *c, *e});
      cell_of_.push_back(cell);
      cell_of_.push_back(cell);
    } else {
      const auto e0 = pixelAt(lattice, p + Point2(d, 0));
      const auto e60 = pixelAt(lattice, p + Point2(d / 2, kSqrt3 * d / 2));
      const auto e120 = pixelAt(lattice, p + Point2(-d / 2, kSqrt3 * d / 2));
      if (e0 && e60) {
        cell_of_.push_back(cells_.size());
        cells_.push_back({i, *e0, *e60});
        triangles_.push_back({i, *e0, *e60});
      }
      if (e60 && e120) {
        cell_of_.push_back(cells_.size());
        cells_.push_back({i, *e60, *e120});
        triangles_.push_back({i, *e60, *e120});
      }
    }
  }
  incident_.assign(px.size(), {});
  for (std::size_t t = 0; t < triangles_.size(); ++t)
    for (std::size_t v : triangles_[t]) incident_[v].push_back(t);
}

std::optional<Triangulation::Located> Triangulation::locate(const Point2& p, double tol) const {
  const auto& px = lattice_.pixels();
  auto test = [&](std::size_t t) -> std::optional<Located> {
    const auto& tri = triangles_[t];
    const Eigen::Vector3d w = barycentric(p, px[tri[0]], px[tri[1]], px[tri[2]]);
    if (w.minCoeff() >= -tol) return Located{t, w};
    return std::nullopt;
  };
  const std::size_t v = lattice_.nearest(p);
  for (std::size_t t : incident_[v])
    if (auto hit = test(t)) return hit;
  // Ties on Voronoi boundaries: also try triangles around the neighbours of v.
  for (std::size_t t0 : incident_[v])
    for (std::size_t u : triangles_[t0])
      for (std::size_t t : incident_[u])
        if (auto hit = test(t)) return hit;
  return std::nullopt;
}

double reconstructLinear(const PixelHeights& heights, const Lattice& lattice, double x) {
  const auto& px = lattice.pixels();
  const double tol = 1e-12 * lattice.pitch();
  if (px.empty() || x < px.front().x() - tol || x > px.back().x() + tol) throw ExtrapolationError();
  if (px.size() == 1) return heights[0];
  const auto it = std::upper_bound(px.begin(), px.end(), x, [](double v, const Point2& p) { return v < p.x(); });
  std::size_t i = static_cast<std::size_t>(it - px.begin());
  i = i == 0 ? 0 : std::min(i - 1, px.size() - 2);
  const double x0 = px[i].x();
  const double x1 = px[i + 1].x();
  const double t = std::clamp((x - x0) / (x1 - x0), 0.0, 1.0);
  const double h0 = heights[static_cast<Eigen::Index>(i)];
  const double h1 = heights[static_cast<Eigen::Index>(i + 1)];
  if (t == 0.0) return h0;
  if (t == 1.0) return h1;
  return h0 + t * (h1 - h0);
}

double reconstructLinear(const PixelHeights& heights, const Triangulation& mesh, const Point2& p) {
  const auto loc = mesh.locate(p, 1e-12);
  if (!loc) throw ExtrapolationError();
  const auto& tri = mesh.triangles()[loc->triangle];
  const Eigen::Vector3d& w = loc->barycentric;
  for (int k = 0; k < 3; ++k)
    if (w[k] == 1.0) return heights[static_cast<Eigen::Index>(tri[static_cast<std::size_t>(k)])];
  return w[0] * heights[static_cast<Eigen::Index>(tri[0])] + w[1] * heights[static_cast<Eigen::Index>(tri[1])] +
         w[2] * heights[static_cast<Eigen::Index>(tri[2])];
}

double reconstructLinear(const PixelHeights& heights, const Lattice& lattice, const Point2& p) {
  if (lattice.is1d()) return reconstructLinear(heights, lattice, p.x());
  return reconstructLinear(heights, Triangulation(lattice), p);
}

CrsProfile1D reconstructCrs1d(const BumpField1Dd& field, const Lattice& lattice, const ElasticaSettings& settings) {
  if (!lattice.is1d()) throw std::invalid_argument("reconstructCrs1d needs a line lattice");
  const auto& px = lattice.pixels();
  if (px.size() < 2) throw std::invalid_argument("a beam needs at least two pixels");
  PixelHeights heights = samplePixels(field, lattice);
  std::vector<Point2> constraints;
  constraints.reserve(px.size());
  for (std::size_t i = 0; i < px.size(); ++i) constraints.emplace_back(px[i].x(), heights[static_cast<Eigen::Index>(i)]);
  const double excess = excessAlongSegment(field, px.front().x(), px.back().x()).total;
  const GuideCurve guide = [field](double x) { return bump1d(x, field); };
  ElasticaSolution sol = solveElastica1d(constraints, excess, settings, guide);
  return CrsProfile1D(std::move(sol), std::move(heights), excess);
}

CrsSurface2D::CrsSurface2D(const Lattice& lattice, std::vector<BeamLine> beams, std::vector<ElasticaSolution> profiles)
    : mesh_(lattice), beams_(std::move(beams)), profiles_(std::move(profiles)) {
  if (profiles_.size() != beams_.size()) throw std::invalid_argument("one profile per beam required");
  const auto& px = lattice.pixels();
  std::map<std::pair<std::size_t, std::size_t>, Edge> edges;
  for (std::size_t b = 0; b < beams_.size(); ++b) {
    const BeamLine& beam = beams_[b];
    const Point2 u = beam.direction();
    for (std::size_t k = 0; k + 1 < beam.pixels.size(); ++k) {
      const std::size_t i = beam.pixels[k];
      const std::size_t j = beam.pixels[k + 1];
      edges[{std::min(i, j), std::max(i, j)}] = Edge{b, (px[i] - beam.start).dot(u), px[i], px[j]};
    }
  }
  cell_edges_.resize(mesh_.cells().size());
  for (std::size_t c = 0; c < mesh_.cells().size(); ++c) {
    const auto& corners = mesh_.cells()[c];
    for (std::size_t k = 0; k < corners.size(); ++k) {
      const std::size_t i = corners[k];
      const std::size_t j = corners[(k + 1) % corners.size()];
      const auto it = edges.find({std::min(i, j), std::max(i, j)});
      if (it != edges.end()) cell_edges_[c].push_back(it->second);
    }
  }
}

double CrsSurface2D::operator()(const Point2& p) const {
  const auto loc = mesh_.locate(p, 1e-12);
  if (!loc) return 0.0;
  const auto& edges = cell_edges_[mesh_.cellOf()[loc->triangle]];
  const double snap = 1e-12 * mesh_.lattice().pitch();
  double num = 0.0;
  double den = 0.0;
  for (const Edge& e : edges) {
    const Point2 ab = e.b - e.a;
    const double len = ab.norm();
    const double t = std::clamp((p - e.a).dot(ab) / (len * len), 0.0, 1.0);
    const double dist = (p - (e.a + t * ab)).norm();
    const double value = profiles_[e.beam].height(e.s0 + t * len);
    if (dist <= snap) return value;
    const double w = 1.0 / (dist * dist);
    num += w * value;
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

CrsSurface2D reconstructCrs2d(const BumpField2Dd& field, const Lattice& lattice, const ElasticaSettings& settings) {
  if (lattice.is1d()) throw std::invalid_argument("reconstructCrs2d needs a square or hexagonal lattice");
  std::vector<BeamLine> beams = beamLines(lattice);
  const PixelHeights heights = samplePixels(field, lattice);
  std::vector<ElasticaSolution> profiles;
  profiles.reserve(beams.size());
  for (const BeamLine& beam : beams) {
    const Point2 u = beam.direction();
    std::vector<Point2> constraints;
    for (std::size_t i : beam.pixels)
      constraints.emplace_back((lattice.pixels()[i] - beam.start).dot(u), heights[static_cast<Eigen::Index>(i)]);
    const double excess = excessAlongSegment(field, beam.start, beam.end).total;
    const Point2 origin = beam.start;
    const GuideCurve guide = [field, origin, u](double s) {
      const Point2 q = origin + s * u;
      return bump2d(q.x(), q.y(), field);
    };
    profiles.push_back(solveElastica1d(constraints, excess, settings, guide));
  }
  return CrsSurface2D(lattice, std::move(beams), std::move(profiles));
}

}  // namespace hapticlab
