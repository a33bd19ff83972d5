#include "hapticlab/distortion.hpp"

#include "hapticlab/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

namespace hapticlab {

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string toString(Metric metric) { return metric == Metric::Dp ? "Dp" : "Ds"; }
std::string toString(Region region) { return region == Region::Full ? "full" : "interior"; }

Region regionFromString(const std::string& name) {
  if (name == "full") return Region::Full;
  if (name == "interior") return Region::Interior;
  throw std::invalid_argument("unknown region '" + name + "' (expected full or interior)");
}

namespace {

constexpr double kInvPhi = 0.6180339887498949;

std::size_t highestPixel(const PixelHeights& heights) {
  if (heights.size() == 0) throw NoPeakError();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < heights.size(); ++i)
    if (heights[i] > heights[best]) best = i;
  if (!(heights[best] > 0.0)) {
    if ((heights.array() == 0.0).all()) throw NoPeakError();
  }
  return static_cast<std::size_t>(best);
}

// Golden-section maximum of g on [a, b]; returns the best abscissa seen.
template <typename G>
double goldenMax(G&& g, double a, double b, double tol, double start, double start_value) {
  double best = start;
  double best_value = start_value;
  auto consider = [&](double x, double v) {
    if (v > best_value || (v == best_value && x < best)) {
      best = x;
      best_value = v;
    }
  };
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = g(c);
  double fd = g(d);
  consider(c, fc);
  consider(d, fd);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = g(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = g(d);
      consider(d, fd);
    }
  }
  return best;
}

}  // namespace

PeakResult findPeakStaircase(const PixelHeights& heights, const Lattice& lattice) {
  const std::size_t i = highestPixel(heights);
  return {lattice.pixels()[i], heights[static_cast<Eigen::Index>(i)], true};
}

PeakResult findPeakVertex(const PixelHeights& heights, const Lattice& lattice) {
  const std::size_t i = highestPixel(heights);
  return {lattice.pixels()[i], heights[static_cast<Eigen::Index>(i)], false};
}

PeakResult findPeak(const std::function<double(double)>& f, double lo, double hi, double wavelength) {
  if (!(hi >= lo)) throw std::invalid_argument("peak search interval is empty");
  const auto n = static_cast<long>(std::max(2.0, std::ceil(512.0 * (hi - lo) / wavelength)));
  const double h = (hi - lo) / static_cast<double>(n);
  long best = 0;
  double best_value = f(lo);
  bool all_zero = best_value == 0.0;
  for (long i = 1; i <= n; ++i) {
    const double x = i == n ? hi : lo + static_cast<double>(i) * h;
    const double v = f(x);
    all_zero = all_zero && v == 0.0;
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  if (all_zero) throw NoPeakError();
  const double xb = best == n ? hi : lo + static_cast<double>(best) * h;
  const double a = std::max(lo, xb - h);
  const double b = std::min(hi, xb + h);
  const double x = goldenMax(f, a, b, 1e-4 * wavelength, xb, best_value);
  return {Point2(x, 0.0), f(x), false};
}

PeakResult findPeak(const std::function<double(const Point2&)>& f, const Box& bounds, double wavelength) {
  const double spacing = wavelength / 64.0;
  const auto nx = static_cast<long>(std::max(1.0, std::ceil(bounds.width() / spacing)));
  const auto ny = static_cast<long>(std::max(1.0, std::ceil(bounds.height() / spacing)));
  const double hx = bounds.width() / static_cast<double>(nx);
  const double hy = bounds.height() / static_cast<double>(ny);
  Point2 best = bounds.lo;
  double best_value = f(best);
  bool all_zero = best_value == 0.0;
  for (long j = 0; j <= ny; ++j) {
    for (long i = 0; i <= nx; ++i) {
      const Point2 p(i == nx ? bounds.hi.x() : bounds.lo.x() + static_cast<double>(i) * hx,
                     j == ny ? bounds.hi.y() : bounds.lo.y() + static_cast<double>(j) * hy);
      const double v = f(p);
      all_zero = all_zero && v == 0.0;
      if (v > best_value) {
        best = p;
        best_value = v;
      }
    }
  }
  if (all_zero) throw NoPeakError();
  const double tol = 1e-4 * wavelength;
  for (int round = 0; round < 50; ++round) {
    const Point2 before = best;
    {
      const double y = best.y();
      auto g = [&](double x) { return f(Point2(x, y)); };
      const double x = goldenMax(g, std::max(bounds.lo.x(), best.x() - hx), std::min(bounds.hi.x(), best.x() + hx), tol,
                                 best.x(), best_value);
      best.x() = x;
      best_value = f(best);
    }
    {
      const double x = best.x();
      auto g = [&](double y) { return f(Point2(x, y)); };
      const double y = goldenMax(g, std::max(bounds.lo.y(), best.y() - hy), std::min(bounds.hi.y(), best.y() + hy), tol,
                                 best.y(), best_value);
      best.y() = y;
      best_value = f(best);
    }
    if ((best - before).norm() < tol) break;
  }
  return {best, best_value, false};
}

Point2 drawPeak(const Lattice& lattice, Region region, double wavelength, std::uint64_t seed, std::uint64_t sample) {
  const SampleStream stream(seed, sample);
  const double margin = region == Region::Interior ? wavelength / 2.0 : 0.0;
  if (lattice.is1d()) {
    const double lo = lattice.pixels().front().x() + margin;
    const double hi = lattice.pixels().back().x() - margin;
    if (!(hi >= lo)) throw std::invalid_argument("display too small for interior peaks");
    return Point2(lo + stream.uniform(0) * (hi - lo), 0.0);
  }
  Box box = lattice.displayBounds();
  const bool boxed = !lattice.extents().hex_rings.has_value();
  if (boxed) {
    box.lo.array() += margin;
    box.hi.array() -= margin;
    if (!(box.width() >= 0.0 && box.height() >= 0.0)) throw std::invalid_argument("display too small for interior peaks");
  }
  for (std::uint64_t k = 0; k < 4096; ++k) {
    const Point2 p(box.lo.x() + stream.uniform(2 * k) * box.width(), box.lo.y() + stream.uniform(2 * k + 1) * box.height());
    if (boxed) return p;
    if (lattice.insetDistance(p) >= margin) return p;
  }
  throw std::invalid_argument("display too small for interior peaks");
}

namespace {

struct SampleOutcome {
  double position = 0;  // |x_r - X| / l
  double shape = 0;
  bool no_peak = false;
};

class SampleEvaluator {
 public:
  SampleEvaluator(const Lattice& lattice, const DistortionSetup& setup) : lattice_(lattice), setup_(setup) {
    if (!(setup.wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
    if (!(setup.amplitude > 0.0)) throw std::invalid_argument("amplitude must be positive");
    if (setup.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    setup.model.validate();
    const int n1 = setup.quad_intervals_1d;
    const int n2 = setup.quad_intervals_2d;
    if (n1 < 256 || n1 % 2) throw std::invalid_argument("1D quadrature needs an even number of intervals >= 256");
    if (n2 < 16 || n2 % 2) throw std::invalid_argument("2D quadrature needs an even number of intervals >= 16");
    const int n = lattice.is1d() ? n1 : n2;
    weights_ = simpsonWeights(n, 0.0, 1.0);
    if (!lattice.is1d() && setup.model.variant == ModelVariant::Linear) mesh_.emplace(lattice);
    snap_ = 1e-12 * lattice.pitch();
  }

  SampleOutcome evaluate(std::uint64_t i, bool want_position, bool want_shape) const {
    const Point2 peak = drawPeak(lattice_, setup_.region, setup_.wavelength, setup_.seed, i);
    return lattice_.is1d() ? evaluate1d(peak.x(), want_position, want_shape) : evaluate2d(peak, want_position, want_shape);
  }

 private:
  SampleOutcome evaluate1d(double X, bool want_position, bool want_shape) const {
    const double l = setup_.wavelength;
    const BumpField1Dd field{X, setup_.amplitude, l};
    const PixelHeights heights = samplePixels(field, lattice_);
    std::optional<CrsProfile1D> crs;
    if (setup_.model.variant == ModelVariant::Crs) crs.emplace(reconstructCrs1d(field, lattice_, setup_.model.crs));
    auto psi = [&](double x) -> double {
      if (!lattice_.inDisplay(x, snap_)) return 0.0;
      switch (setup_.model.variant) {
        case ModelVariant::PixelOnly: return reconstructNearest(heights, lattice_, x);
        case ModelVariant::Linear: {
          const double lo = lattice_.pixels().front().x();
          const double hi = lattice_.pixels().back().x();
          return reconstructLinear(heights, lattice_, std::clamp(x, lo, hi));
        }
        case ModelVariant::Crs: return (*crs)(x);
      }
      return 0.0;
    };
    SampleOutcome out;
    if (want_position) {
      try {
        PeakResult pk;
        switch (setup_.model.variant) {
          case ModelVariant::PixelOnly: pk = findPeakStaircase(heights, lattice_); break;
          case ModelVariant::Linear: pk = findPeakVertex(heights, lattice_); break;
          case ModelVariant::Crs:
            pk = findPeak(psi, lattice_.pixels().front().x(), lattice_.pixels().back().x(), l);
            break;
        }
        out.position = std::abs(pk.location.x() - X) / l;
      } catch (const NoPeakError&) {
        out.no_peak = true;
        out.position = 0.5 * lattice_.pitch() / l;
      }
    }
    if (want_shape) {
      double num = 0.0;
      double den = 0.0;
      const Eigen::Index n = weights_.size() - 1;
      for (Eigen::Index j = 0; j <= n; ++j) {
        const double x = X - l / 2 + l * static_cast<double>(j) / static_cast<double>(n);
        if (!lattice_.inDisplay(x, snap_)) continue;
        const double phi = bump1d(x, field);
        const double diff = phi - psi(x);
        num += weights_[j] * diff * diff;
        den += weights_[j] * phi * phi;
      }
      out.shape = den > 0.0 ? std::sqrt(num / den) : 0.0;
    }
    return out;
  }

  SampleOutcome evaluate2d(const Point2& X, bool want_position, bool want_shape) const {
    const double l = setup_.wavelength;
    const BumpField2Dd field{X, setup_.amplitude, l};
    const PixelHeights heights = samplePixels(field, lattice_);
    std::optional<CrsSurface2D> crs;
    if (setup_.model.variant == ModelVariant::Crs) crs.emplace(reconstructCrs2d(field, lattice_, setup_.model.crs));
    auto psi = [&](const Point2& p) -> double {
      if (!lattice_.inDisplay(p, snap_)) return 0.0;
      switch (setup_.model.variant) {
        case ModelVariant::PixelOnly: return reconstructNearest(heights, lattice_, p);
        case ModelVariant::Linear: {
          try {
            return reconstructLinear(heights, *mesh_, p);
          } catch (const ExtrapolationError&) {
            return 0.0;
          }
        }
        case ModelVariant::Crs: return (*crs)(p);
      }
      return 0.0;
    };
    SampleOutcome out;
    if (want_position) {
      try {
        PeakResult pk;
        switch (setup_.model.variant) {
          case ModelVariant::PixelOnly: pk = findPeakStaircase(heights, lattice_); break;
          case ModelVariant::Linear: pk = findPeakVertex(heights, lattice_); break;
          case ModelVariant::Crs: pk = findPeak(psi, lattice_.displayBounds(), l); break;
        }
        out.position = (pk.location - X).norm() / l;
      } catch (const NoPeakError&) {
        out.no_peak = true;
        out.position = 0.5 * lattice_.pitch() / l;
      }
    }
    if (want_shape) {
      double num = 0.0;
      double den = 0.0;
      const Eigen::Index n = weights_.size() - 1;
      for (Eigen::Index j = 0; j <= n; ++j) {
        const double y = X.y() - l / 2 + l * static_cast<double>(j) / static_cast<double>(n);
        for (Eigen::Index i = 0; i <= n; ++i) {
          const double x = X.x() - l / 2 + l * static_cast<double>(i) / static_cast<double>(n);
          const Point2 p(x, y);
          if (!lattice_.inDisplay(p, snap_)) continue;
          const double phi = bump2d(x, y, field);
          const double diff = phi - psi(p);
          const double w = weights_[i] * weights_[j];
          num += w * diff * diff;
          den += w * phi * phi;
        }
      }
      out.shape = den > 0.0 ? std::sqrt(num / den) : 0.0;
    }
    return out;
  }

  const Lattice& lattice_;
  const DistortionSetup& setup_;
  Eigen::VectorXd weights_;
  std::optional<Triangulation> mesh_;
  double snap_ = 0;
};

struct Accumulator {
  double sum = 0;
  double sum_sq = 0;
  std::size_t n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double standardError() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

DistortionEstimate makeEstimate(Metric metric, const Accumulator& acc, const Lattice& lattice, const DistortionSetup& setup,
                                std::size_t no_peak) {
  DistortionEstimate e;
  e.metric = metric;
  e.value = acc.mean();
  e.standard_error = acc.standardError();
  e.n_samples = acc.n;
  e.d_over_l = lattice.pitch() / setup.wavelength;
  e.variant = setup.model.variant;
  e.rng_seed = setup.seed;
  e.region = setup.region;
  e.no_peak_samples = no_peak;
  return e;
}

DistortionPair run(const Lattice& lattice, const DistortionSetup& setup, bool want_position, bool want_shape) {
  const SampleEvaluator eval(lattice, setup);
  Accumulator pos;
  Accumulator shape;
  std::size_t no_peak = 0;
  for (std::size_t i = 0; i < setup.n_samples; ++i) {
    const SampleOutcome s = eval.evaluate(i, want_position, want_shape);
    if (want_position) {
      if (s.no_peak) ++no_peak;
      if (!s.no_peak || setup.cap_no_peak) pos.add(s.position);
    }
    if (want_shape) shape.add(s.shape);
  }
  return {makeEstimate(Metric::Dp, pos, lattice, setup, no_peak), makeEstimate(Metric::Ds, shape, lattice, setup, 0)};
}

}  // namespace

DistortionEstimate positionDistortion(const Lattice& lattice, const DistortionSetup& setup) {
  return run(lattice, setup, true, false).position;
}

DistortionEstimate shapeDistortion(const Lattice& lattice, const DistortionSetup& setup) {
  return run(lattice, setup, false, true).shape;
}

DistortionPair distortion(const Lattice& lattice, const DistortionSetup& setup) { return run(lattice, setup, true, true); }

DistortionEstimate positionDistortion(const ReconstructionModel& model, const Lattice& lattice, double wavelength,
                                      std::size_t n_samples, std::uint64_t seed) {
  DistortionSetup setup;
  setup.model = model;
  setup.wavelength = wavelength;
  setup.n_samples = n_samples;
  setup.seed = seed;
  return positionDistortion(lattice, setup);
}

DistortionEstimate shapeDistortion(const ReconstructionModel& model, const Lattice& lattice, double wavelength,
                                   std::size_t n_samples, std::uint64_t seed) {
  DistortionSetup setup;
  setup.model = model;
  setup.wavelength = wavelength;
  setup.n_samples = n_samples;
  setup.seed = seed;
  return shapeDistortion(lattice, setup);
}

PowerLawFit fitPowerLaw(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 4) throw std::invalid_argument("power-law fit needs at least four points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [x, y] = points[static_cast<std::size_t>(i)];
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y))
      throw std::invalid_argument("power-law fit needs positive finite points");
    a(i, 0) = 1.0;
    a(i, 1) = std::log(x);
    b[i] = std::log(y);
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
  PowerLawFit fit;
  fit.coefficient = std::exp(coef[0]);
  fit.exponent = coef[1];
  fit.residual = std::sqrt((a * coef - b).squaredNorm() / static_cast<double>(n));
  return fit;
}

Lattice sweepLattice(const SweepConfig& config, double pitch) {
  const double l = config.setup.wavelength;
  if (config.hex_rings) {
    if (config.lattice != LatticeKind::Hexagonal) throw std::invalid_argument("hex_rings requires a hexagonal lattice");
    return makeLattice(LatticeKind::Hexagonal, pitch, Extents::hexPatch(*config.hex_rings));
  }
  if (config.lattice == LatticeKind::Line) {
    const double length = std::ceil(config.extent_wavelengths * l / pitch - 1e-9) * pitch;
    return makeLattice(LatticeKind::Line, pitch, Extents::line(length));
  }
  return makeLattice(config.lattice, pitch, mirrorAlignedBox(config.lattice, pitch, config.extent_wavelengths * l / 2.0));
}

SweepTable distortionSweep(const SweepConfig& config) {
  if (config.d_over_l.empty()) throw std::invalid_argument("d_over_l grid is empty");
  for (double r : config.d_over_l)
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("d_over_l values must be positive");
  SweepTable table;
  for (ModelVariant model : config.models) {
    for (Region region : config.regions) {
      std::vector<std::pair<double, double>> dp_points;
      std::vector<std::pair<double, double>> ds_points;
      for (double ratio : config.d_over_l) {
        const Lattice lattice = sweepLattice(config, ratio * config.setup.wavelength);
        DistortionSetup setup = config.setup;
        setup.model.variant = model;
        setup.region = region;
        if (model == ModelVariant::Crs) setup.n_samples = config.crs_samples;
        const DistortionPair pair = distortion(lattice, setup);
        table.rows.push_back({model, config.lattice, pair.position});
        table.rows.push_back({model, config.lattice, pair.shape});
        if (pair.position.value > 0.0) dp_points.emplace_back(ratio, pair.position.value);
        if (pair.shape.value > 0.0) ds_points.emplace_back(ratio, pair.shape.value);
      }
      if (dp_points.size() >= 4) table.fits.push_back({model, config.lattice, Metric::Dp, region, fitPowerLaw(dp_points)});
      if (ds_points.size() >= 4) table.fits.push_back({model, config.lattice, Metric::Ds, region, fitPowerLaw(ds_points)});
    }
  }
  return table;
}

}  // namespace hapticlab
