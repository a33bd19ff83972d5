#include "hapticlab/distortion.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hapticlab;

namespace {

// Mean distance to the centre of a square of side s and of a regular hexagon of apothem a.
double squareMeanDistance(double s) { return s * (std::sqrt(2.0) + std::log(1.0 + std::sqrt(2.0))) / 6.0; }
double hexagonMeanDistance(double a) { return a * (2.0 / std::sqrt(3.0)) * (1.0 / 3.0 + std::log(3.0) / 4.0); }

Lattice line(double d, double wavelengths = 10.0, double l = 90.0) {
  return makeLattice(LatticeKind::Line, d, Extents::line(std::ceil(wavelengths * l / d) * d));
}

DistortionSetup setupFor(ModelVariant v, std::size_t n, std::uint64_t seed = 1) {
  DistortionSetup s;
  s.model.variant = v;
  s.n_samples = n;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_SUITE("distortion") {

TEST_CASE("splitmix64 reference values") {
  // First outputs of the reference SplitMix64 generator seeded with 0.
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("sample streams are pure functions of seed, sample and draw") {
  const SampleStream a(42, 7), b(42, 7), c(42, 8), e(43, 7);
  CHECK(a.bits(0) == b.bits(0));
  CHECK(a.bits(3) == b.bits(3));
  CHECK(a.bits(0) != c.bits(0));
  CHECK(a.bits(0) != e.bits(0));
  double sum = 0.0;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    const double u = SampleStream(1, i).uniform(0);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("peak finders") {
  const Lattice lat = makeLattice(LatticeKind::Line, 30.0, Extents::line(60.0));
  PixelHeights h(3);
  h << 0.0, 1.0, 0.0;
  const PeakResult s = findPeakStaircase(h, lat);
  CHECK(s.location.x() == 30.0);
  CHECK(s.plateau);
  CHECK(findPeakVertex(h, lat).location.x() == 30.0);
  CHECK_THROWS_AS(findPeakStaircase(PixelHeights::Zero(3), lat), NoPeakError);
  CHECK_THROWS_AS(findPeakVertex(PixelHeights::Zero(3), lat), NoPeakError);

  // Ties go to the smaller coordinate.
  PixelHeights tie(3);
  tie << 1.0, 0.5, 1.0;
  CHECK(findPeakStaircase(tie, lat).location.x() == 0.0);

  const double l = 90.0;
  const BumpField1Dd f{37.123, 1.0, l};
  const PeakResult c = findPeak([&](double x) { return bump1d(x, f); }, 0.0, 120.0, l);
  CHECK(std::abs(c.location.x() - 37.123) <= 1e-4 * l);
  CHECK(c.height == doctest::Approx(bump1d(c.location.x(), f)));
  CHECK_THROWS_AS(findPeak([](double) { return 0.0; }, 0.0, 120.0, l), NoPeakError);

  const BumpField2Dd g{{-11.7, 23.4}, 1.0, l};
  const PeakResult p = findPeak([&](const Point2& q) { return bump2d(q.x(), q.y(), g); }, Box{{-60, -60}, {60, 60}}, l);
  CHECK((p.location - g.peak).norm() <= 1e-4 * l);
}

TEST_CASE("peaks are drawn inside the requested region") {
  const Lattice lat = line(30.0);
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const double full = drawPeak(lat, Region::Full, 90.0, 5, i).x();
    const double interior = drawPeak(lat, Region::Interior, 90.0, 5, i).x();
    CHECK(full >= 0.0);
    CHECK(full <= 900.0);
    CHECK(interior >= 45.0);
    CHECK(interior <= 855.0);
  }
  const Lattice hex = makeLattice(LatticeKind::Hexagonal, 30.0, Extents::hexPatch(3));
  for (std::uint64_t i = 0; i < 500; ++i) {
    CHECK(hex.insetDistance(drawPeak(hex, Region::Full, 90.0, 5, i)) >= -1e-9);
    CHECK(hex.insetDistance(drawPeak(hex, Region::Interior, 90.0, 5, i)) >= 45.0 - 1e-9);
  }
}

TEST_CASE("pixel-only 1D position distortion is d / 4l") {
  for (double r : {0.1, 0.3, 0.5}) {
    const Lattice lat = line(90.0 * r);
    const DistortionEstimate e = positionDistortion(lat, setupFor(ModelVariant::PixelOnly, 20000));
    CHECK(std::abs(e.value - r / 4.0) <= 3.0 * e.standard_error);
    CHECK(e.d_over_l == doctest::Approx(r));
    CHECK((e.metric == Metric::Dp));
  }
}

TEST_CASE("pixel-only 2D position distortion matches the cell mean distance") {
  const double r = 0.2, l = 90.0, d = r * l;
  SUBCASE("square") {
    const Lattice lat = makeLattice(LatticeKind::Square, d, mirrorAlignedBox(LatticeKind::Square, d, 3.0 * l));
    const DistortionEstimate e = positionDistortion(lat, setupFor(ModelVariant::PixelOnly, 20000));
    CHECK(std::abs(e.value - squareMeanDistance(d) / l) <= 3.0 * e.standard_error);
  }
  SUBCASE("hexagonal") {
    const Lattice lat = makeLattice(LatticeKind::Hexagonal, d, mirrorAlignedBox(LatticeKind::Hexagonal, d, 3.0 * l));
    const DistortionEstimate e = positionDistortion(lat, setupFor(ModelVariant::PixelOnly, 20000));
    CHECK(std::abs(e.value - hexagonMeanDistance(d / 2.0) / l) <= 3.0 * e.standard_error);
  }
}

TEST_CASE("pixel-only 1D shape distortion near 0.994 d/l") {
  const DistortionEstimate e = shapeDistortion(line(18.0), setupFor(ModelVariant::PixelOnly, 4000));
  CHECK(e.value == doctest::Approx(0.199).epsilon(0.05));
}

TEST_CASE("shape distortion decreases with pixel density for every model") {
  for (auto v : {ModelVariant::PixelOnly, ModelVariant::Linear, ModelVariant::Crs}) {
    const std::size_t n = v == ModelVariant::Crs ? 40 : 1000;
    double previous = 1e300;
    for (double r : {0.5, 0.4, 0.3, 0.2}) {
      const DistortionEstimate e = shapeDistortion(line(90.0 * r, 4.0), setupFor(v, n));
      CHECK(e.value < previous);
      CHECK(e.value >= 0.0);
      previous = e.value;
    }
  }
}

TEST_CASE("seed determinism") {
  const Lattice lat = line(30.0);
  for (auto v : {ModelVariant::PixelOnly, ModelVariant::Linear}) {
    const DistortionPair a = distortion(lat, setupFor(v, 500, 9));
    const DistortionPair b = distortion(lat, setupFor(v, 500, 9));
    const DistortionPair c = distortion(lat, setupFor(v, 500, 10));
    CHECK(a.position.value == b.position.value);
    CHECK(a.shape.value == b.shape.value);
    CHECK(a.shape.standard_error == b.shape.standard_error);
    CHECK(a.shape.value != c.shape.value);
    CHECK(a.position.rng_seed == 9);
  }
  const Lattice small = line(30.0, 3.0);
  const DistortionPair a = distortion(small, setupFor(ModelVariant::Crs, 10, 3));
  const DistortionPair b = distortion(small, setupFor(ModelVariant::Crs, 10, 3));
  CHECK(a.shape.value == b.shape.value);
  CHECK(a.position.value == b.position.value);
}

TEST_CASE("a single pass agrees with the per-metric entry points") {
  const Lattice lat = line(30.0);
  const DistortionSetup s = setupFor(ModelVariant::Linear, 300, 4);
  const DistortionPair both = distortion(lat, s);
  CHECK(both.position.value == positionDistortion(lat, s).value);
  CHECK(both.shape.value == shapeDistortion(lat, s).value);
  ReconstructionModel m;
  m.variant = ModelVariant::Linear;
  CHECK(shapeDistortion(m, lat, 90.0, 300, 4).value == both.shape.value);
}

TEST_CASE("standard error shrinks as one over root n") {
  const Lattice lat = line(30.0);
  const double se1 = positionDistortion(lat, setupFor(ModelVariant::PixelOnly, 2000)).standard_error;
  const double se4 = positionDistortion(lat, setupFor(ModelVariant::PixelOnly, 8000)).standard_error;
  CHECK(se1 / se4 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("scale invariance") {
  for (auto v : {ModelVariant::PixelOnly, ModelVariant::Linear}) {
    for (double k : {2.0, 0.5}) {
      DistortionSetup base = setupFor(v, 400, 11);
      DistortionSetup scaled = base;
      scaled.wavelength *= k;
      scaled.amplitude *= k;
      const DistortionPair a = distortion(line(30.0, 5.0), base);
      const DistortionPair b = distortion(line(30.0 * k, 5.0, 90.0 * k), scaled);
      CHECK(a.position.value == b.position.value);
      CHECK(a.shape.value == b.shape.value);
    }
  }
  SUBCASE("2D") {
    DistortionSetup base = setupFor(ModelVariant::Linear, 100, 2);
    DistortionSetup scaled = base;
    scaled.wavelength *= 2.0;
    scaled.amplitude *= 2.0;
    const Lattice a = makeLattice(LatticeKind::Hexagonal, 30.0, Extents::hexPatch(3));
    const Lattice b = makeLattice(LatticeKind::Hexagonal, 60.0, Extents::hexPatch(3));
    CHECK(distortion(a, base).shape.value == distortion(b, scaled).shape.value);
  }
}

TEST_CASE("amplitude invariance") {
  const Lattice lat = line(30.0, 5.0);
  for (auto v : {ModelVariant::PixelOnly, ModelVariant::Linear}) {
    DistortionSetup s = setupFor(v, 400, 6);
    const DistortionPair ref = distortion(lat, s);
    for (double amp : {0.5, 2.0}) {
      s.amplitude = amp;
      const DistortionPair e = distortion(lat, s);
      CHECK(e.position.value == ref.position.value);
      CHECK(e.shape.value == ref.shape.value);
    }
  }
  // The beam solve is nonlinear in the amplitude; the metrics only agree to first order.
  DistortionSetup s = setupFor(ModelVariant::Crs, 20, 6);
  const Lattice small = line(30.0, 3.0);
  s.amplitude = 0.5;
  const double lo = distortion(small, s).shape.value;
  s.amplitude = 1.0;
  const double mid = distortion(small, s).shape.value;
  CHECK(lo == doctest::Approx(mid).epsilon(0.1));
}

TEST_CASE("no-peak samples") {
  // Pitch of twice the wavelength: many bumps fall between pixels.
  const Lattice lat = makeLattice(LatticeKind::Line, 180.0, Extents::line(1800.0));
  DistortionSetup s = setupFor(ModelVariant::PixelOnly, 2000);
  const DistortionEstimate capped = positionDistortion(lat, s);
  s.cap_no_peak = false;
  const DistortionEstimate dropped = positionDistortion(lat, s);
  CHECK(capped.no_peak_samples > 0);
  CHECK(capped.no_peak_samples == dropped.no_peak_samples);
  CHECK(capped.n_samples == 2000);
  CHECK(dropped.n_samples == 2000 - dropped.no_peak_samples);
  // Capped samples count d/2, more than any sample with a peak inside the support.
  CHECK(capped.value > dropped.value);
}

TEST_CASE("power-law fit") {
  std::vector<std::pair<double, double>> pts;
  for (double x : {0.1, 0.2, 0.3, 0.4, 0.5}) pts.emplace_back(x, 2.0 * x * x * x);
  const PowerLawFit f = fitPowerLaw(pts);
  CHECK(f.coefficient == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(f.exponent == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(f.residual < 1e-9);
  CHECK_THROWS_AS(fitPowerLaw({{0.1, 1.0}, {0.2, 2.0}, {0.3, 3.0}}), std::invalid_argument);
  pts[2].second = 0.0;
  CHECK_THROWS_AS(fitPowerLaw(pts), std::invalid_argument);
}

TEST_CASE("pixel-only 1D shape distortion is first order") {
  std::vector<std::pair<double, double>> pts;
  for (double r : {0.1, 0.2, 0.3, 0.4, 0.5})
    pts.emplace_back(r, shapeDistortion(line(90.0 * r), setupFor(ModelVariant::PixelOnly, 2000)).value);
  CHECK(fitPowerLaw(pts).exponent == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sweep table layout") {
  SweepConfig c;
  c.models = {ModelVariant::PixelOnly, ModelVariant::Linear};
  c.regions = {Region::Full};
  c.setup.n_samples = 200;
  const SweepTable t = distortionSweep(c);
  CHECK(t.rows.size() == 2 * 5 * 2);
  CHECK(t.fits.size() == 2 * 2);
  for (const auto& row : t.rows) {
    CHECK((row.lattice == LatticeKind::Line));
    CHECK(row.estimate.n_samples == 200);
  }
  const Lattice lat = sweepLattice(c, 9.0);
  CHECK(lat.pixels().front().x() == 0.0);
  CHECK(lat.pixels().back().x() == doctest::Approx(900.0));
}

}
