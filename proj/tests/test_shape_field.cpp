#include "hapticlab/shape_field.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hapticlab;

TEST_SUITE("shape_field") {

TEST_CASE("raised cosine values") {
  const BumpField1Dd f{10.0, 2.0, 90.0};
  CHECK(bump1d(10.0, f) == doctest::Approx(2.0));
  CHECK(bump1d(10.0 + 45.0, f) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(bump1d(10.0 + 45.001, f) == 0.0);
  CHECK(bump1d(10.0 - 22.5, f) == doctest::Approx(1.0));

  const BumpField2Dd g{{3.0, -4.0}, 5.0, 90.0};
  CHECK(bump2d(3.0, -4.0, g) == doctest::Approx(5.0));
  CHECK(bump2d(3.0 + 27.0, -4.0 + 36.0, g) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(bump2d(3.0 + 27.0, -4.0 + 36.1, g) == 0.0);
}

TEST_CASE("bump stays within [0, A]") {
  const BumpField1Dd f{0.0, 1.7, 30.0};
  for (int i = -400; i <= 400; ++i) {
    const double v = bump1d(0.1 * i, f);
    CHECK(v >= 0.0);
    CHECK(v <= 1.7);
  }
}

TEST_CASE("bump integral is A l / 2") {
  const BumpField1Dd f{7.0, 1.3, 90.0};
  // Composite Simpson, 4096 intervals over the support.
  const int n = 4096;
  const double a = f.peak - 45.0;
  const double h = 90.0 / n;
  double sum = bump1d(a, f) + bump1d(a + 90.0, f);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * bump1d(a + i * h, f);
  CHECK(std::abs(sum * h / 3.0 - 1.3 * 90.0 / 2.0) / (1.3 * 45.0) < 1e-9);
}

TEST_CASE("translation equivariance is exact") {
  const BumpField1Dd f{12.5, 1.0, 90.0};
  for (double s : {-7.0, 0.5, 31.25}) {
    const BumpField1Dd g{f.peak + s, 1.0, 90.0};
    for (double x : {-20.0, 0.0, 12.5, 30.0, 50.0}) CHECK(bump1d(x + s, g) == bump1d(x, f));
  }
}

TEST_CASE("slopes match finite differences") {
  const BumpField1Dd f{0.0, 2.0, 90.0};
  const BumpField2Dd g{{1.0, 2.0}, 2.0, 90.0};
  const double h = 1e-6;
  for (double x : {-30.0, -10.0, 5.0, 40.0}) {
    CHECK(bump1dSlope(x, f) == doctest::Approx((bump1d(x + h, f) - bump1d(x - h, f)) / (2 * h)).epsilon(1e-6));
  }
  const Point2 p(10.0, -15.0);
  const Point2 grad = bump2dGradient(p.x(), p.y(), g);
  CHECK(grad.x() == doctest::Approx((bump2d(p.x() + h, p.y(), g) - bump2d(p.x() - h, p.y(), g)) / (2 * h)).epsilon(1e-6));
  CHECK(grad.y() == doctest::Approx((bump2d(p.x(), p.y() + h, g) - bump2d(p.x(), p.y() - h, g)) / (2 * h)).epsilon(1e-6));
  CHECK(bump2dGradient(1.0, 2.0, g).norm() == 0.0);
}

TEST_CASE("line lattice of five pixels") {
  const Lattice lat = makeLattice(LatticeKind::Line, 30.0, Extents::line(120.0));
  REQUIRE(lat.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(lat.pixels()[i].x() == doctest::Approx(30.0 * i));
    CHECK(lat.pixels()[i].y() == 0.0);
  }
}

TEST_CASE("square lattice 3x3") {
  const Lattice lat = makeLattice(LatticeKind::Square, 1.0, Extents::rect({0, 0}, {2, 2}));
  REQUIRE(lat.size() == 9);
  // Row-major from low y.
  CHECK(lat.pixels()[1].x() == doctest::Approx(1.0));
  CHECK(lat.pixels()[3].y() == doctest::Approx(1.0));
}

TEST_CASE("hexagonal patch counts") {
  for (int k = 1; k <= 6; ++k) {
    const Lattice lat = makeLattice(LatticeKind::Hexagonal, 1.0, Extents::hexPatch(k));
    CHECK(lat.size() == static_cast<std::size_t>(3 * k * k + 3 * k + 1));
  }
  const Lattice lat = makeLattice(LatticeKind::Hexagonal, 30.0, Extents::hexPatch(2));
  // Nearest-neighbour distance equals the pitch.
  for (std::size_t i = 0; i < lat.size(); ++i) {
    double best = 1e300;
    for (std::size_t j = 0; j < lat.size(); ++j)
      if (i != j) best = std::min(best, (lat.pixels()[i] - lat.pixels()[j]).norm());
    CHECK(best == doctest::Approx(30.0));
  }
}

TEST_CASE("degenerate lattices are rejected") {
  CHECK_THROWS_AS(makeLattice(LatticeKind::Line, 30.0, Extents::line(10.0)), LatticeError);
  CHECK_THROWS_AS(makeLattice(LatticeKind::Line, 0.0, Extents::line(10.0)), LatticeError);
  CHECK_THROWS_AS(makeLattice(LatticeKind::Square, 1.0, Extents::rect({0, 0}, {0.5, 3})), LatticeError);
  CHECK_THROWS_AS(makeLattice(LatticeKind::Hexagonal, 1.0, Extents::hexPatch(0)), LatticeError);
}

TEST_CASE("nearest pixel ties go to the lower index") {
  const Lattice lat = makeLattice(LatticeKind::Line, 30.0, Extents::line(120.0));
  CHECK(lat.nearest(15.0) == 0);
  CHECK(lat.nearest(15.0001) == 1);
  CHECK(lat.nearest(-100.0) == 0);
  CHECK(lat.nearest(1000.0) == 4);
}

TEST_CASE("mirror aligned boxes have mirror-line edges") {
  const Extents sq = mirrorAlignedBox(LatticeKind::Square, 10.0, 42.0);
  CHECK(sq.box.hi.x() >= 42.0);
  CHECK(std::fmod(sq.box.hi.x(), 5.0) == doctest::Approx(0.0));
  const Extents hx = mirrorAlignedBox(LatticeKind::Hexagonal, 10.0, 42.0);
  CHECK(hx.box.hi.y() >= 42.0);
  CHECK(std::fmod(hx.box.hi.x(), 5.0) == doctest::Approx(0.0));
  CHECK(std::fmod(hx.box.hi.y() / (std::sqrt(3.0) / 2.0 * 10.0), 1.0) == doctest::Approx(0.0));
}

TEST_CASE("sampled pixels") {
  const Lattice lat = makeLattice(LatticeKind::Line, 30.0, Extents::line(120.0));
  SUBCASE("peak on a pixel") {
    const PixelHeights h = samplePixels(BumpField1Dd{60.0, 1.5, 90.0}, lat);
    CHECK(h[2] == doctest::Approx(1.5));
  }
  SUBCASE("midway at d/l = 1/2") {
    const PixelHeights h = samplePixels(BumpField1Dd{45.0, 1.0, 60.0}, lat);
    CHECK(h[1] == doctest::Approx(0.5));
    CHECK(h[2] == doctest::Approx(0.5));
  }
  SUBCASE("arbitrary offset agrees with pointwise evaluation") {
    const BumpField1Dd f{47.3, 0.8, 90.0};
    const PixelHeights h = samplePixels(f, lat);
    for (std::size_t i = 0; i < lat.size(); ++i) {
      CHECK(h[static_cast<Eigen::Index>(i)] == bump1d(lat.pixels()[i].x(), f));
      CHECK(h[static_cast<Eigen::Index>(i)] >= 0.0);
    }
  }
}

TEST_CASE("lattice kind names round trip") {
  for (auto k : {LatticeKind::Line, LatticeKind::Square, LatticeKind::Hexagonal})
    CHECK((latticeKindFromString(toString(k)) == k));
  CHECK_THROWS(latticeKindFromString("triangle"));
}

}
