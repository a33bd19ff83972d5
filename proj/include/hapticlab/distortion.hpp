#pragma once

#include "hapticlab/reconstruction.hpp"
#include "hapticlab/shape_field.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hapticlab {

/// SplitMix64 finaliser applied to x + golden gamma.
std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based stream for one Monte Carlo sample: draw k of sample i under a
/// seed is a pure function of (seed, i, k), so samples can be evaluated in any
/// order or in parallel and still agree bit for bit.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t sample) : key_(splitmix64(splitmix64(seed) ^ sample)) {}
  std::uint64_t bits(std::uint64_t draw) const { return splitmix64(key_ ^ splitmix64(draw)); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t draw) const { return static_cast<double>(bits(draw) >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
};

enum class Metric { Dp, Ds };
/// Full: peaks drawn over the whole display. Interior: peaks at least l/2 inside it.
enum class Region { Full, Interior };

std::string toString(Metric metric);
std::string toString(Region region);
Region regionFromString(const std::string& name);

struct DistortionEstimate {
  Metric metric = Metric::Dp;
  double value = 0;
  double standard_error = 0;
  std::size_t n_samples = 0;
  double d_over_l = 0;
  ModelVariant variant = ModelVariant::PixelOnly;
  std::uint64_t rng_seed = 0;
  Region region = Region::Full;
  std::size_t no_peak_samples = 0;
};

struct PeakResult {
  Point2 location{0, 0};  // 1D results use x only
  double height = 0;
  bool plateau = false;
};

class NoPeakError : public std::domain_error {
 public:
  NoPeakError() : std::domain_error("no peak") {}
};

/// Staircase: the pixel owning the highest plateau (plateau flag set).
PeakResult findPeakStaircase(const PixelHeights& heights, const Lattice& lattice);
/// Piecewise-linear or barycentric: the highest vertex.
PeakResult findPeakVertex(const PixelHeights& heights, const Lattice& lattice);
/// Continuous 1D: scan with at least 512 points per wavelength, then golden section to 1e-4 l.
PeakResult findPeak(const std::function<double(double)>& f, double lo, double hi, double wavelength);
/// Continuous 2D: grid scan at l/64 spacing, then coordinate descent with golden section to 1e-4 l.
PeakResult findPeak(const std::function<double(const Point2&)>& f, const Box& bounds, double wavelength);

struct DistortionSetup {
  ReconstructionModel model{};
  double wavelength = 90;
  double amplitude = 1;
  Region region = Region::Full;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 1;
  int quad_intervals_1d = 512;  // Simpson intervals across the window
  int quad_intervals_2d = 128;  // per axis over the window's bounding square
  bool cap_no_peak = true;      // a sample with no peak counts as d/2; otherwise it is dropped
};

struct DistortionPair {
  DistortionEstimate position;
  DistortionEstimate shape;
};

/// Peak location for sample i: uniform over the display (or its interior).
Point2 drawPeak(const Lattice& lattice, Region region, double wavelength, std::uint64_t seed, std::uint64_t sample);

DistortionEstimate positionDistortion(const Lattice& lattice, const DistortionSetup& setup);
DistortionEstimate shapeDistortion(const Lattice& lattice, const DistortionSetup& setup);
/// Both metrics from one pass over the same samples.
DistortionPair distortion(const Lattice& lattice, const DistortionSetup& setup);

DistortionEstimate positionDistortion(const ReconstructionModel& model, const Lattice& lattice, double wavelength,
                                      std::size_t n_samples, std::uint64_t seed);
DistortionEstimate shapeDistortion(const ReconstructionModel& model, const Lattice& lattice, double wavelength,
                                   std::size_t n_samples, std::uint64_t seed);

struct PowerLawFit {
  double coefficient = 0;
  double exponent = 0;
  double residual = 0;  // RMS of the log residuals
};

/// Least squares on (log x, log y). Needs at least four points, all positive.
PowerLawFit fitPowerLaw(const std::vector<std::pair<double, double>>& points);

struct SweepConfig {
  std::vector<ModelVariant> models{ModelVariant::PixelOnly, ModelVariant::Linear, ModelVariant::Crs};
  std::vector<double> d_over_l{0.1, 0.2, 0.3, 0.4, 0.5};
  LatticeKind lattice = LatticeKind::Line;
  std::optional<int> hex_rings;    // use the hexagonal patch device instead of a box
  double extent_wavelengths = 10;  // display length (1D) or box side (2D) in wavelengths
  std::vector<Region> regions{Region::Full, Region::Interior};
  DistortionSetup setup{};
  std::size_t crs_samples = 200;   // sample count for CRS rows
};

/// Display used by the sweep for one pitch. Pixels start at 0 in 1D; 2D boxes
/// are centred on the origin with edges on lattice mirror lines.
Lattice sweepLattice(const SweepConfig& config, double pitch);

struct SweepRow {
  ModelVariant model;
  LatticeKind lattice;
  DistortionEstimate estimate;
};

struct SweepFit {
  ModelVariant model;
  LatticeKind lattice;
  Metric metric;
  Region region;
  PowerLawFit fit;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<SweepFit> fits;  // one per model, metric and region with at least four d/l values
};

SweepTable distortionSweep(const SweepConfig& config);

}  // namespace hapticlab
