#pragma once

#include "hapticlab/shape_field.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace hapticlab {

/// Diameter of the rendered contact bump, mm.
constexpr double kRenderWavelength = 90.0;

struct FingertipSample {
  double t_ms = 0;
  double x = 0;  // mm, relative to the display centre
  double y = 0;
  double z = 0;  // press depth, mm
};

struct ServoSpec {
  double travel = 9.0;        // mm
  double seconds_per_cm = 0.08;
  int channels = 0;

  /// Maximum speed in mm per ms.
  double rate() const { return 10.0 / (seconds_per_cm * 1000.0); }
};

/// Straight beam through a row of pixels.
struct BeamLine {
  Point2 start;
  Point2 end;
  std::vector<std::size_t> pixels;  // ordered from start to end
  int family = 0;

  Point2 direction() const { return (end - start).normalized(); }
  double span() const { return (end - start).norm(); }
};

/// Pixel rows of a lattice: one family per lattice direction (line: 1, square: 2, hexagonal: 3).
/// Rows with fewer than two pixels are dropped.
std::vector<BeamLine> beamLines(const Lattice& lattice);

/// Arc-length excess of the surface over the straight segment a→b, split at the midpoint.
struct PathExcess {
  double total = 0;
  double first_half = 0;
  double second_half = 0;
};

PathExcess excessAlongSegment(const BumpField2Dd& field, const Point2& a, const Point2& b, double rel_tol = 1e-6);
PathExcess excessAlongSegment(const BumpField1Dd& field, double a, double b, double rel_tol = 1e-6);

struct BeamCompression {
  double excess = 0;
  double start_end = 0;  // compression applied at BeamLine::start
  double far_end = 0;    // compression applied at BeamLine::end
};

struct CompressionPlan {
  std::vector<BeamCompression> beams;
};

class TravelExceededError : public std::domain_error {
 public:
  TravelExceededError(std::vector<std::size_t> beams, const std::string& what)
      : std::domain_error(what), beams_(std::move(beams)) {}
  const std::vector<std::size_t>& beams() const { return beams_; }

 private:
  std::vector<std::size_t> beams_;
};

/// Per-beam compression; each end takes the excess accumulated on its half.
/// Throws TravelExceededError naming every beam whose end compression exceeds the travel.
CompressionPlan compressionPlan(const BumpField2Dd& field, const std::vector<BeamLine>& beams, const ServoSpec& servo = {});

/// Target surface for a fingertip pose; zero depth gives a flat field.
BumpField2Dd renderTarget(const FingertipSample& sample);

struct ClampEvent {
  std::size_t pixel = 0;
  double requested = 0;
  double commanded = 0;
};

struct PixelCommands {
  PixelHeights heights;
  std::vector<ClampEvent> clamps;
};

/// Field sampled at the pixels and clamped to [0, travel].
PixelCommands pixelCommands(const BumpField2Dd& field, const Lattice& lattice, const ServoSpec& servo = {});

struct ServoState {
  Eigen::VectorXd position;  // mm
};

/// Slew-limited motion toward the commands over dt milliseconds.
ServoState stepServos(const ServoState& state, const Eigen::VectorXd& commands, double dt_ms, const ServoSpec& spec);

struct SessionConfig {
  ServoSpec servo{};
  double dt_ms = 1.0;
  double device_latency_ms = 75.0;
  double vr_latency_ms = 160.0;
  bool vr_trace = false;
  double settle_ms = 200.0;  // simulated time after the last sample
  int hex_rings = 2;
  double pitch = 30.0;
};

struct CommandRecord {
  double t_ms = 0;
  std::size_t channel = 0;  // pixels first, then two boundary servos per beam
  double commanded = 0;
  double actual = 0;
};

struct FrameLedger {
  std::size_t sample = 0;
  double input_ms = 0;
  double applied_ms = 0;
  double processing_ms = 0;
  double actuation_ms = -1;  // time from application until actual matches command; -1 if never
  double tracking_lag_ms = -1;  // until the actual surface peak is within d/4 of the commanded one
  Point2 commanded_peak{0, 0};
};

struct Violation {
  std::size_t sample = 0;
  double t_ms = 0;
  std::string message;
};

struct SessionLog {
  std::vector<CommandRecord> records;
  std::vector<FrameLedger> frames;
  std::vector<Violation> violations;
  std::vector<ClampEvent> clamps;
  std::vector<Point2> actual_peaks;  // actual surface peak per frame at its next application time
  std::size_t channels = 0;

  double meanTrackingLag() const;
};

/// Replays a fingertip trace through render, plan, command and servo integration
/// on the hexagonal CRS device.
SessionLog runSession(const std::vector<FingertipSample>& trace, const SessionConfig& config);

class TraceFormatError : public std::runtime_error {
 public:
  TraceFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Trace file: header line, then `t_ms,x_f_mm,y_f_mm,z_f_mm` per line.
std::vector<FingertipSample> readTrace(std::istream& in);
void writeTrace(std::ostream& out, const std::vector<FingertipSample>& trace);
/// Command log: header line, then `t_ms,channel,commanded_mm,actual_mm` per line.
void writeCommandLog(std::ostream& out, const SessionLog& log);

}  // namespace hapticlab
