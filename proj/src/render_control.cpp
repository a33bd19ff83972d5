#include "hapticlab/render_control.hpp"

#include "hapticlab/csv.hpp"
#include "hapticlab/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace hapticlab {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

std::vector<Point2> latticeDirections(LatticeKind kind) {
  switch (kind) {
    case LatticeKind::Line: return {Point2(1, 0)};
    case LatticeKind::Square: return {Point2(1, 0), Point2(0, 1)};
    case LatticeKind::Hexagonal: return {Point2(1, 0), Point2(0.5, kSqrt3 / 2), Point2(-0.5, kSqrt3 / 2)};
  }
  return {};
}

// Integrates sqrt(1 + g(s)^2) - 1 over [0, length], split at the given breakpoints.
template <typename Slope>
PathExcess integrateExcess(Slope&& slope, double length, std::vector<double> breaks, double rel_tol) {
  auto integrand = [&](double s) {
    const double g = slope(s);
    // sqrt(1 + g²) - 1 without cancellation.
    return g * g / (std::sqrt(1.0 + g * g) + 1.0);
  };
  const double mid = 0.5 * length;
  breaks.push_back(0.0);
  breaks.push_back(mid);
  breaks.push_back(length);
  std::erase_if(breaks, [&](double b) { return !(b >= 0.0 && b <= length); });
  std::sort(breaks.begin(), breaks.end());
  const double merge = 1e-9 * length;
  breaks.erase(std::unique(breaks.begin(), breaks.end(), [&](double x, double y) { return y - x <= merge; }), breaks.end());
  PathExcess out;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    const double part = adaptiveIntegral(integrand, a, b, rel_tol);
    (b <= mid ? out.first_half : out.second_half) += part;
  }
  out.total = out.first_half + out.second_half;
  return out;
}

}  // namespace

std::vector<BeamLine> beamLines(const Lattice& lattice) {
  std::vector<BeamLine> out;
  const auto& px = lattice.pixels();
  const double tol = 1e-6 * lattice.pitch();
  const auto dirs = latticeDirections(lattice.kind());
  for (std::size_t fam = 0; fam < dirs.size(); ++fam) {
    const Point2 u = dirs[fam];
    const Point2 n(-u.y(), u.x());
    std::vector<std::size_t> order(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double oa = n.dot(px[a]);
      const double ob = n.dot(px[b]);
      if (std::abs(oa - ob) > tol) return oa < ob;
      return u.dot(px[a]) < u.dot(px[b]);
    });
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i + 1;
      while (j < order.size() && std::abs(n.dot(px[order[j]]) - n.dot(px[order[i]])) <= tol) ++j;
      // Split the row wherever consecutive pixels are not adjacent.
      std::size_t k = i;
      while (k < j) {
        std::size_t e = k + 1;
        while (e < j && (px[order[e]] - px[order[e - 1]]).norm() <= lattice.pitch() * (1.0 + 1e-6)) ++e;
        if (e - k >= 2) {
          BeamLine beam;
          beam.family = static_cast<int>(fam);
          beam.pixels.assign(order.begin() + static_cast<long>(k), order.begin() + static_cast<long>(e));
          beam.start = px[beam.pixels.front()];
          beam.end = px[beam.pixels.back()];
          out.push_back(std::move(beam));
        }
        k = e;
      }
      i = j;
    }
  }
  return out;
}

PathExcess excessAlongSegment(const BumpField2Dd& field, const Point2& a, const Point2& b, double rel_tol) {
  const double length = (b - a).norm();
  if (length == 0.0 || field.amplitude == 0.0) return {};
  const Point2 u = (b - a) / length;
  const Point2 rel = field.peak - a;
  const double closest = rel.dot(u);
  const double offset = std::abs(rel.x() * u.y() - rel.y() * u.x());
  const double radius = field.wavelength / 2.0;
  if (offset >= radius) return {};
  const double half_chord = std::sqrt(radius * radius - offset * offset);
  auto slope = [&](double s) {
    const Point2 p = a + s * u;
    return bump2dGradient(p.x(), p.y(), field).dot(u);
  };
  return integrateExcess(slope, length, {closest - half_chord, closest, closest + half_chord}, rel_tol);
}

PathExcess excessAlongSegment(const BumpField1Dd& field, double a, double b, double rel_tol) {
  const double length = b - a;
  if (!(length > 0.0) || field.amplitude == 0.0) return {};
  const double c = field.peak - a;
  auto slope = [&](double s) { return bump1dSlope(a + s, field); };
  return integrateExcess(slope, length, {c - field.wavelength / 2.0, c, c + field.wavelength / 2.0}, rel_tol);
}

CompressionPlan compressionPlan(const BumpField2Dd& field, const std::vector<BeamLine>& beams, const ServoSpec& servo) {
  CompressionPlan plan;
  std::vector<std::size_t> offending;
  for (std::size_t i = 0; i < beams.size(); ++i) {
    const PathExcess e = excessAlongSegment(field, beams[i].start, beams[i].end);
    plan.beams.push_back({e.total, e.first_half, e.second_half});
    if (e.first_half > servo.travel || e.second_half > servo.travel) offending.push_back(i);
  }
  if (!offending.empty()) {
    std::ostringstream msg;
    msg << "curve length increase exceeds servo travel on beam";
    for (std::size_t i : offending) msg << ' ' << i;
    throw TravelExceededError(offending, msg.str());
  }
  return plan;
}

BumpField2Dd renderTarget(const FingertipSample& sample) {
  BumpField2Dd field;
  field.peak = Point2(sample.x, sample.y);
  field.amplitude = std::max(sample.z, 0.0);
  field.wavelength = kRenderWavelength;
  return field;
}

PixelCommands pixelCommands(const BumpField2Dd& field, const Lattice& lattice, const ServoSpec& servo) {
  PixelCommands out;
  out.heights = samplePixels(field, lattice);
  for (Eigen::Index i = 0; i < out.heights.size(); ++i) {
    const double h = out.heights[i];
    const double c = std::clamp(h, 0.0, servo.travel);
    if (c != h) out.clamps.push_back({static_cast<std::size_t>(i), h, c});
    out.heights[i] = c;
  }
  return out;
}

ServoState stepServos(const ServoState& state, const Eigen::VectorXd& commands, double dt_ms, const ServoSpec& spec) {
  if (!(dt_ms > 0.0)) throw std::invalid_argument("servo step must be positive");
  if (commands.size() != state.position.size()) throw std::invalid_argument("command count does not match servo channels");
  const double max_move = spec.rate() * dt_ms;
  ServoState next = state;
  for (Eigen::Index i = 0; i < commands.size(); ++i) {
    const double target = std::clamp(commands[i], 0.0, spec.travel);
    const double gap = target - state.position[i];
    if (std::abs(gap) <= max_move) {
      next.position[i] = target;
      continue;
    }
    next.position[i] = std::clamp(state.position[i] + std::copysign(max_move, gap), 0.0, spec.travel);
  }
  return next;
}

namespace {

// Peak of the 90 mm raised cosine that best fits the pixel heights (Levenberg-Marquardt on x, y, A).
std::optional<Point2> fittedPeak(const Eigen::VectorXd& heights, const Lattice& lattice) {
  Eigen::Index top = 0;
  if (!(heights.maxCoeff(&top) > 0.0)) return std::nullopt;
  const auto& px = lattice.pixels();
  Eigen::Vector3d p(px[static_cast<std::size_t>(top)].x(), px[static_cast<std::size_t>(top)].y(), heights[top]);
  auto residual = [&](const Eigen::Vector3d& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const BumpField2Dd f{Point2(q[0], q[1]), q[2], kRenderWavelength};
    r.resize(heights.size());
    if (jac) jac->resize(heights.size(), 3);
    for (Eigen::Index i = 0; i < heights.size(); ++i) {
      const Point2& x = px[static_cast<std::size_t>(i)];
      r[i] = bump2d(x.x(), x.y(), f) - heights[i];
      if (jac) {
        const Point2 g = bump2dGradient(x.x(), x.y(), f);
        (*jac)(i, 0) = -g.x();
        (*jac)(i, 1) = -g.y();
        (*jac)(i, 2) = f.amplitude > 0 ? bump2d(x.x(), x.y(), BumpField2Dd{f.peak, 1.0, f.wavelength}) : 0.0;
      }
    }
  };
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  double lambda = 1e-3;
  residual(p, r, &jac);
  double cost = r.squaredNorm();
  for (int it = 0; it < 100; ++it) {
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d g = jac.transpose() * r;
    Eigen::Matrix3d a = jtj;
    a.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
    const Eigen::Vector3d step = a.ldlt().solve(-g);
    Eigen::VectorXd rt;
    residual(p + step, rt, nullptr);
    if (rt.squaredNorm() < cost) {
      p += step;
      cost = rt.squaredNorm();
      residual(p, r, &jac);
      lambda = std::max(lambda * 0.3, 1e-12);
      if (step.head<2>().norm() < 1e-10) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return Point2(p[0], p[1]);
}

}  // namespace

double SessionLog::meanTrackingLag() const {
  double sum = 0.0;
  int count = 0;
  for (const auto& f : frames) {
    if (f.tracking_lag_ms < 0.0) continue;
    sum += f.tracking_lag_ms;
    ++count;
  }
  return count ? sum / count : -1.0;
}

SessionLog runSession(const std::vector<FingertipSample>& trace, const SessionConfig& config) {
  if (!(config.dt_ms > 0.0)) throw std::invalid_argument("session dt must be positive");
  for (std::size_t i = 0; i + 1 < trace.size(); ++i)
    if (trace[i + 1].t_ms < trace[i].t_ms) throw std::invalid_argument("trace not sorted by time");
  SessionLog log;
  if (trace.empty()) return log;

  const Lattice lattice = makeLattice(LatticeKind::Hexagonal, config.pitch, Extents::hexPatch(config.hex_rings));
  const std::vector<BeamLine> beams = beamLines(lattice);
  const std::size_t pixels = lattice.size();
  const std::size_t channels = pixels + 2 * beams.size();
  log.channels = channels;
  const double delay = config.vr_trace ? config.vr_latency_ms : config.device_latency_ms;

  ServoState state{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(channels))};
  Eigen::VectorXd command = state.position;

  struct Pending {
    std::size_t frame;
    bool actuated = false;
    bool tracked = false;
    bool track = false;
  };
  std::vector<Pending> pending;

  const double t0 = trace.front().t_ms + delay;
  const double t_end = trace.back().t_ms + delay + config.settle_ms;
  const auto steps = static_cast<long>(std::ceil((t_end - t0) / config.dt_ms - 1e-9));
  std::size_t next = 0;
  auto record = [&](double t, std::size_t ch) {
    log.records.push_back({t, ch, command[static_cast<Eigen::Index>(ch)], state.position[static_cast<Eigen::Index>(ch)]});
  };

  auto checkPending = [&](double time) {
    for (auto& p : pending) {
      FrameLedger& f = log.frames[p.frame];
      if (!p.actuated && (state.position - command).cwiseAbs().maxCoeff() <= 1e-12) {
        p.actuated = true;
        f.actuation_ms = time - f.applied_ms;
      }
      if (p.track && !p.tracked) {
        const auto peak = fittedPeak(state.position.head(static_cast<Eigen::Index>(pixels)), lattice);
        if (peak && (*peak - f.commanded_peak).norm() <= lattice.pitch() / 4.0) {
          p.tracked = true;
          f.tracking_lag_ms = time - f.input_ms;
        }
      }
    }
  };

  for (long k = 0; k <= steps; ++k) {
    const double t = t0 + static_cast<double>(k) * config.dt_ms;
    bool applied = false;
    while (next < trace.size() && trace[next].t_ms + delay <= t + 1e-9) {
      const FingertipSample& s = trace[next];
      const BumpField2Dd field = renderTarget(s);
      FrameLedger frame;
      frame.sample = next;
      frame.input_ms = s.t_ms;
      frame.applied_ms = t;
      frame.processing_ms = t - s.t_ms;
      frame.commanded_peak = field.peak;
      try {
        const CompressionPlan plan = compressionPlan(field, beams, config.servo);
        const PixelCommands cmds = pixelCommands(field, lattice, config.servo);
        for (const auto& c : cmds.clamps) log.clamps.push_back(c);
        command.head(static_cast<Eigen::Index>(pixels)) = cmds.heights;
        for (std::size_t b = 0; b < beams.size(); ++b) {
          command[static_cast<Eigen::Index>(pixels + 2 * b)] = plan.beams[b].start_end;
          command[static_cast<Eigen::Index>(pixels + 2 * b + 1)] = plan.beams[b].far_end;
        }
        // A newer frame supersedes any still in flight.
        pending.clear();
        pending.push_back({log.frames.size(), false, false, field.amplitude > 0.0});
        log.frames.push_back(frame);
        applied = true;
      } catch (const TravelExceededError& e) {
        log.violations.push_back({next, t, e.what()});
      }
      ++next;
    }
    if (applied) {
      for (std::size_t ch = 0; ch < channels; ++ch) record(t, ch);
      checkPending(t);
    }

    const ServoState moved = stepServos(state, command, config.dt_ms, config.servo);
    const double t_next = t + config.dt_ms;
    const Eigen::VectorXd before = state.position;
    state = moved;
    for (std::size_t ch = 0; ch < channels; ++ch)
      if (state.position[static_cast<Eigen::Index>(ch)] != before[static_cast<Eigen::Index>(ch)]) record(t_next, ch);

    checkPending(t_next);
    // The actual peak a frame leaves behind, sampled just before the next frame lands.
    const bool frame_ends = next < trace.size() ? trace[next].t_ms + delay <= t_next + 1e-9 : k == steps;
    if (frame_ends && !log.frames.empty() && log.actual_peaks.size() < log.frames.size()) {
      const auto peak = fittedPeak(state.position.head(static_cast<Eigen::Index>(pixels)), lattice);
      log.actual_peaks.push_back(peak.value_or(Point2(0, 0)));
    }
  }
  return log;
}

std::vector<FingertipSample> readTrace(std::istream& in) {
  std::vector<FingertipSample> out;
  std::string line;
  std::size_t number = 0;
  if (!std::getline(in, line)) throw TraceFormatError(1, "missing header line");
  ++number;
  {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (splitFields(line).size() != 4) throw TraceFormatError(number, "header must have 4 fields");
  }
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = splitFields(line);
    if (fields.size() != 4) throw TraceFormatError(number, "expected 4 fields, got " + std::to_string(fields.size()));
    double v[4];
    for (int i = 0; i < 4; ++i) {
      const auto parsed = parseNumber(fields[static_cast<std::size_t>(i)]);
      if (!parsed || !std::isfinite(*parsed)) throw TraceFormatError(number, "field " + std::to_string(i + 1) + " is not a number");
      v[i] = *parsed;
    }
    if (v[3] < 0.0) throw TraceFormatError(number, "press depth must be >= 0");
    out.push_back({v[0], v[1], v[2], v[3]});
  }
  return out;
}

void writeTrace(std::ostream& out, const std::vector<FingertipSample>& trace) {
  out << "t_ms,x_f_mm,y_f_mm,z_f_mm\n";
  for (const auto& s : trace)
    out << formatNumber(s.t_ms) << ',' << formatNumber(s.x) << ',' << formatNumber(s.y) << ',' << formatNumber(s.z) << '\n';
}

void writeCommandLog(std::ostream& out, const SessionLog& log) {
  out << "t_ms,channel,commanded_mm,actual_mm\n";
  for (const auto& r : log.records)
    out << formatNumber(r.t_ms) << ',' << r.channel << ',' << formatNumber(r.commanded) << ',' << formatNumber(r.actual) << '\n';
}

}  // namespace hapticlab
