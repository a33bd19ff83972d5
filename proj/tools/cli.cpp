#include "cli.hpp"

#include "hapticlab/beam_mechanics.hpp"
#include "hapticlab/csv.hpp"
#include "hapticlab/distortion.hpp"
#include "hapticlab/elastica.hpp"
#include "hapticlab/reconstruction.hpp"
#include "hapticlab/render_control.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef HAPTICLAB_VERSION
#define HAPTICLAB_VERSION "0.0.0"
#endif

namespace hapticlab::cli {

namespace {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Typed access to one JSON object that remembers which keys were read.
class Fields {
 public:
  Fields(const json& obj, std::string scope) : obj_(obj), scope_(std::move(scope)) {
    if (!obj_.is_object()) throw ConfigError(where("") + "expected an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + "expected a number");
    return v.get<double>();
  }

  std::uint64_t unsignedInt(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(where(key) + "expected a non-negative integer");
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError(where(key) + "expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  const json* object(const std::string& key) {
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  void require(bool ok, const std::string& key, const std::string& message) const {
    if (!ok) throw ConfigError(where(key) + message);
  }

  void finish() const {
    for (const auto& item : obj_.items())
      if (!used_.count(item.key())) throw ConfigError(where(item.key()) + "unknown key");
  }

  std::string where(const std::string& key) const {
    std::string path = scope_;
    if (!key.empty()) path += path.empty() ? key : "." + key;
    return path.empty() ? std::string() : "field '" + path + "': ";
  }

 private:
  const json& obj_;
  std::string scope_;
  std::set<std::string> used_;
};

template <typename Fn>
auto wrapInvalid(Fields& f, const std::string& key, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(f.where(key) + e.what());
  }
}

ElasticaSettings readElastica(Fields& parent) {
  ElasticaSettings s;
  const json* obj = parent.object("elastica");
  if (!obj) return s;
  Fields f(*obj, "elastica");
  s.nodes_per_span = static_cast<int>(f.unsignedInt("nodes_per_span", static_cast<std::uint64_t>(s.nodes_per_span)));
  s.tolerance = f.number("tolerance", s.tolerance);
  s.max_iterations = static_cast<int>(f.unsignedInt("max_iterations", static_cast<std::uint64_t>(s.max_iterations)));
  s.penalty_start = f.number("penalty_start", s.penalty_start);
  s.penalty_growth = f.number("penalty_growth", s.penalty_growth);
  s.penalty_max = f.number("penalty_max", s.penalty_max);
  f.finish();
  wrapInvalid(f, "", [&] {
    s.validate();
    return 0;
  });
  return s;
}

// ---------------------------------------------------------------- configs

struct SweepOptions {
  SweepConfig sweep;
  std::uint64_t seed = 1;
};

SweepOptions readSweep(const json& cfg) {
  Fields f(cfg, "");
  f.string("experiment", "distortion-sweep");
  SweepOptions o;
  o.seed = f.unsignedInt("seed", 1);
  SweepConfig& s = o.sweep;
  s.lattice = wrapInvalid(f, "lattice", [&] { return latticeKindFromString(f.string("lattice", "line")); });
  if (f.has("hex_rings")) {
    const auto rings = f.unsignedInt("hex_rings", 2);
    f.require(rings <= 64, "hex_rings", "must be at most 64");
    s.hex_rings = static_cast<int>(rings);
  }
  f.require(!s.hex_rings || s.lattice == LatticeKind::Hexagonal, "hex_rings", "requires lattice \"hexagonal\"");
  s.models.clear();
  for (const auto& m : f.strings("models", {"pixel-only", "linear", "crs"}))
    s.models.push_back(wrapInvalid(f, "models", [&] { return modelVariantFromString(m); }));
  f.require(!s.models.empty(), "models", "must not be empty");
  s.d_over_l = f.numbers("d_over_l", s.d_over_l);
  f.require(!s.d_over_l.empty(), "d_over_l", "must not be empty");
  for (double r : s.d_over_l) f.require(r > 0.0 && r <= 2.0 && std::isfinite(r), "d_over_l", "values must lie in (0, 2]");
  s.regions.clear();
  for (const auto& r : f.strings("regions", {"full"}))
    s.regions.push_back(wrapInvalid(f, "regions", [&] { return regionFromString(r); }));
  f.require(!s.regions.empty(), "regions", "must not be empty");
  s.extent_wavelengths = f.number("extent_wavelengths", s.lattice == LatticeKind::Line ? 10.0 : 6.0);
  f.require(s.extent_wavelengths >= 1.0 && s.extent_wavelengths <= 100.0, "extent_wavelengths", "must lie in [1, 100]");
  DistortionSetup& d = s.setup;
  d.wavelength = f.number("wavelength_mm", 90.0);
  f.require(d.wavelength > 0.0 && std::isfinite(d.wavelength), "wavelength_mm", "must be positive");
  d.amplitude = f.number("amplitude_mm", 1.0);
  f.require(d.amplitude > 0.0 && std::isfinite(d.amplitude), "amplitude_mm", "must be positive");
  d.n_samples = f.unsignedInt("n_samples", 2000);
  f.require(d.n_samples >= 1 && d.n_samples <= 10000000, "n_samples", "must lie in [1, 1e7]");
  s.crs_samples = f.unsignedInt("crs_samples", 100);
  f.require(s.crs_samples >= 1 && s.crs_samples <= 1000000, "crs_samples", "must lie in [1, 1e6]");
  d.quad_intervals_1d = static_cast<int>(f.unsignedInt("quad_intervals_1d", 512));
  f.require(d.quad_intervals_1d >= 256 && d.quad_intervals_1d % 2 == 0 && d.quad_intervals_1d <= 1 << 20,
            "quad_intervals_1d", "must be even and at least 256");
  d.quad_intervals_2d = static_cast<int>(f.unsignedInt("quad_intervals_2d", 128));
  f.require(d.quad_intervals_2d >= 16 && d.quad_intervals_2d % 2 == 0 && d.quad_intervals_2d <= 4096,
            "quad_intervals_2d", "must be even and at least 16");
  d.cap_no_peak = f.boolean("cap_no_peak", true);
  d.model.crs = readElastica(f);
  d.seed = o.seed;
  f.finish();
  return o;
}

struct PhaseOptions {
  AxisRange material{1.0, 1e6, 25};
  AxisRange geometry{1e-9, 1e-1, 25};
  bool boundary_rows = true;
  std::uint64_t seed = 1;
};

PhaseOptions readPhase(const json& cfg) {
  Fields f(cfg, "");
  f.string("experiment", "phase-diagram");
  PhaseOptions o;
  o.seed = f.unsignedInt("seed", 1);
  o.material.lo = f.number("material_min", o.material.lo);
  o.material.hi = f.number("material_max", o.material.hi);
  o.material.points = static_cast<int>(f.unsignedInt("material_points", static_cast<std::uint64_t>(o.material.points)));
  o.geometry.lo = f.number("geometry_min", o.geometry.lo);
  o.geometry.hi = f.number("geometry_max", o.geometry.hi);
  o.geometry.points = static_cast<int>(f.unsignedInt("geometry_points", static_cast<std::uint64_t>(o.geometry.points)));
  o.boundary_rows = f.boolean("boundary_rows", true);
  f.require(o.material.lo > 0.0 && o.material.hi >= o.material.lo, "material_min", "range must be positive and ordered");
  f.require(o.geometry.lo > 0.0 && o.geometry.hi >= o.geometry.lo, "geometry_min", "range must be positive and ordered");
  f.require(o.material.points >= 1 && o.material.points <= 10000, "material_points", "must lie in [1, 10000]");
  f.require(o.geometry.points >= 1 && o.geometry.points <= 10000, "geometry_points", "must lie in [1, 10000]");
  f.finish();
  return o;
}

struct DemoOptions {
  double d_over_l = 1.0 / 3.0;
  double wavelength = 90.0;
  double amplitude = 1.0;
  int pixels = 5;
  double peak_offset = 0.5;  // in pitches from the display centre
  int samples = 241;
  ElasticaSettings elastica{};
  std::uint64_t seed = 1;
};

DemoOptions readDemo(const json& cfg) {
  Fields f(cfg, "");
  f.string("experiment", "elastica-demo");
  DemoOptions o;
  o.seed = f.unsignedInt("seed", 1);
  o.d_over_l = f.number("d_over_l", o.d_over_l);
  f.require(o.d_over_l > 0.0 && o.d_over_l <= 2.0, "d_over_l", "must lie in (0, 2]");
  o.wavelength = f.number("wavelength_mm", o.wavelength);
  f.require(o.wavelength > 0.0 && std::isfinite(o.wavelength), "wavelength_mm", "must be positive");
  o.amplitude = f.number("amplitude_mm", o.amplitude);
  f.require(o.amplitude >= 0.0 && std::isfinite(o.amplitude), "amplitude_mm", "must be >= 0");
  o.pixels = static_cast<int>(f.unsignedInt("pixels", 5));
  f.require(o.pixels >= 2 && o.pixels <= 200, "pixels", "must lie in [2, 200]");
  o.peak_offset = f.number("peak_offset", o.peak_offset);
  f.require(std::isfinite(o.peak_offset), "peak_offset", "must be finite");
  o.samples = static_cast<int>(f.unsignedInt("samples", 241));
  f.require(o.samples >= 2 && o.samples <= 1000000, "samples", "must lie in [2, 1e6]");
  o.elastica = readElastica(f);
  f.finish();
  return o;
}

struct ReplayOptions {
  SessionConfig session{};
  std::uint64_t seed = 1;
};

ReplayOptions readReplay(const json& cfg) {
  Fields f(cfg, "");
  f.string("experiment", "replay");
  ReplayOptions o;
  SessionConfig& s = o.session;
  o.seed = f.unsignedInt("seed", 1);
  s.dt_ms = f.number("dt_ms", s.dt_ms);
  f.require(s.dt_ms > 0.0 && s.dt_ms <= 100.0, "dt_ms", "must lie in (0, 100]");
  s.device_latency_ms = f.number("device_latency_ms", s.device_latency_ms);
  f.require(s.device_latency_ms >= 0.0, "device_latency_ms", "must be >= 0");
  s.vr_latency_ms = f.number("vr_latency_ms", s.vr_latency_ms);
  f.require(s.vr_latency_ms >= 0.0, "vr_latency_ms", "must be >= 0");
  s.vr_trace = f.boolean("vr_trace", s.vr_trace);
  s.settle_ms = f.number("settle_ms", s.settle_ms);
  f.require(s.settle_ms >= 0.0 && s.settle_ms <= 1e6, "settle_ms", "must lie in [0, 1e6]");
  s.servo.travel = f.number("travel_mm", s.servo.travel);
  f.require(s.servo.travel > 0.0, "travel_mm", "must be positive");
  s.servo.seconds_per_cm = f.number("seconds_per_cm", s.servo.seconds_per_cm);
  f.require(s.servo.seconds_per_cm > 0.0, "seconds_per_cm", "must be positive");
  s.hex_rings = static_cast<int>(f.unsignedInt("hex_rings", static_cast<std::uint64_t>(s.hex_rings)));
  f.require(s.hex_rings >= 1 && s.hex_rings <= 16, "hex_rings", "must lie in [1, 16]");
  s.pitch = f.number("pitch_mm", s.pitch);
  f.require(s.pitch > 0.0, "pitch_mm", "must be positive");
  f.finish();
  return o;
}

struct StrainOptions {
  std::vector<double> cells{1.0, 2.0, 4.0};
  std::vector<double> displacements{0.0, 0.5, 1.0, 2.0};
  std::uint64_t seed = 1;
};

StrainOptions readStrain(const json& cfg) {
  Fields f(cfg, "");
  f.string("experiment", "strain-table");
  StrainOptions o;
  o.seed = f.unsignedInt("seed", 1);
  o.cells = f.numbers("cells_mm", o.cells);
  o.displacements = f.numbers("displacements_mm", o.displacements);
  for (double c : o.cells) f.require(c > 0.0 && std::isfinite(c), "cells_mm", "values must be positive");
  for (double h : o.displacements) f.require(h >= 0.0 && std::isfinite(h), "displacements_mm", "values must be >= 0");
  f.finish();
  return o;
}

// ---------------------------------------------------------------- io helpers

json loadConfig(const std::string& path, const std::string& experiment) {
  if (path.empty()) return json::object({{"experiment", experiment}});
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!cfg.is_object()) throw ConfigError(path + ": top level must be an object");
  if (!cfg.contains("experiment")) cfg["experiment"] = experiment;
  if (!cfg["experiment"].is_string()) throw ConfigError(path + ": field 'experiment': expected a string");
  if (cfg["experiment"].get<std::string>() != experiment)
    throw ConfigError(path + ": field 'experiment': config is for '" + cfg["experiment"].get<std::string>() +
                      "', not '" + experiment + "'");
  return cfg;
}

std::string configHash(const json& cfg) {
  const std::string text = cfg.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

void provenance(std::ostream& out, const std::string& command, const json& cfg, std::uint64_t seed) {
  out << "# hapticlab " << HAPTICLAB_VERSION << '\n';
  out << "# command: " << command << '\n';
  out << "# config_hash: fnv1a64:" << configHash(cfg) << '\n';
  out << "# seed: " << seed << '\n';
}

// Writes to the named file, or to `fallback` when the name is empty.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw InputError("cannot write '" + path + "'");
  write(file);
  if (!file) throw InputError("failed writing '" + path + "'");
}

std::string num(double v) { return formatNumber(v); }

// ---------------------------------------------------------------- commands

void writeSweep(std::ostream& out, const SweepTable& table, const json& cfg, std::uint64_t seed) {
  provenance(out, "distortion-sweep", cfg, seed);
  out << "model,lattice,d_over_l,metric,value,stderr,n,seed\n";
  for (const SweepRow& row : table.rows) {
    const DistortionEstimate& e = row.estimate;
    std::string metric = toString(e.metric);
    if (e.region == Region::Interior) metric += "_interior";
    out << toString(row.model) << ',' << toString(row.lattice) << ',' << num(e.d_over_l) << ',' << metric << ','
        << num(e.value) << ',' << num(e.standard_error) << ',' << e.n_samples << ',' << e.rng_seed << '\n';
  }
  out << "# power-law fits D = c (d/l)^p\n";
  out << "model,lattice,metric,c,p,residual\n";
  for (const SweepFit& fit : table.fits) {
    std::string metric = toString(fit.metric);
    if (fit.region == Region::Interior) metric += "_interior";
    out << toString(fit.model) << ',' << toString(fit.lattice) << ',' << metric << ',' << num(fit.fit.coefficient) << ','
        << num(fit.fit.exponent) << ',' << num(fit.fit.residual) << '\n';
  }
}

void writePhase(std::ostream& out, const PhaseOptions& o, const json& cfg) {
  const PhaseDiagram pd = phaseDiagram(o.material, o.geometry);
  provenance(out, "phase-diagram", cfg, o.seed);
  out << "E_over_beta,I_over_d4,delta,class\n";
  auto label = [](CollapseClass c) { return c == CollapseClass::Collapse ? "collapse" : "no-collapse"; };
  for (std::size_t i = 0; i < pd.material.size(); ++i)
    for (std::size_t j = 0; j < pd.geometry.size(); ++j)
      out << num(pd.material[i]) << ',' << num(pd.geometry[j]) << ','
          << num(pd.delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << ',' << label(pd.classes[i][j])
          << '\n';
  if (o.boundary_rows) {
    for (double m : pd.material) {
      const double g = collapseBoundaryGeometry(m);
      const double delta = collapseIndexFromGroups(m, g);
      out << num(m) << ',' << num(g) << ',' << num(delta) << ','
          << label(delta < 1.0 ? CollapseClass::Collapse : CollapseClass::NoCollapse) << '\n';
    }
  }
}

void writeDemo(std::ostream& out, const DemoOptions& o, const json& cfg) {
  const double d = o.d_over_l * o.wavelength;
  const double length = d * (o.pixels - 1);
  const Lattice lattice = makeLattice(LatticeKind::Line, d, Extents::line(length));
  const BumpField1Dd field{length / 2.0 + o.peak_offset * d, o.amplitude, o.wavelength};
  const CrsProfile1D profile = reconstructCrs1d(field, lattice, o.elastica);
  provenance(out, "elastica-demo", cfg, o.seed);
  out << "x_mm,psi_mm\n";
  for (int i = 0; i < o.samples; ++i) {
    const double x = i == o.samples - 1 ? length : length * static_cast<double>(i) / static_cast<double>(o.samples - 1);
    out << num(x) << ',' << num(profile(x)) << '\n';
  }
}

void writeStrain(std::ostream& out, const StrainOptions& o, const json& cfg) {
  provenance(out, "strain-table", cfg, o.seed);
  out << "cell_mm,displacement_mm,strain\n";
  for (double c : o.cells)
    for (double h : o.displacements) out << num(c) << ',' << num(h) << ',' << num(membraneStrain(c, h)) << '\n';
}

void writeReplaySummary(std::ostream& out, const SessionLog& log, const ReplayOptions& o, const json& cfg,
                        std::size_t samples) {
  provenance(out, "replay", cfg, o.seed);
  double max_lag = -1.0;
  double act_sum = 0.0;
  int act_n = 0;
  for (const auto& f : log.frames) {
    max_lag = std::max(max_lag, f.tracking_lag_ms);
    if (f.actuation_ms >= 0.0) {
      act_sum += f.actuation_ms;
      ++act_n;
    }
  }
  out << "key,value\n";
  out << "samples," << samples << '\n';
  out << "frames," << log.frames.size() << '\n';
  out << "violations," << log.violations.size() << '\n';
  out << "clamps," << log.clamps.size() << '\n';
  out << "channels," << log.channels << '\n';
  out << "command_records," << log.records.size() << '\n';
  out << "processing_delay_ms," << num(o.session.vr_trace ? o.session.vr_latency_ms : o.session.device_latency_ms) << '\n';
  out << "mean_tracking_lag_ms," << num(log.meanTrackingLag()) << '\n';
  out << "max_tracking_lag_ms," << num(max_lag) << '\n';
  out << "mean_actuation_ms," << num(act_n ? act_sum / act_n : -1.0) << '\n';
  out << "# frames\n";
  out << "sample,input_ms,applied_ms,processing_ms,actuation_ms,tracking_lag_ms,peak_x_mm,peak_y_mm,actual_x_mm,actual_y_mm\n";
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    const FrameLedger& f = log.frames[i];
    const Point2 actual = i < log.actual_peaks.size() ? log.actual_peaks[i] : Point2(0, 0);
    out << f.sample << ',' << num(f.input_ms) << ',' << num(f.applied_ms) << ',' << num(f.processing_ms) << ','
        << num(f.actuation_ms) << ',' << num(f.tracking_lag_ms) << ',' << num(f.commanded_peak.x()) << ','
        << num(f.commanded_peak.y()) << ',' << num(actual.x()) << ',' << num(actual.y()) << '\n';
  }
  out << "# violations\n";
  out << "sample,t_ms,message\n";
  for (const auto& v : log.violations) out << v.sample << ',' << num(v.t_ms) << ",\"" << v.message << "\"\n";
}

template <typename T>
void overrideKey(json& cfg, const char* key, const std::optional<T>& value) {
  if (value) cfg[key] = *value;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and analysis tools for continuity-reinforced haptic shape displays", "hapticlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(HAPTICLAB_VERSION));

  std::string config_path;
  std::string output_path;

  // distortion-sweep
  auto* sweep = app.add_subcommand("distortion-sweep", "Monte Carlo peak-position and shape distortion over a d/l grid");
  std::optional<std::uint64_t> sweep_seed;
  std::optional<std::string> sweep_lattice;
  std::optional<std::vector<std::string>> sweep_models;
  std::optional<std::vector<double>> sweep_grid;
  std::optional<std::uint64_t> sweep_n;
  std::optional<std::uint64_t> sweep_crs_n;
  std::optional<std::uint64_t> sweep_rings;
  std::optional<std::vector<std::string>> sweep_regions;
  sweep->add_option("-c,--config", config_path, "JSON config file");
  sweep->add_option("-o,--output", output_path, "CSV output file (default: stdout)");
  sweep->add_option("--seed", sweep_seed, "RNG seed");
  sweep->add_option("--lattice", sweep_lattice, "line, square or hexagonal");
  sweep->add_option("--models", sweep_models, "comma-separated: pixel-only,linear,crs")->delimiter(',');
  sweep->add_option("--d-over-l", sweep_grid, "comma-separated pitch-to-wavelength ratios")->delimiter(',');
  sweep->add_option("--n-samples", sweep_n, "samples per point for pixel-only and linear models");
  sweep->add_option("--crs-samples", sweep_crs_n, "samples per point for the crs model");
  sweep->add_option("--hex-rings", sweep_rings, "use the hexagonal patch with this ring radius");
  sweep->add_option("--regions", sweep_regions, "comma-separated: full,interior")->delimiter(',');

  // phase-diagram
  auto* phase = app.add_subcommand("phase-diagram", "Collapse/no-collapse classification over (E/beta, I/d^4)");
  phase->add_option("-c,--config", config_path, "JSON config file");
  phase->add_option("-o,--output", output_path, "CSV output file (default: stdout)");

  // elastica-demo
  auto* demo = app.add_subcommand("elastica-demo", "Buckled-beam profile through a row of pixels");
  std::optional<double> demo_ratio;
  std::optional<double> demo_offset;
  std::optional<double> demo_amplitude;
  std::optional<std::uint64_t> demo_pixels;
  demo->add_option("-c,--config", config_path, "JSON config file");
  demo->add_option("-o,--output", output_path, "CSV output file (default: stdout)");
  demo->add_option("--d-over-l", demo_ratio, "pitch-to-wavelength ratio");
  demo->add_option("--peak-offset", demo_offset, "peak offset from the display centre, in pitches");
  demo->add_option("--amplitude", demo_amplitude, "bump amplitude in mm");
  demo->add_option("--pixels", demo_pixels, "number of pixels");

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a fingertip trace through the render and servo pipeline");
  std::string trace_path;
  std::string log_path;
  std::optional<bool> replay_vr;
  std::optional<double> replay_dt;
  replay->add_option("trace", trace_path, "trace file (t_ms,x_f_mm,y_f_mm,z_f_mm)")->required();
  replay->add_option("-c,--config", config_path, "JSON config file");
  replay->add_option("-o,--output", output_path, "summary CSV file (default: stdout)");
  replay->add_option("--log", log_path, "command log CSV file");
  replay->add_flag("--vr", replay_vr, "trace originates from the VR pipeline");
  replay->add_option("--dt-ms", replay_dt, "simulation step in ms");

  // strain-table
  auto* strain = app.add_subcommand("strain-table", "Membrane strain of a pushed-out cell (tent model)");
  std::optional<std::vector<double>> strain_cells;
  std::optional<std::vector<double>> strain_disp;
  strain->add_option("-c,--config", config_path, "JSON config file");
  strain->add_option("-o,--output", output_path, "CSV output file (default: stdout)");
  strain->add_option("--cells", strain_cells, "comma-separated cell sizes in mm")->delimiter(',');
  strain->add_option("--displacements", strain_disp, "comma-separated displacements in mm")->delimiter(',');

  // validate-config
  auto* validate = app.add_subcommand("validate-config", "Check a config file without running it");
  std::string validate_path;
  validate->add_option("config", validate_path, "JSON config file")->required();

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sweep->parsed()) {
      json cfg = loadConfig(config_path, "distortion-sweep");
      overrideKey(cfg, "seed", sweep_seed);
      overrideKey(cfg, "lattice", sweep_lattice);
      overrideKey(cfg, "models", sweep_models);
      overrideKey(cfg, "d_over_l", sweep_grid);
      overrideKey(cfg, "n_samples", sweep_n);
      overrideKey(cfg, "crs_samples", sweep_crs_n);
      overrideKey(cfg, "hex_rings", sweep_rings);
      overrideKey(cfg, "regions", sweep_regions);
      const SweepOptions o = readSweep(cfg);
      const SweepTable table = distortionSweep(o.sweep);
      emit(output_path, out, [&](std::ostream& s) { writeSweep(s, table, cfg, o.seed); });
    } else if (phase->parsed()) {
      const json cfg = loadConfig(config_path, "phase-diagram");
      const PhaseOptions o = readPhase(cfg);
      emit(output_path, out, [&](std::ostream& s) { writePhase(s, o, cfg); });
    } else if (demo->parsed()) {
      json cfg = loadConfig(config_path, "elastica-demo");
      overrideKey(cfg, "d_over_l", demo_ratio);
      overrideKey(cfg, "peak_offset", demo_offset);
      overrideKey(cfg, "amplitude_mm", demo_amplitude);
      overrideKey(cfg, "pixels", demo_pixels);
      const DemoOptions o = readDemo(cfg);
      std::ostringstream buffer;
      writeDemo(buffer, o, cfg);
      emit(output_path, out, [&](std::ostream& s) { s << buffer.str(); });
    } else if (replay->parsed()) {
      json cfg = loadConfig(config_path, "replay");
      overrideKey(cfg, "vr_trace", replay_vr);
      overrideKey(cfg, "dt_ms", replay_dt);
      const ReplayOptions o = readReplay(cfg);
      std::ifstream in(trace_path, std::ios::binary);
      if (!in) throw InputError("cannot open trace '" + trace_path + "'");
      std::vector<FingertipSample> trace;
      try {
        trace = readTrace(in);
      } catch (const TraceFormatError& e) {
        throw InputError(trace_path + ": " + e.what());
      }
      SessionLog log;
      try {
        log = runSession(trace, o.session);
      } catch (const std::invalid_argument& e) {
        throw InputError(trace_path + ": " + e.what());
      }
      if (!log_path.empty()) emit(log_path, out, [&](std::ostream& s) { writeCommandLog(s, log); });
      emit(output_path, out, [&](std::ostream& s) { writeReplaySummary(s, log, o, cfg, trace.size()); });
    } else if (strain->parsed()) {
      json cfg = loadConfig(config_path, "strain-table");
      overrideKey(cfg, "cells_mm", strain_cells);
      overrideKey(cfg, "displacements_mm", strain_disp);
      const StrainOptions o = readStrain(cfg);
      emit(output_path, out, [&](std::ostream& s) { writeStrain(s, o, cfg); });
    } else if (validate->parsed()) {
      std::ifstream in(validate_path, std::ios::binary);
      if (!in) throw ConfigError("cannot open config file '" + validate_path + "'");
      json cfg;
      try {
        cfg = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(validate_path + ": " + e.what());
      }
      if (!cfg.is_object() || !cfg.contains("experiment") || !cfg["experiment"].is_string())
        throw ConfigError(validate_path + ": field 'experiment': expected one of distortion-sweep, phase-diagram, "
                                          "elastica-demo, replay, strain-table");
      const std::string kind = cfg["experiment"].get<std::string>();
      try {
        if (kind == "distortion-sweep") readSweep(cfg);
        else if (kind == "phase-diagram") readPhase(cfg);
        else if (kind == "elastica-demo") readDemo(cfg);
        else if (kind == "replay") readReplay(cfg);
        else if (kind == "strain-table") readStrain(cfg);
        else throw ConfigError("field 'experiment': unknown experiment '" + kind + "'");
      } catch (const ConfigError& e) {
        throw ConfigError(validate_path + ": " + e.what());
      }
      out << "ok: " << kind << '\n';
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kConfig;
  } catch (const ElasticaConvergenceError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::domain_error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}

}  // namespace hapticlab::cli
