#pragma once

// Run configuration (JSON), tensor and field files, CSV tables.
//
// Config units: absorption and scattering in cm^-1, lengths in mm, angles in
// degrees, wavelengths in nm. Everything is converted to mm^-1 on load.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fluencelab/errors.hpp"
#include "fluencelab/estimation.hpp"
#include "fluencelab/geometry_media.hpp"
#include "fluencelab/montecarlo.hpp"
#include "fluencelab/synth_correct.hpp"
#include "fluencelab/tensor.hpp"

namespace fluencelab {

using json = nlohmann::json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

// ---------------------------------------------------------------- CSV

/// %.9g, the float format used by every table.
inline std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> columns;  // "name_unit" style headers
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw DomainError("csv: row width does not match header");
    rows.push_back(std::move(row));
  }

  std::string str() const {
    std::ostringstream out;
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << fmt9(r[c]);
      out << '\n';
    }
    return out.str();
  }
};

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_csv(const fs::path& path, const CsvTable& t) { write_text(path, t.str()); }

/// Numeric CSV with one header line; blank lines and '#' comments are skipped.
inline CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (header) {
      t.columns = cells;
      header = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
      } catch (const std::exception&) {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + c + "'");
      }
    }
    if (row.size() != t.columns.size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.columns.size()) +
                    " columns");
    }
    t.rows.push_back(std::move(row));
  }
  if (header) throw IoError(path.string() + ": empty CSV");
  return t;
}

/// Reference absorption spectrum (wavelength_nm, alpha), resampled onto the
/// analysis wavelengths by linear interpolation.
inline std::vector<double> read_reference_spectrum(const fs::path& path, const std::vector<double>& wavelengths) {
  const auto t = read_csv(path);
  if (t.columns.size() < 2 || t.rows.size() < 1) throw IoError(path.string() + ": need columns wavelength_nm,alpha");
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : t.rows) pts.emplace_back(r[0], r[1]);
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  for (double w : wavelengths) {
    if (w < pts.front().first - 1e-9 || w > pts.back().first + 1e-9) {
      throw IoError(path.string() + ": wavelength " + fmt9(w) + " nm outside the reference range");
    }
    auto hi = std::lower_bound(pts.begin(), pts.end(), std::make_pair(w, -std::numeric_limits<double>::infinity()));
    if (hi == pts.end()) hi = pts.end() - 1;
    if (hi == pts.begin() || std::abs(hi->first - w) < 1e-9) {
      out.push_back(hi->second);
      continue;
    }
    const auto lo = hi - 1;
    const double t01 = (w - lo->first) / (hi->first - lo->first);
    out.push_back(lo->second + t01 * (hi->second - lo->second));
  }
  return out;
}

// ---------------------------------------------------------------- config

namespace detail {

// Rejects keys outside `allowed`, naming the section.
inline void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError("config: unknown key '" + key + "' in section '" + section + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, const std::string& section, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: '" + section + "." + key + "' has the wrong type (" + e.what() + ")");
  }
}

inline std::vector<double> per_cm_list(const json& j, const std::string& what) {
  std::vector<double> out;
  try {
    if (j.is_number()) {
      out.push_back(per_cm_to_per_mm(j.get<double>()));
    } else {
      for (double v : j.get<std::vector<double>>()) out.push_back(per_cm_to_per_mm(v));
    }
  } catch (const json::exception&) {
    throw ConfigError("config: '" + what + "' must be a number or an array of numbers");
  }
  return out;
}

}  // namespace detail

struct GeometryConfig {
  double y_offset_mm = 5.68;
  double half_aperture_mm = 6.35;
  double tilt_deg = 35.0;
  double n_medium = 1.33;
  double n_coupling = 1.49;
  std::vector<Vec3> fibers;  // explicit tips override the standard layout

  ProbeGeometry build() const {
    ProbeGeometry g = fibers.empty() ? ProbeGeometry::standard(y_offset_mm, half_aperture_mm, tilt_deg) : ProbeGeometry{};
    if (!fibers.empty()) g.fiber_tips = fibers;
    g.tilt_deg = tilt_deg;
    g.n_medium = n_medium;
    g.n_coupling = n_coupling;
    g.validate();
    return g;
  }
};

struct MediumConfig {
  std::string law = "brain";         // "brain" (power-law scattering) or "table"
  std::vector<double> mu_a{0.003};   // mm^-1, one value or one per analysis wavelength
  std::vector<double> mu_s_reduced;  // mm^-1, table law only
  double g = 0.9;

  OpticalMedium build(const std::vector<double>& wavelengths) const {
    OpticalMedium m;
    m.g = g;
    const std::size_t n = wavelengths.size();
    if (mu_a.size() != 1 && mu_a.size() != n) throw ConfigError("config: medium.mu_a_per_cm needs 1 or " + std::to_string(n) + " values");
    for (std::size_t j = 0; j < n; ++j) m.mu_a.push_back(mu_a.size() == 1 ? mu_a[0] : mu_a[j]);
    if (law == "brain") {
      for (double w : wavelengths) m.mu_s_reduced.push_back(brain_scattering(w));
    } else if (law == "table") {
      if (mu_s_reduced.size() != n) throw ConfigError("config: medium.mu_s_reduced_per_cm needs " + std::to_string(n) + " values");
      m.mu_s_reduced = mu_s_reduced;
    } else {
      throw ConfigError("config: medium.law must be 'brain' or 'table'");
    }
    m.validate();
    return m;
  }
};

struct NoiseConfig {
  std::optional<double> snr_db;  // absent or null: noiseless
  std::uint64_t seed = 1;
  std::vector<double> mean;
};

struct EstimationConfig {
  SearchConfig search;
  TauPolicy tau;
  bool smoothing = true;
};

struct McSweepConfig {
  McConfig base;
  std::vector<double> mu_s_sweep{0.2, 0.5, 1.0};      // mm^-1
  std::vector<double> y_sweep{2.85, 5.70, 11.40};     // mm
  std::vector<double> mu_a_sweep{0.001, 0.002, 0.003, 0.004, 0.005};
  std::vector<double> error_mu_s{0.5, 1.0, 2.0, 3.0};  // mm^-1, model-error curves
  double z_lo = 5.0;
  double z_hi = 25.0;
};

struct RunConfig {
  GeometryConfig geometry;
  std::optional<WavelengthGrid> wavelengths;
  MediumConfig medium;
  std::vector<ChromophoreSpectrum> chromophores;
  std::vector<Target> targets;
  PixelGrid grid;
  NoiseConfig noise;
  EstimationConfig estimation;
  McSweepConfig mc;
  ModelKind model = ModelKind::I;  // synthesis model
  std::string output_dir = "out";
  std::string reference_csv;
  std::string canonical;           // normalized JSON text for provenance hashing

  const WavelengthGrid& wavelength_grid() const {
    if (!wavelengths) throw ConfigError("config: section 'wavelengths' (with control_index) is required");
    return *wavelengths;
  }

  SynthesisSpec synthesis_spec() const {
    SynthesisSpec s;
    s.geometry = geometry.build();
    s.wavelengths = wavelength_grid();
    s.medium = medium.build(s.wavelengths.analysis_wavelengths());
    s.chromophores = chromophores;
    s.targets = targets;
    s.grid = grid;
    s.model = model;
    s.snr_db = noise.snr_db.value_or(std::numeric_limits<double>::infinity());
    s.noise_mean = noise.mean;
    s.seed = noise.seed;
    return s;
  }
};

inline ModelKind parse_model(int m) {
  if (m == 1) return ModelKind::I;
  if (m == 2) return ModelKind::II;
  throw ConfigError("model must be 1 or 2");
}

inline RunConfig parse_config(const json& root) {
  using detail::check_keys;
  using detail::get_or;
  check_keys(root, "root", {"geometry", "wavelengths", "medium", "chromophores", "targets", "grid", "noise",
                            "estimation", "mc", "model", "output", "reference_csv"});
  RunConfig c;
  c.canonical = root.dump();

  if (root.contains("geometry")) {
    const auto& g = root["geometry"];
    check_keys(g, "geometry", {"y_offset_mm", "half_aperture_mm", "tilt_deg", "n_medium", "n_coupling", "fibers_mm"});
    c.geometry.y_offset_mm = get_or(g, "y_offset_mm", "geometry", c.geometry.y_offset_mm);
    c.geometry.half_aperture_mm = get_or(g, "half_aperture_mm", "geometry", c.geometry.half_aperture_mm);
    c.geometry.tilt_deg = get_or(g, "tilt_deg", "geometry", c.geometry.tilt_deg);
    c.geometry.n_medium = get_or(g, "n_medium", "geometry", c.geometry.n_medium);
    c.geometry.n_coupling = get_or(g, "n_coupling", "geometry", c.geometry.n_coupling);
    for (const auto& p : get_or(g, "fibers_mm", "geometry", std::vector<std::array<double, 3>>{})) {
      c.geometry.fibers.push_back({p[0], p[1], p[2]});
    }
  }

  if (root.contains("wavelengths")) {
    const auto& w = root["wavelengths"];
    check_keys(w, "wavelengths", {"nm", "control_index"});
    if (!w.contains("control_index")) throw ConfigError("config: wavelengths.control_index is required");
    WavelengthGrid grid;
    grid.wavelengths_nm = get_or(w, "nm", "wavelengths", WavelengthGrid::standard().wavelengths_nm);
    grid.control_index = get_or<std::size_t>(w, "control_index", "wavelengths", 0);
    if (grid.control_index >= grid.wavelengths_nm.size()) throw ConfigError("config: wavelengths.control_index out of range");
    c.wavelengths = grid;
  }

  if (root.contains("medium")) {
    const auto& m = root["medium"];
    check_keys(m, "medium", {"law", "mu_a_per_cm", "mu_s_reduced_per_cm", "g"});
    c.medium.law = get_or<std::string>(m, "law", "medium", c.medium.law);
    if (m.contains("mu_a_per_cm")) c.medium.mu_a = detail::per_cm_list(m["mu_a_per_cm"], "medium.mu_a_per_cm");
    if (m.contains("mu_s_reduced_per_cm")) {
      c.medium.mu_s_reduced = detail::per_cm_list(m["mu_s_reduced_per_cm"], "medium.mu_s_reduced_per_cm");
    }
    c.medium.g = get_or(m, "g", "medium", c.medium.g);
  }

  if (root.contains("chromophores")) {
    if (!root["chromophores"].is_array()) throw ConfigError("config: 'chromophores' must be an array");
    for (const auto& ch : root["chromophores"]) {
      check_keys(ch, "chromophores[]", {"name", "alpha_per_cm"});
      if (!ch.contains("alpha_per_cm")) throw ConfigError("config: chromophore needs alpha_per_cm");
      c.chromophores.push_back({get_or<std::string>(ch, "name", "chromophores[]", "unnamed"),
                                detail::per_cm_list(ch["alpha_per_cm"], "chromophores[].alpha_per_cm")});
    }
  }

  if (root.contains("targets")) {
    if (!root["targets"].is_array()) throw ConfigError("config: 'targets' must be an array");
    for (const auto& t : root["targets"]) {
      check_keys(t, "targets[]", {"x_mm", "z_mm", "concentrations", "footprint_px"});
      Target tg;
      tg.x = get_or(t, "x_mm", "targets[]", 0.0);
      tg.z = get_or(t, "z_mm", "targets[]", 10.0);
      tg.concentrations = get_or(t, "concentrations", "targets[]", std::vector<double>{1.0});
      tg.footprint = get_or<std::size_t>(t, "footprint_px", "targets[]", 3);
      c.targets.push_back(tg);
    }
  }

  if (root.contains("grid")) {
    const auto& g = root["grid"];
    check_keys(g, "grid", {"x0_mm", "dx_mm", "nx", "z0_mm", "dz_mm", "nz"});
    c.grid.x0 = get_or(g, "x0_mm", "grid", c.grid.x0);
    c.grid.dx = get_or(g, "dx_mm", "grid", c.grid.dx);
    c.grid.nx = get_or(g, "nx", "grid", c.grid.nx);
    c.grid.z0 = get_or(g, "z0_mm", "grid", c.grid.z0);
    c.grid.dz = get_or(g, "dz_mm", "grid", c.grid.dz);
    c.grid.nz = get_or(g, "nz", "grid", c.grid.nz);
    c.grid.validate();
  }

  if (root.contains("noise")) {
    const auto& n = root["noise"];
    check_keys(n, "noise", {"snr_db", "seed", "mean"});
    if (n.contains("snr_db") && !n["snr_db"].is_null()) c.noise.snr_db = get_or(n, "snr_db", "noise", 50.0);
    c.noise.seed = get_or(n, "seed", "noise", c.noise.seed);
    if (n.contains("mean")) {
      c.noise.mean = n["mean"].is_number() ? std::vector<double>{n["mean"].get<double>()}
                                          : get_or(n, "mean", "noise", std::vector<double>{});
    }
  }

  if (root.contains("estimation")) {
    const auto& e = root["estimation"];
    check_keys(e, "estimation", {"model", "mu_eff_bounds_per_cm", "mu_s_reduced_bounds_per_cm", "grid", "tau",
                                 "smoothing", "weights", "tolerance", "max_iterations", "threads"});
    auto& s = c.estimation.search;
    s.model = parse_model(get_or(e, "model", "estimation", 1));
    if (e.contains("mu_eff_bounds_per_cm")) {
      const auto b = detail::per_cm_list(e["mu_eff_bounds_per_cm"], "estimation.mu_eff_bounds_per_cm");
      if (b.size() != 2 || !(b[0] > 0.0 && b[0] < b[1])) throw ConfigError("config: mu_eff bounds must be [lo, hi] with 0 < lo < hi");
      s.mu_eff_lo = b[0];
      s.mu_eff_hi = b[1];
    }
    if (e.contains("mu_s_reduced_bounds_per_cm")) {
      const auto b = detail::per_cm_list(e["mu_s_reduced_bounds_per_cm"], "estimation.mu_s_reduced_bounds_per_cm");
      if (b.size() != 2 || !(b[0] > 0.0 && b[0] < b[1])) throw ConfigError("config: mu_s' bounds must be [lo, hi] with 0 < lo < hi");
      s.mu_s_lo = b[0];
      s.mu_s_hi = b[1];
    }
    if (e.contains("grid")) {
      const auto g = get_or(e, "grid", "estimation", std::vector<std::size_t>{});
      if (g.size() != 2 || g[0] < 2 || g[1] < 2) throw ConfigError("config: estimation.grid must be [n_mu_eff, n_mu_s] with n >= 2");
      s.grid_mu_eff = g[0];
      s.grid_mu_s = g[1];
    }
    if (e.contains("tau")) {
      const auto& t = e["tau"];
      check_keys(t, "estimation.tau", {"policy", "value"});
      const auto policy = get_or<std::string>(t, "policy", "estimation.tau", "percentile");
      const double v = get_or(t, "value", "estimation.tau", 90.0);
      if (policy == "percentile") {
        c.estimation.tau = TauPolicy::percentile(v);
      } else if (policy == "absolute") {
        c.estimation.tau = TauPolicy::absolute(v);
      } else if (policy == "fraction_of_max") {
        c.estimation.tau = TauPolicy::fraction_of_max(v);
      } else {
        throw ConfigError("config: estimation.tau.policy must be percentile, absolute or fraction_of_max");
      }
    }
    c.estimation.smoothing = get_or(e, "smoothing", "estimation", true);
    const auto weights = get_or<std::string>(e, "weights", "estimation", "all_wavelengths");
    if (weights == "all_wavelengths") {
      s.weights = WeightMode::AllWavelengths;
    } else if (weights == "per_wavelength") {
      s.weights = WeightMode::PerWavelength;
    } else {
      throw ConfigError("config: estimation.weights must be all_wavelengths or per_wavelength");
    }
    s.simplex.rel_tol = get_or(e, "tolerance", "estimation", s.simplex.rel_tol);
    s.simplex.max_iterations = get_or(e, "max_iterations", "estimation", s.simplex.max_iterations);
    s.threads = get_or(e, "threads", "estimation", s.threads);
  }

  if (root.contains("mc")) {
    const auto& m = root["mc"];
    check_keys(m, "mc", {"photons", "mu_a_per_cm", "mu_s_reduced_per_cm", "g", "y_offset_mm", "tilt_deg",
                         "refract_at_entry", "extent_mm", "spacing_mm", "seed", "batch_size", "roulette_threshold",
                         "roulette_survival", "mu_s_sweep_per_cm", "y_sweep_mm", "mu_a_sweep_per_cm",
                         "error_mu_s_per_cm", "z_range_mm"});
    auto& b = c.mc.base;
    b.photons = get_or(m, "photons", "mc", b.photons);
    if (m.contains("mu_a_per_cm")) b.mu_a = detail::per_cm_list(m["mu_a_per_cm"], "mc.mu_a_per_cm").at(0);
    if (m.contains("mu_s_reduced_per_cm")) {
      b.mu_s_reduced = detail::per_cm_list(m["mu_s_reduced_per_cm"], "mc.mu_s_reduced_per_cm").at(0);
    }
    b.g = get_or(m, "g", "mc", b.g);
    b.source.y = get_or(m, "y_offset_mm", "mc", b.source.y);
    b.tilt_deg = get_or(m, "tilt_deg", "mc", b.tilt_deg);
    b.refract_at_entry = get_or(m, "refract_at_entry", "mc", b.refract_at_entry);
    const auto extent = get_or(m, "extent_mm", "mc", std::vector<double>{50.0, 50.0, 40.0});
    if (extent.size() != 3) throw ConfigError("config: mc.extent_mm must have 3 entries");
    const double spacing = get_or(m, "spacing_mm", "mc", 0.2);
    b.grid = VoxelGrid::centered(extent[0], extent[1], extent[2], spacing);
    b.seed = get_or(m, "seed", "mc", b.seed);
    b.batch_size = get_or(m, "batch_size", "mc", b.batch_size);
    b.roulette_threshold = get_or(m, "roulette_threshold", "mc", b.roulette_threshold);
    b.roulette_survival = get_or(m, "roulette_survival", "mc", b.roulette_survival);
    if (m.contains("mu_s_sweep_per_cm")) c.mc.mu_s_sweep = detail::per_cm_list(m["mu_s_sweep_per_cm"], "mc.mu_s_sweep_per_cm");
    c.mc.y_sweep = get_or(m, "y_sweep_mm", "mc", c.mc.y_sweep);
    if (m.contains("mu_a_sweep_per_cm")) c.mc.mu_a_sweep = detail::per_cm_list(m["mu_a_sweep_per_cm"], "mc.mu_a_sweep_per_cm");
    if (m.contains("error_mu_s_per_cm")) c.mc.error_mu_s = detail::per_cm_list(m["error_mu_s_per_cm"], "mc.error_mu_s_per_cm");
    const auto zr = get_or(m, "z_range_mm", "mc", std::vector<double>{c.mc.z_lo, c.mc.z_hi});
    if (zr.size() != 2 || !(zr[0] < zr[1])) throw ConfigError("config: mc.z_range_mm must be [lo, hi]");
    c.mc.z_lo = zr[0];
    c.mc.z_hi = zr[1];
    b.validate();
  }

  c.model = parse_model(get_or(root, "model", "root", 1));
  if (root.contains("output")) {
    const auto& o = root["output"];
    check_keys(o, "output", {"dir"});
    c.output_dir = get_or<std::string>(o, "dir", "output", c.output_dir);
  }
  c.reference_csv = get_or<std::string>(root, "reference_csv", "root", "");
  return c;
}

inline RunConfig load_config(const fs::path& path) {
  const std::string text = read_text(path);
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(root);
}

/// 64-bit FNV-1a of the config text, for provenance records.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------- tensor files

inline json grid_to_json(const PixelGrid& g) {
  return {{"x0_mm", g.x0}, {"dx_mm", g.dx}, {"nx", g.nx}, {"z0_mm", g.z0}, {"dz_mm", g.dz}, {"nz", g.nz}};
}

inline PixelGrid grid_from_json(const json& j) {
  PixelGrid g;
  g.x0 = j.at("x0_mm").get<double>();
  g.dx = j.at("dx_mm").get<double>();
  g.nx = j.at("nx").get<std::size_t>();
  g.z0 = j.at("z0_mm").get<double>();
  g.dz = j.at("dz_mm").get<double>();
  g.nz = j.at("nz").get<std::size_t>();
  return g;
}

inline void write_f32(const fs::path& path, const std::vector<double>& values) {
  std::vector<float> buf(values.begin(), values.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path.string());
}

/// Writes <dir>/meta.json and <dir>/data.f32. `extra` is merged into meta.
inline void write_tensor(const fs::path& dir, const MeasurementTensor& t, const json& extra = json::object()) {
  t.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  json meta = {{"format", "fluencelab-tensor"},
               {"version", 1},
               {"dims", {t.frames(), t.fibers, t.pixels()}},
               {"order", "wavelength,fiber,pixel(z,x row-major)"},
               {"dtype", "float32"},
               {"endianness", "little"},
               {"wavelengths_nm", t.wavelengths_nm},
               {"control_index", t.control_index ? json(*t.control_index) : json(nullptr)},
               {"grid", grid_to_json(t.grid)}};
  meta.update(extra);
  write_text(dir / "meta.json", meta.dump(2) + "\n");
  write_f32(dir / "data.f32", t.values);
}

inline MeasurementTensor read_tensor(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(read_text(dir / "meta.json"));
  } catch (const json::parse_error& e) {
    throw IoError("tensor meta " + (dir / "meta.json").string() + " is not valid JSON: " + e.what());
  }
  MeasurementTensor t;
  try {
    if (meta.value("endianness", "little") != "little") throw IoError("tensor: only little-endian data is supported");
    const auto dims = meta.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw IoError("tensor: dims must have 3 entries");
    t.wavelengths_nm = meta.at("wavelengths_nm").get<std::vector<double>>();
    if (!meta.at("control_index").is_null()) t.control_index = meta.at("control_index").get<std::size_t>();
    t.fibers = dims[1];
    t.grid = grid_from_json(meta.at("grid"));
    if (dims[0] != t.frames() || dims[2] != t.pixels()) throw IoError("tensor: dims disagree with wavelengths or grid");
  } catch (const json::exception& e) {
    throw IoError(std::string("tensor meta: ") + e.what());
  }

  const fs::path data = dir / "data.f32";
  std::error_code ec;
  const auto bytes = fs::file_size(data, ec);
  if (ec) throw IoError("cannot stat " + data.string() + ": " + ec.message());
  const std::uintmax_t expected = 4ull * t.frames() * t.fibers * t.pixels();
  if (bytes != expected) {
    throw IoError(data.string() + ": " + std::to_string(bytes) + " bytes, expected " + std::to_string(expected));
  }
  std::vector<float> buf(expected / 4);
  std::ifstream in(data, std::ios::binary);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected))) {
    throw IoError("read failed: " + data.string());
  }
  t.values.assign(buf.begin(), buf.end());
  try {
    t.validate();
  } catch (const ConfigError& e) {
    throw IoError(e.what());
  }
  return t;
}

// ---------------------------------------------------------------- field files

/// One JSON header line, then little-endian float32 values, x fastest.
inline void write_field(const fs::path& path, const FluenceField& f) {
  const json header = {{"format", "fluencelab-field"},
                       {"dims", {f.grid.dims[0], f.grid.dims[1], f.grid.dims[2]}},
                       {"spacing_mm", f.grid.spacing},
                       {"origin_mm", {f.grid.origin.x, f.grid.origin.y, f.grid.origin.z}},
                       {"photons", f.photons},
                       {"seed", f.seed},
                       {"units", "fluence per launched photon, mm^-2"}};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << header.dump() << '\n';
  std::vector<float> buf(f.values.begin(), f.values.end());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path.string());
}

inline FluenceField read_field(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  FluenceField f;
  try {
    const auto h = json::parse(line);
    const auto dims = h.at("dims").get<std::vector<std::size_t>>();
    const auto origin = h.at("origin_mm").get<std::vector<double>>();
    if (dims.size() != 3 || origin.size() != 3) throw IoError("field header: dims and origin need 3 entries");
    f.grid.dims = {dims[0], dims[1], dims[2]};
    f.grid.spacing = h.at("spacing_mm").get<double>();
    f.grid.origin = {origin[0], origin[1], origin[2]};
    f.photons = h.at("photons").get<std::uint64_t>();
    f.seed = h.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw IoError("field header in " + path.string() + ": " + e.what());
  }
  std::vector<float> buf(f.grid.size());
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    throw IoError(path.string() + ": truncated field data");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError(path.string() + ": trailing bytes after field data");
  f.values.assign(buf.begin(), buf.end());
  return f;
}

inline CsvTable axial_slice(const FluenceField& f, double x, double y) {
  CsvTable t{{"z_mm", "fluence_per_mm2"}, {}};
  for (std::size_t iz = 0; iz < f.grid.dims[2]; ++iz) {
    const double z = f.grid.origin.z + (iz + 0.5) * f.grid.spacing;
    t.add({z, f.sample({x, y, z})});
  }
  return t;
}

// Plane y = y0 as long-format rows (x, z, value).
inline CsvTable plane_slice(const FluenceField& f, double y0) {
  CsvTable t{{"x_mm", "z_mm", "fluence_per_mm2"}, {}};
  const double fy = (y0 - f.grid.origin.y) / f.grid.spacing - 0.5;
  const auto iy = static_cast<std::size_t>(std::clamp(std::lround(fy), 0l, static_cast<long>(f.grid.dims[1]) - 1));
  for (std::size_t iz = 0; iz < f.grid.dims[2]; ++iz) {
    for (std::size_t ix = 0; ix < f.grid.dims[0]; ++ix) {
      const Vec3 c = f.grid.center(ix, iy, iz);
      t.add({c.x, c.z, f.at(ix, iy, iz)});
    }
  }
  return t;
}

// ---------------------------------------------------------------- estimation results

inline json estimation_to_json(const EstimationResult& r, const NormalizedTensor& y, const SupportSelection& support) {
  json fits = json::array();
  for (std::size_t j = 0; j < r.fits.size(); ++j) {
    const auto& f = r.fits[j];
    json e = {{"wavelength_nm", f.wavelength_nm},
              {"mu_eff_per_mm", f.mu_eff},
              {"residual", f.residual},
              {"relative_residual", f.relative_residual},
              {"at_bound", f.at_bound},
              {"iterations", f.iterations}};
    e["mu_s_reduced_per_mm"] = f.mu_s_reduced ? json(*f.mu_s_reduced) : json(nullptr);
    if (!r.smoothed_mu_eff.empty()) e["mu_eff_smoothed_per_mm"] = r.smoothed_mu_eff[j];
    if (!r.smoothed_mu_s.empty()) e["mu_s_reduced_smoothed_per_mm"] = r.smoothed_mu_s[j];
    fits.push_back(e);
  }
  return {{"format", "fluencelab-estimate"},
          {"model", static_cast<int>(r.model)},
          {"fits", fits},
          {"any_at_bound", r.any_at_bound()},
          {"tau", support.tau},
          {"support_pixels", r.pixels},
          {"weights", r.weights},
          {"dropped_pixels", y.dropped},
          {"beta", r.beta}};
}

inline EstimationResult estimation_from_json(const json& j) {
  EstimationResult r;
  try {
    if (j.value("format", "") != "fluencelab-estimate") throw IoError("estimate file: wrong format tag");
    r.model = parse_model(j.at("model").get<int>());
    for (const auto& e : j.at("fits")) {
      WavelengthFit f;
      f.wavelength_nm = e.at("wavelength_nm").get<double>();
      f.mu_eff = e.at("mu_eff_per_mm").get<double>();
      if (!e.at("mu_s_reduced_per_mm").is_null()) f.mu_s_reduced = e.at("mu_s_reduced_per_mm").get<double>();
      f.residual = e.at("residual").get<double>();
      f.relative_residual = e.value("relative_residual", 0.0);
      f.at_bound = e.at("at_bound").get<bool>();
      f.iterations = e.value("iterations", 0);
      if (e.contains("mu_eff_smoothed_per_mm")) r.smoothed_mu_eff.push_back(e["mu_eff_smoothed_per_mm"].get<double>());
      if (e.contains("mu_s_reduced_smoothed_per_mm")) {
        r.smoothed_mu_s.push_back(e["mu_s_reduced_smoothed_per_mm"].get<double>());
      }
      r.fits.push_back(f);
    }
    r.pixels = j.at("support_pixels").get<std::vector<std::size_t>>();
    r.weights = j.value("weights", std::vector<double>{});
    r.beta = j.value("beta", std::vector<double>{});
  } catch (const json::exception& e) {
    throw IoError(std::string("estimate file: ") + e.what());
  }
  if (!r.smoothed_mu_eff.empty() && r.smoothed_mu_eff.size() != r.fits.size()) throw IoError("estimate file: partial smoothing");
  if (!r.smoothed_mu_s.empty() && r.smoothed_mu_s.size() != r.fits.size()) throw IoError("estimate file: partial smoothing");
  return r;
}

inline CsvTable estimation_spectra(const EstimationResult& r) {
  CsvTable t{{"wavelength_nm", "mu_eff_hat_per_cm", "mu_s_reduced_hat_per_cm", "mu_eff_smoothed_per_cm",
              "mu_s_reduced_smoothed_per_cm", "relative_residual", "at_bound"},
             {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < r.fits.size(); ++j) {
    const auto& f = r.fits[j];
    t.add({f.wavelength_nm, per_mm_to_per_cm(f.mu_eff), f.mu_s_reduced ? per_mm_to_per_cm(*f.mu_s_reduced) : nan,
           r.smoothed_mu_eff.empty() ? nan : per_mm_to_per_cm(r.smoothed_mu_eff[j]),
           r.smoothed_mu_s.empty() ? nan : per_mm_to_per_cm(r.smoothed_mu_s[j]), f.relative_residual,
           f.at_bound ? 1.0 : 0.0});
  }
  return t;
}

}  // namespace fluencelab
