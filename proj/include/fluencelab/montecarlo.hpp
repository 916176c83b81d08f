#pragma once

// Photon-packet Monte Carlo for a pencil beam entering a semi-infinite
// scattering medium (z >= 0). Serves as the fluence ground truth that the
// analytic models are checked against.
//
// Packets carry weight; each interaction deposits the fraction mu_a / mu_t
// into the containing voxel, scattering follows Henyey-Greenstein, the z = 0
// surface applies probabilistic Fresnel reflection, and low-weight packets
// are terminated by Russian roulette. Photons that cross into the transducer
// footprint are absorbed by it.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fluencelab/boundary.hpp"
#include "fluencelab/errors.hpp"
#include "fluencelab/geometry_media.hpp"

namespace fluencelab {

struct VoxelGrid {
  std::array<std::size_t, 3> dims{0, 0, 0};  // nx, ny, nz
  double spacing = 0.2;                       // mm
  Vec3 origin{};                              // corner of voxel (0,0,0), mm

  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const { return ix + dims[0] * (iy + dims[1] * iz); }
  Vec3 center(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return {origin.x + (ix + 0.5) * spacing, origin.y + (iy + 0.5) * spacing, origin.z + (iz + 0.5) * spacing};
  }
  double voxel_volume() const { return spacing * spacing * spacing; }

  // Grid spanning x in [-ex/2, ex/2], y in [-ey/2, ey/2], z in [0, ez].
  static VoxelGrid centered(double extent_x, double extent_y, double extent_z, double spacing) {
    if (!(spacing > 0.0)) throw ConfigError("voxel grid: spacing must be positive");
    VoxelGrid g;
    g.spacing = spacing;
    g.dims = {static_cast<std::size_t>(std::lround(extent_x / spacing)),
              static_cast<std::size_t>(std::lround(extent_y / spacing)),
              static_cast<std::size_t>(std::lround(extent_z / spacing))};
    g.origin = {-0.5 * g.dims[0] * spacing, -0.5 * g.dims[1] * spacing, 0.0};
    return g;
  }
};

struct McConfig {
  std::uint64_t photons = 2'000'000;
  double mu_a = 0.003;          // mm^-1
  double mu_s_reduced = 1.0;    // mm^-1; 0 disables scattering
  double g = 0.0;
  double n_medium = 1.33;
  double n_coupling = 1.49;     // transducer face
  double n_ambient = 1.0;       // outside the transducer footprint
  Vec3 source{0.0, 5.68, 0.0};
  double tilt_deg = 35.0;
  bool refract_at_entry = false;
  double transducer_half_x = 15.0;  // footprint on z = 0, centered at the origin
  double transducer_half_y = 10.0;
  VoxelGrid grid = VoxelGrid::centered(50.0, 50.0, 40.0, 0.2);
  std::uint64_t seed = 1;
  double roulette_threshold = 1e-4;
  double roulette_survival = 0.1;
  std::size_t batch_size = 65536;
  unsigned threads = 0;  // 0 = hardware concurrency

  double mu_s() const { return mu_s_reduced / (1.0 - g); }
  double mu_t() const { return mu_a + mu_s(); }

  void validate() const {
    if (photons < 1) throw ConfigError("mc: photons must be >= 1");
    if (!(mu_a > 0.0)) {
      throw ConfigError("mc: mu_a must be positive for the absorbed-energy fluence estimator "
                        "(a path-length estimator would be needed for mu_a = 0)");
    }
    if (!(mu_s_reduced >= 0.0)) throw ConfigError("mc: mu_s' must be >= 0");
    if (!(g > -1.0 && g < 1.0)) throw ConfigError("mc: g must be in (-1, 1)");
    if (!(n_medium > 0.0 && n_coupling > 0.0 && n_ambient > 0.0)) throw ConfigError("mc: indices must be positive");
    if (!(tilt_deg >= 0.0 && tilt_deg < 90.0)) throw ConfigError("mc: tilt must be in [0, 90)");
    if (!(grid.spacing > 0.0) || grid.size() == 0) throw ConfigError("mc: empty voxel grid");
    if (grid.origin.z < 0.0) throw ConfigError("mc: voxel grid must cover z >= 0 only");
    if (!(roulette_survival > 0.0 && roulette_survival < 1.0)) throw ConfigError("mc: roulette survival must be in (0, 1)");
    if (!(roulette_threshold > 0.0)) throw ConfigError("mc: roulette threshold must be positive");
    if (batch_size == 0) throw ConfigError("mc: batch size must be positive");
  }
};

/// Weight bookkeeping. absorbed + escaped + transducer + specular + roulette_net
/// equals launched up to rounding.
struct McTally {
  double launched = 0.0;
  double absorbed = 0.0;
  double escaped = 0.0;
  double transducer = 0.0;
  double specular = 0.0;      // reflected at entry
  double roulette_net = 0.0;  // killed weight minus weight added to survivors
  std::uint64_t interactions = 0;
  std::uint64_t internal_reflections = 0;

  double accounted() const { return absorbed + escaped + transducer + specular + roulette_net; }

  void merge(const McTally& o) {
    launched += o.launched;
    absorbed += o.absorbed;
    escaped += o.escaped;
    transducer += o.transducer;
    specular += o.specular;
    roulette_net += o.roulette_net;
    interactions += o.interactions;
    internal_reflections += o.internal_reflections;
  }
};

/// Voxelized fluence per launched photon: deposited weight / (mu_a * voxel volume * photons).
struct FluenceField {
  VoxelGrid grid;
  std::vector<double> values;
  std::uint64_t photons = 0;
  std::uint64_t seed = 0;
  McTally tally;

  double at(std::size_t ix, std::size_t iy, std::size_t iz) const { return values[grid.index(ix, iy, iz)]; }

  // Trilinear interpolation between voxel centers, clamped at the grid edges.
  double sample(Vec3 p) const {
    const auto coord = [&](double v, double o, std::size_t n, std::size_t& i0, double& t) {
      double f = (v - o) / grid.spacing - 0.5;
      f = std::clamp(f, 0.0, static_cast<double>(n - 1));
      i0 = std::min(static_cast<std::size_t>(f), n > 1 ? n - 2 : 0);
      t = n > 1 ? f - static_cast<double>(i0) : 0.0;
    };
    std::size_t ix, iy, iz;
    double tx, ty, tz;
    coord(p.x, grid.origin.x, grid.dims[0], ix, tx);
    coord(p.y, grid.origin.y, grid.dims[1], iy, ty);
    coord(p.z, grid.origin.z, grid.dims[2], iz, tz);
    const std::size_t jx = std::min(ix + 1, grid.dims[0] - 1);
    const std::size_t jy = std::min(iy + 1, grid.dims[1] - 1);
    const std::size_t jz = std::min(iz + 1, grid.dims[2] - 1);
    const auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
    const double c00 = lerp(at(ix, iy, iz), at(jx, iy, iz), tx);
    const double c10 = lerp(at(ix, jy, iz), at(jx, jy, iz), tx);
    const double c01 = lerp(at(ix, iy, jz), at(jx, iy, jz), tx);
    const double c11 = lerp(at(ix, jy, jz), at(jx, jy, jz), tx);
    return lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz);
  }
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::mt19937_64 batch_rng(std::uint64_t seed, std::uint64_t batch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(batch), static_cast<std::uint32_t>(batch >> 32), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

}  // namespace detail

/// Cosine of a Henyey-Greenstein deflection for uniform u in [0, 1).
inline double sample_hg_cosine(double g, double u) {
  if (std::abs(g) < 1e-9) return 2.0 * u - 1.0;
  const double tmp = (1.0 - g * g) / (1.0 - g + 2.0 * g * u);
  return std::clamp((1.0 + g * g - tmp * tmp) / (2.0 * g), -1.0, 1.0);
}

/// Exponential free path for uniform u in [0, 1).
inline double sample_free_path(double mu_t, double u) { return -std::log(1.0 - u) / mu_t; }

// Uniform azimuth as (cos phi, sin phi), by rejection from the unit disk.
inline std::pair<double, double> sample_azimuth(std::mt19937_64& rng) {
  for (;;) {
    const double a = 2.0 * detail::uniform01(rng) - 1.0;
    const double b = 2.0 * detail::uniform01(rng) - 1.0;
    const double r2 = a * a + b * b;
    if (r2 > 0.0 && r2 <= 1.0) return {(a * a - b * b) / r2, 2.0 * a * b / r2};
  }
}

// Rotates direction d by polar cosine `cost` and azimuth (cosp, sinp).
inline Vec3 deflect(Vec3 d, double cost, double cosp, double sinp) {
  const double sint = std::sqrt(std::max(0.0, 1.0 - cost * cost));
  if (std::abs(d.z) > 0.99999) {
    const double s = d.z > 0.0 ? 1.0 : -1.0;
    return {sint * cosp, sint * sinp, s * cost};
  }
  const double tmp = std::sqrt(1.0 - d.z * d.z);
  Vec3 out{sint * (d.x * d.z * cosp - d.y * sinp) / tmp + d.x * cost,
           sint * (d.y * d.z * cosp + d.x * sinp) / tmp + d.y * cost, -sint * cosp * tmp + d.z * cost};
  const double n = out.norm();
  return (1.0 / n) * out;
}

namespace detail {

class PhotonTracer {
 public:
  PhotonTracer(const McConfig& cfg, std::vector<double>& deposit, McTally& tally)
      : cfg_(cfg), deposit_(deposit), tally_(tally), mu_t_(cfg.mu_t()), albedo_loss_(cfg.mu_a / cfg.mu_t()) {
    const double tilt = deg_to_rad(cfg.tilt_deg);
    double sin_t = std::sin(tilt);
    entry_weight_ = 1.0;
    if (cfg.refract_at_entry && cfg.n_coupling != cfg.n_medium) {
      const double entry_rel = cfg.n_coupling / cfg.n_medium;
      entry_weight_ = 1.0 - fresnel_reflectance(tilt, entry_rel);
      sin_t = std::min(1.0, entry_rel * sin_t);
    }
    const double cos_t = std::sqrt(1.0 - sin_t * sin_t);
    launch_dir_ = {0.0, tilt_direction(cfg.source.y) * sin_t, cos_t};
  }

  void run(std::mt19937_64& rng) {
    tally_.launched += 1.0;
    double w = entry_weight_;
    tally_.specular += 1.0 - entry_weight_;
    if (w <= 0.0) return;
    Vec3 pos{cfg_.source.x, cfg_.source.y, 0.0};
    Vec3 dir = launch_dir_;

    for (;;) {
      double step = sample_free_path(mu_t_, uniform01(rng));
      // Boundary crossings within this step.
      for (;;) {
        if (dir.z < 0.0 && pos.z + step * dir.z < 0.0) {
          const double to_surface = -pos.z / dir.z;
          pos = pos + to_surface * dir;
          pos.z = 0.0;
          step -= to_surface;
          const bool on_transducer =
              std::abs(pos.x) <= cfg_.transducer_half_x && std::abs(pos.y) <= cfg_.transducer_half_y;
          const double n_out = on_transducer ? cfg_.n_coupling : cfg_.n_ambient;
          const double theta = std::acos(std::clamp(-dir.z, 0.0, 1.0));
          const double reflect = fresnel_reflectance(theta, cfg_.n_medium / n_out);
          if (uniform01(rng) < reflect) {
            dir.z = -dir.z;
            ++tally_.internal_reflections;
            continue;
          }
          (on_transducer ? tally_.transducer : tally_.escaped) += w;
          return;
        }
        pos = pos + step * dir;
        break;
      }

      ++tally_.interactions;
      const double dw = w * albedo_loss_;
      deposit_at(pos, dw);
      tally_.absorbed += dw;
      w -= dw;
      if (w <= 0.0) return;

      if (cfg_.mu_s_reduced > 0.0) {
        const double cost = sample_hg_cosine(cfg_.g, uniform01(rng));
        const auto [cosp, sinp] = sample_azimuth(rng);
        dir = deflect(dir, cost, cosp, sinp);
      }

      if (w < cfg_.roulette_threshold) {
        if (uniform01(rng) < cfg_.roulette_survival) {
          const double boosted = w / cfg_.roulette_survival;
          tally_.roulette_net -= boosted - w;
          w = boosted;
        } else {
          tally_.roulette_net += w;
          return;
        }
      }
    }
  }

 private:
  void deposit_at(Vec3 p, double dw) {
    const auto& g = cfg_.grid;
    const double fx = (p.x - g.origin.x) / g.spacing;
    const double fy = (p.y - g.origin.y) / g.spacing;
    const double fz = (p.z - g.origin.z) / g.spacing;
    if (fx < 0.0 || fy < 0.0 || fz < 0.0) return;
    const auto ix = static_cast<std::size_t>(fx);
    const auto iy = static_cast<std::size_t>(fy);
    const auto iz = static_cast<std::size_t>(fz);
    if (ix >= g.dims[0] || iy >= g.dims[1] || iz >= g.dims[2]) return;
    deposit_[g.index(ix, iy, iz)] += dw;
  }

  const McConfig& cfg_;
  std::vector<double>& deposit_;
  McTally& tally_;
  double mu_t_;
  double albedo_loss_;
  double entry_weight_ = 1.0;
  Vec3 launch_dir_{};
};

}  // namespace detail

/// Runs the simulation. Photons are processed in fixed-size batches with
/// counter-derived seeds, and batch results are merged in batch order, so the
/// output is bit-identical for any worker count.
inline FluenceField simulate(const McConfig& cfg) {
  cfg.validate();
  const std::size_t n_vox = cfg.grid.size();
  const std::uint64_t n_batches = (cfg.photons + cfg.batch_size - 1) / cfg.batch_size;
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, n_batches));

  std::vector<double> sum(n_vox, 0.0);
  std::vector<double> comp(n_vox, 0.0);  // Kahan compensation
  McTally total;

  std::atomic<std::uint64_t> next_batch{0};
  std::uint64_t next_merge = 0;
  std::mutex mu;
  std::condition_variable cv;

  auto worker = [&]() {
    std::vector<double> local(n_vox, 0.0);
    for (;;) {
      const std::uint64_t b = next_batch.fetch_add(1);
      if (b >= n_batches) return;
      McTally tally;
      detail::PhotonTracer tracer(cfg, local, tally);
      auto rng = detail::batch_rng(cfg.seed, b);
      const std::uint64_t first = b * cfg.batch_size;
      const std::uint64_t count = std::min<std::uint64_t>(cfg.batch_size, cfg.photons - first);
      for (std::uint64_t i = 0; i < count; ++i) tracer.run(rng);

      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return next_merge == b; });
      for (std::size_t v = 0; v < n_vox; ++v) {
        if (local[v] == 0.0) continue;
        const double y = local[v] - comp[v];
        const double t = sum[v] + y;
        comp[v] = (t - sum[v]) - y;
        sum[v] = t;
      }
      total.merge(tally);
      ++next_merge;
      lock.unlock();
      cv.notify_all();
      std::fill(local.begin(), local.end(), 0.0);
    }
  };

  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  FluenceField field;
  field.grid = cfg.grid;
  field.photons = cfg.photons;
  field.seed = cfg.seed;
  field.tally = total;
  field.values.resize(n_vox);
  const double scale = 1.0 / (cfg.mu_a * cfg.grid.voxel_volume() * static_cast<double>(cfg.photons));
  for (std::size_t v = 0; v < n_vox; ++v) field.values[v] = sum[v] * scale;
  return field;
}

struct AxialLine {
  double x = 0.0;
  double y = 0.0;
  double z_lo = 5.0;
  double z_hi = 25.0;
  double step = 0.5;
  double fit_from = 0.0;  // amplitude matched over z >= max(fit_from, z_lo)
};

struct ComparisonRow {
  double z = 0.0;
  double mc = 0.0;
  double model = 0.0;  // amplitude-matched
  double rel_diff = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  double amplitude = 0.0;
  double max_abs_rel = 0.0;
  double mean_abs_rel = 0.0;
};

/// Relative deviation of the field from a model along an axial line, after a
/// least-squares amplitude match over the diffusive region.
inline ComparisonTable compare_to_model(const FluenceField& field, const std::function<double(Vec3)>& model,
                                        const AxialLine& line) {
  if (!(line.step > 0.0) || line.z_hi < line.z_lo) throw NumericError("compare_to_model: invalid axial line");
  const double grid_top = field.grid.origin.z + field.grid.dims[2] * field.grid.spacing;
  const double z_hi = std::min(line.z_hi, grid_top - 0.5 * field.grid.spacing);
  std::vector<double> zs;
  for (double z = line.z_lo; z <= z_hi + 1e-9; z += line.step) zs.push_back(z);
  if (zs.empty()) throw NumericError("compare_to_model: axial line does not overlap the voxel grid");

  ComparisonTable table;
  std::vector<double> mc(zs.size()), m(zs.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const Vec3 p{line.x, line.y, zs[i]};
    mc[i] = field.sample(p);
    m[i] = model(p);
    if (zs[i] >= line.fit_from) {
      num += mc[i] * m[i];
      den += m[i] * m[i];
    }
  }
  if (!(den > 0.0)) throw NumericError("compare_to_model: empty overlap between fit region and axial line");
  table.amplitude = num / den;
  double acc = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const double scaled = table.amplitude * m[i];
    const double rel = scaled != 0.0 ? (mc[i] - scaled) / scaled : 0.0;
    table.rows.push_back({zs[i], mc[i], scaled, rel});
    table.max_abs_rel = std::max(table.max_abs_rel, std::abs(rel));
    acc += std::abs(rel);
  }
  table.mean_abs_rel = acc / static_cast<double>(zs.size());
  return table;
}

}  // namespace fluencelab
