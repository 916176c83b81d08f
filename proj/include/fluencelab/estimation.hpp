#pragma once

// Optical-parameter estimation from swept-beam PA measurements:
//
//   control frame -> per-fiber noise bias -> debiased frames
//   summed image  -> thresholded support and pixel weights
//   fiber-normalized measurements vs fiber-normalized model fluence
//   -> per-wavelength weighted least squares (grid search + simplex)
//   -> optional quadratic smoothing over wavelength.
//
// Normalizing over fibers removes the per-pixel amplitude (absorption,
// Grueneisen and source power), leaving (mu_eff, mu_s') for Model I and
// mu_eff alone for Model II.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "fluencelab/boundary.hpp"
#include "fluencelab/errors.hpp"
#include "fluencelab/fluence_models.hpp"
#include "fluencelab/geometry_media.hpp"
#include "fluencelab/simplex.hpp"
#include "fluencelab/tensor.hpp"

namespace fluencelab {

/// b_k: mean over pixels of the control frame for each fiber.
inline std::vector<double> estimate_noise_bias(const MeasurementTensor& t) {
  if (!t.control_index) {
    throw ConfigError("estimate_noise_bias: tensor has no control frame; supply the bias vector explicitly");
  }
  std::vector<double> b(t.fibers, 0.0);
  for (std::size_t k = 0; k < t.fibers; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.pixels(); ++i) s += t.at(*t.control_index, k, i);
    b[k] = s / static_cast<double>(t.pixels());
  }
  return b;
}

/// Subtracts b_k from every analysis frame and drops the control frame.
inline MeasurementTensor debias(const MeasurementTensor& t, const std::vector<double>& bias) {
  if (bias.size() != t.fibers) throw ConfigError("debias: bias vector length must equal the fiber count");
  std::vector<double> wl;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < t.frames(); ++j) {
    if (t.control_index && j == *t.control_index) continue;
    wl.push_back(t.wavelengths_nm[j]);
    keep.push_back(j);
  }
  auto out = MeasurementTensor::zeros(std::move(wl), std::nullopt, t.fibers, t.grid);
  for (std::size_t jo = 0; jo < keep.size(); ++jo) {
    for (std::size_t k = 0; k < t.fibers; ++k) {
      for (std::size_t i = 0; i < t.pixels(); ++i) out.at(jo, k, i) = t.at(keep[jo], k, i) - bias[k];
    }
  }
  return out;
}

struct TauPolicy {
  enum class Kind { Absolute, Percentile, FractionOfMax };
  Kind kind = Kind::Percentile;
  double value = 90.0;

  static TauPolicy absolute(double tau) { return {Kind::Absolute, tau}; }
  static TauPolicy percentile(double p) { return {Kind::Percentile, p}; }
  static TauPolicy fraction_of_max(double f) { return {Kind::FractionOfMax, f}; }
};

struct SupportSelection {
  std::vector<std::size_t> pixels;  // indices into the pixel grid
  std::vector<double> weights;      // summed magnitude per selected pixel
  double tau = 0.0;
};

struct EmptySupportError : NumericError {
  EmptySupportError(const std::string& msg, double suggestion) : NumericError(msg), suggested_tau(suggestion) {}
  double suggested_tau;
};

// Linear-interpolated percentile, p in [0, 100].
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw DomainError("percentile of an empty set");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Sum over frames and fibers for each pixel.
inline std::vector<double> summed_image(const MeasurementTensor& t) {
  std::vector<double> s(t.pixels(), 0.0);
  for (std::size_t j = 0; j < t.frames(); ++j) {
    for (std::size_t k = 0; k < t.fibers; ++k) {
      for (std::size_t i = 0; i < t.pixels(); ++i) s[i] += t.at(j, k, i);
    }
  }
  return s;
}

/// Keeps pixels whose summed debiased magnitude exceeds tau; the sum is also
/// the pixel weight.
inline SupportSelection select_support(const MeasurementTensor& debiased, const TauPolicy& policy) {
  const auto sums = summed_image(debiased);
  SupportSelection sel;
  switch (policy.kind) {
    case TauPolicy::Kind::Absolute: sel.tau = policy.value; break;
    case TauPolicy::Kind::Percentile: sel.tau = percentile(sums, policy.value); break;
    case TauPolicy::Kind::FractionOfMax:
      sel.tau = policy.value * *std::max_element(sums.begin(), sums.end());
      break;
  }
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (sums[i] > sel.tau) {
      sel.pixels.push_back(i);
      sel.weights.push_back(sums[i]);
    }
  }
  if (sel.pixels.empty()) {
    const double suggestion = percentile(sums, 90.0);
    std::ostringstream msg;
    msg << "select_support: threshold " << sel.tau << " leaves no pixels; try tau <= " << suggestion
        << " (90th percentile of the summed image)";
    throw EmptySupportError(msg.str(), suggestion);
  }
  return sel;
}

/// Fiber-normalized measurements on the support. Each (wavelength, pixel)
/// slice sums to one over fibers.
struct NormalizedTensor {
  std::vector<double> wavelengths_nm;
  std::size_t fibers = 0;
  std::vector<std::size_t> pixels;    // retained grid indices
  std::vector<Vec3> coords;           // pixel positions, mm
  std::vector<double> weights;        // support weight per retained pixel
  std::vector<double> fiber_sums;     // [j][m] sum_k ybar
  std::vector<double> values;         // [j][k][m]
  std::vector<std::size_t> dropped;   // masked pixels removed for a nonpositive fiber sum

  std::size_t wavelengths() const { return wavelengths_nm.size(); }
  std::size_t size() const { return pixels.size(); }
  double at(std::size_t j, std::size_t k, std::size_t m) const { return values[(j * fibers + k) * size() + m]; }
  double fiber_sum(std::size_t j, std::size_t m) const { return fiber_sums[j * size() + m]; }
};

inline NormalizedTensor normalize(const MeasurementTensor& debiased, const SupportSelection& support) {
  NormalizedTensor out;
  out.wavelengths_nm = debiased.wavelengths_nm;
  out.fibers = debiased.fibers;
  const std::size_t nj = debiased.frames();

  for (std::size_t s = 0; s < support.pixels.size(); ++s) {
    const std::size_t i = support.pixels[s];
    bool ok = true;
    for (std::size_t j = 0; j < nj && ok; ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < debiased.fibers; ++k) sum += debiased.at(j, k, i);
      ok = sum > 0.0;
    }
    if (!ok) {
      out.dropped.push_back(i);
      continue;
    }
    out.pixels.push_back(i);
    out.coords.push_back(debiased.grid.coord(i));
    out.weights.push_back(support.weights[s]);
  }

  const std::size_t n = out.pixels.size();
  out.fiber_sums.assign(nj * n, 0.0);
  out.values.assign(nj * out.fibers * n, 0.0);
  for (std::size_t j = 0; j < nj; ++j) {
    for (std::size_t m = 0; m < n; ++m) {
      double sum = 0.0;
      for (std::size_t k = 0; k < out.fibers; ++k) sum += debiased.at(j, k, out.pixels[m]);
      out.fiber_sums[j * n + m] = sum;
      for (std::size_t k = 0; k < out.fibers; ++k) {
        out.values[(j * out.fibers + k) * n + m] = debiased.at(j, k, out.pixels[m]) / sum;
      }
    }
  }
  return out;
}

enum class WeightMode { AllWavelengths, PerWavelength };

struct SearchConfig {
  ModelKind model = ModelKind::I;
  double mu_eff_lo = 0.01;  // mm^-1
  double mu_eff_hi = 0.5;
  double mu_s_lo = 0.1;
  double mu_s_hi = 5.0;
  std::size_t grid_mu_eff = 40;
  std::size_t grid_mu_s = 40;
  SimplexOptions simplex{};
  int restarts = 4;        // fresh simplices from the incumbent after convergence
  std::size_t starts = 3;  // simplex runs from the deepest row-profile minima
  WeightMode weights = WeightMode::AllWavelengths;
  unsigned threads = 1;
};

struct WavelengthFit {
  double wavelength_nm = 0.0;
  double mu_eff = 0.0;
  std::optional<double> mu_s_reduced;  // Model I only
  double residual = 0.0;               // weighted objective at the minimum
  double relative_residual = 0.0;      // residual / weighted data energy
  bool at_bound = false;
  int iterations = 0;
};

struct EstimationResult {
  ModelKind model = ModelKind::I;
  std::vector<WavelengthFit> fits;
  std::vector<std::size_t> pixels;    // support after normalization
  std::vector<double> weights;
  std::vector<double> beta;           // [j][m] post hoc pixel amplitudes
  std::vector<double> smoothed_mu_eff;
  std::vector<double> smoothed_mu_s;

  bool any_at_bound() const {
    return std::any_of(fits.begin(), fits.end(), [](const WavelengthFit& f) { return f.at_bound; });
  }

  // Parameters used for fluence estimates: smoothed values when available.
  FluenceParams params_at(std::size_t j, const ReflectionMoments& moments) const {
    FluenceParams p;
    p.mu_eff = smoothed_mu_eff.empty() ? fits[j].mu_eff : smoothed_mu_eff[j];
    if (model == ModelKind::I) {
      p.mu_s_reduced = smoothed_mu_s.empty() ? *fits[j].mu_s_reduced : smoothed_mu_s[j];
    }
    p.moments = moments;
    return p;
  }
};

namespace detail {

// Fiber-normalized model fluence at one pixel, written to `out` (size K).
inline void normalized_model(ModelKind model, const ProbeGeometry& geo, Vec3 r, const FluenceParams& p,
                             std::vector<double>& out) {
  const double tilt = geo.tilt_rad();
  double sum = 0.0;
  if (model == ModelKind::I) {
    const double l_t = p.transport_length();
    const double z_b = p.z_b();
    for (std::size_t k = 0; k < geo.fiber_tips.size(); ++k) {
      out[k] = model1_fluence(r, image_sources(geo.fiber_tips[k], tilt, l_t, z_b), p);
      sum += out[k];
    }
  } else {
    for (std::size_t k = 0; k < geo.fiber_tips.size(); ++k) {
      out[k] = model2_fluence(r, geo.fiber_tips[k], p.mu_eff, 1.0);
      sum += out[k];
    }
  }
  if (!(sum > 0.0)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (double& v : out) v /= sum;
}

class WavelengthObjective {
 public:
  WavelengthObjective(const NormalizedTensor& y, std::size_t j, const ProbeGeometry& geo, ModelKind model,
                      const ReflectionMoments& moments, WeightMode mode)
      : y_(y), j_(j), geo_(geo), model_(model), moments_(moments), buf_(y.fibers) {
    w_.resize(y.size());
    for (std::size_t m = 0; m < y.size(); ++m) {
      w_[m] = mode == WeightMode::AllWavelengths ? y.weights[m] : y.fiber_sum(j, m);
    }
  }

  double operator()(double mu_eff_value, double mu_s) {
    const FluenceParams p{mu_eff_value, mu_s, 1.0, moments_};
    double total = 0.0;
    for (std::size_t m = 0; m < y_.size(); ++m) {
      normalized_model(model_, geo_, y_.coords[m], p, buf_);
      double acc = 0.0;
      for (std::size_t k = 0; k < y_.fibers; ++k) {
        const double d = y_.at(j_, k, m) - buf_[k];
        acc += d * d;
      }
      total += w_[m] * acc;
    }
    return total;
  }

  double data_energy() const {
    double e = 0.0;
    for (std::size_t m = 0; m < y_.size(); ++m) {
      for (std::size_t k = 0; k < y_.fibers; ++k) e += w_[m] * y_.at(j_, k, m) * y_.at(j_, k, m);
    }
    return e;
  }

 private:
  const NormalizedTensor& y_;
  std::size_t j_;
  const ProbeGeometry& geo_;
  ModelKind model_;
  ReflectionMoments moments_;
  std::vector<double> buf_;
  std::vector<double> w_;
};

// Golden-section minimum of a unimodal function on [a, b].
template <class F>
double golden_minimize(F&& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return v;
}

inline WavelengthFit fit_one_wavelength(const NormalizedTensor& y, std::size_t j, const ProbeGeometry& geo,
                                        const SearchConfig& cfg, const ReflectionMoments& moments) {
  WavelengthObjective obj(y, j, geo, cfg.model, moments, cfg.weights);
  const auto eff_grid = log_grid(cfg.mu_eff_lo, cfg.mu_eff_hi, cfg.grid_mu_eff);
  const double eff_step = std::log(cfg.mu_eff_hi / cfg.mu_eff_lo) / std::max<double>(1.0, cfg.grid_mu_eff - 1.0);
  constexpr double kEdge = 1e-6;

  WavelengthFit fit;
  fit.wavelength_nm = y.wavelengths_nm[j];
  if (cfg.model == ModelKind::I) {
    const auto s_grid = log_grid(cfg.mu_s_lo, cfg.mu_s_hi, cfg.grid_mu_s);
    const double s_step = std::log(cfg.mu_s_hi / cfg.mu_s_lo) / std::max<double>(1.0, cfg.grid_mu_s - 1.0);
    const std::array<double, 2> lo{std::log(cfg.mu_eff_lo), std::log(cfg.mu_s_lo)};
    const std::array<double, 2> hi{std::log(cfg.mu_eff_hi), std::log(cfg.mu_s_hi)};

    // Coarse grid, then the best cell of each mu_s' row is refined in mu_eff
    // within one cell. The objective has a long shallow valley along mu_s'
    // and the coarse mu_eff spacing alone cannot tell which basin is deeper.
    std::vector<std::array<double, 2>> row_best(s_grid.size());
    std::vector<double> row_value(s_grid.size(), std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < s_grid.size(); ++r) {
      for (double e : eff_grid) {
        const double v = obj(e, s_grid[r]);
        if (v < row_value[r]) {
          row_value[r] = v;
          row_best[r] = {std::log(e), std::log(s_grid[r])};
        }
      }
      auto line = [&](double le) { return obj(std::exp(le), s_grid[r]); };
      const double a = std::max(lo[0], row_best[r][0] - eff_step);
      const double b = std::min(hi[0], row_best[r][0] + eff_step);
      const double le = golden_minimize(line, a, b, 1e-4 * eff_step);
      const double v = line(le);
      if (v < row_value[r]) {
        row_value[r] = v;
        row_best[r][0] = le;
      }
    }

    // Simplex from the deepest local minima of the row profile.
    std::vector<std::size_t> starts;
    for (std::size_t r = 0; r < row_value.size(); ++r) {
      const bool left = r == 0 || row_value[r] <= row_value[r - 1];
      const bool right = r + 1 == row_value.size() || row_value[r] <= row_value[r + 1];
      if (left && right) starts.push_back(r);
    }
    std::sort(starts.begin(), starts.end(), [&](std::size_t a, std::size_t b) { return row_value[a] < row_value[b]; });
    if (starts.size() > cfg.starts) starts.resize(cfg.starts);

    SimplexResult<2> res;
    res.value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    for (std::size_t r : starts) {
      auto trial = restarted_nelder_mead<2>(
          [&](const std::array<double, 2>& x) { return obj(std::exp(x[0]), std::exp(x[1])); }, row_best[r],
          {eff_step, s_step}, lo, hi, cfg.simplex, cfg.restarts);
      iterations += trial.iterations;
      if (trial.value < res.value) res = trial;
    }
    res.iterations = iterations;
    fit.mu_eff = std::exp(res.x[0]);
    fit.mu_s_reduced = std::exp(res.x[1]);
    fit.residual = res.value;
    fit.iterations = res.iterations;
    for (std::size_t d = 0; d < 2; ++d) {
      fit.at_bound = fit.at_bound || res.x[d] - lo[d] < kEdge || hi[d] - res.x[d] < kEdge;
    }
  } else {
    double best = std::numeric_limits<double>::infinity();
    std::array<double, 1> start{};
    for (double e : eff_grid) {
      const double v = obj(e, 1.0);
      if (v < best) {
        best = v;
        start = {std::log(e)};
      }
    }
    const std::array<double, 1> lo{std::log(cfg.mu_eff_lo)};
    const std::array<double, 1> hi{std::log(cfg.mu_eff_hi)};
    auto res = restarted_nelder_mead<1>([&](const std::array<double, 1>& x) { return obj(std::exp(x[0]), 1.0); },
                                        start, {eff_step}, lo, hi, cfg.simplex, cfg.restarts);
    fit.mu_eff = std::exp(res.x[0]);
    fit.residual = res.value;
    fit.iterations = res.iterations;
    fit.at_bound = res.x[0] - lo[0] < kEdge || hi[0] - res.x[0] < kEdge;
  }
  const double energy = obj.data_energy();
  fit.relative_residual = energy > 0.0 ? fit.residual / energy : 0.0;
  return fit;
}

}  // namespace detail

/// Per-wavelength weighted least-squares fit of the fiber-normalized model to
/// the fiber-normalized data. Wavelengths are independent; with
/// `cfg.threads > 1` they are fitted concurrently and assembled in order.
inline EstimationResult fit_parameters(const NormalizedTensor& y, const ProbeGeometry& geo, const SearchConfig& cfg) {
  if (y.size() == 0) throw NumericError("fit_parameters: empty support");
  if (geo.fiber_tips.size() != y.fibers) throw ConfigError("fit_parameters: fiber count mismatch with geometry");
  const auto moments = reflection_moments(geo.n_rel());

  EstimationResult result;
  result.model = cfg.model;
  result.pixels = y.pixels;
  result.weights = y.weights;
  result.fits.resize(y.wavelengths());

  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(y.wavelengths())));
  if (workers == 1) {
    for (std::size_t j = 0; j < y.wavelengths(); ++j) result.fits[j] = detail::fit_one_wavelength(y, j, geo, cfg, moments);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t j = t; j < y.wavelengths(); j += workers) {
          result.fits[j] = detail::fit_one_wavelength(y, j, geo, cfg, moments);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  // beta_{j,m} = sum_k ybar / sum_k Phi_hat, unnormalized model with unit amplitude.
  result.beta.assign(y.wavelengths() * y.size(), 0.0);
  const double tilt = geo.tilt_rad();
  for (std::size_t j = 0; j < y.wavelengths(); ++j) {
    const auto p = result.params_at(j, moments);
    for (std::size_t m = 0; m < y.size(); ++m) {
      double s = 0.0;
      for (const auto& tip : geo.fiber_tips) s += model_fluence(cfg.model, y.coords[m], tip, tilt, p);
      result.beta[j * y.size() + m] = s != 0.0 ? y.fiber_sum(j, m) / s : 0.0;
    }
  }
  return result;
}

/// Least-squares quadratic in wavelength, evaluated back on the grid.
inline std::vector<double> quadratic_smooth(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw DomainError("quadratic_smooth: need >= 3 matching samples");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v - mean));
  if (scale == 0.0) scale = 1.0;
  Eigen::MatrixXd a(x.size(), 3);
  Eigen::VectorXd b(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = (x[i] - mean) / scale;
    a(i, 0) = 1.0;
    a(i, 1) = t;
    a(i, 2) = t * t;
    b(i) = y[i];
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd fitted = a * c;
  return {fitted.data(), fitted.data() + fitted.size()};
}

inline EstimationResult smooth_spectra(EstimationResult result) {
  if (result.fits.size() < 3) throw DomainError("smooth_spectra: need at least 3 wavelengths");
  std::vector<double> wl, eff, s;
  for (const auto& f : result.fits) {
    wl.push_back(f.wavelength_nm);
    eff.push_back(f.mu_eff);
    if (f.mu_s_reduced) s.push_back(*f.mu_s_reduced);
  }
  // The quadratic can overshoot when a fit sits on a bound; keep it inside
  // the range of the raw fits so the smoothed parameters stay physical.
  const auto clamped = [&wl](const std::vector<double>& v) {
    auto out = quadratic_smooth(wl, v);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    for (double& x : out) x = std::clamp(x, *lo, *hi);
    return out;
  };
  result.smoothed_mu_eff = clamped(eff);
  if (s.size() == wl.size()) result.smoothed_mu_s = clamped(s);
  return result;
}

/// 10 log10((mean_k p_k)^2 / sigma^2)
inline double snr(const std::vector<double>& signal, double sigma_n) {
  if (sigma_n == 0.0) throw NumericError("snr: zero noise gives infinite SNR");
  if (!(sigma_n > 0.0) || signal.empty()) throw DomainError("snr: sigma must be positive and signal nonempty");
  const double mean = std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(signal.size());
  return 10.0 * std::log10(mean * mean / (sigma_n * sigma_n));
}

/// Correlation of fiber profiles: each stack is summed over pixels and
/// wavelengths per fiber, the mean over fibers is removed, and the normalized
/// inner product is returned.
inline double fluence_correlation(const FluenceStack& estimate, const FluenceStack& truth) {
  if (estimate.wavelengths != truth.wavelengths || estimate.fibers != truth.fibers || estimate.pixels != truth.pixels) {
    throw DomainError("fluence_correlation: stacks must share wavelength, fiber and pixel index sets");
  }
  const auto profile = [](const FluenceStack& s) {
    std::vector<double> p(s.fibers, 0.0);
    for (std::size_t j = 0; j < s.wavelengths; ++j) {
      for (std::size_t k = 0; k < s.fibers; ++k) {
        for (std::size_t i = 0; i < s.pixels; ++i) p[k] += s.at(j, k, i);
      }
    }
    const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
    for (double& v : p) v -= mean;
    return p;
  };
  const auto a = profile(estimate);
  const auto b = profile(truth);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  if (aa == 0.0 || bb == 0.0) throw NumericError("fluence_correlation: zero-variance fiber profile");
  return ab / std::sqrt(aa * bb);
}

/// Model fluence for every fiber at the given points, one parameter set per
/// wavelength. With `fiber_normalized` each (wavelength, point) slice sums to one.
inline FluenceStack model_fluence_stack(ModelKind model, const ProbeGeometry& geo, const std::vector<Vec3>& points,
                                        const std::vector<FluenceParams>& params, bool fiber_normalized) {
  FluenceStack s(params.size(), geo.fiber_tips.size(), points.size());
  const double tilt = geo.tilt_rad();
  std::vector<double> buf(geo.fiber_tips.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (fiber_normalized) {
        detail::normalized_model(model, geo, points[i], params[j], buf);
      } else {
        for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = model_fluence(model, points[i], geo.fiber_tips[k], tilt, params[j]);
      }
      for (std::size_t k = 0; k < buf.size(); ++k) s.at(j, k, i) = buf[k];
    }
  }
  return s;
}

// Fluence estimate implied by a fit at the given points.
inline FluenceStack estimated_fluence(const EstimationResult& result, const ProbeGeometry& geo,
                                      const std::vector<Vec3>& points, bool fiber_normalized) {
  const auto moments = reflection_moments(geo.n_rel());
  std::vector<FluenceParams> params;
  for (std::size_t j = 0; j < result.fits.size(); ++j) params.push_back(result.params_at(j, moments));
  return model_fluence_stack(result.model, geo, points, params, fiber_normalized);
}

}  // namespace fluencelab
