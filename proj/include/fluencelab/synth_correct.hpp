#pragma once

// Synthetic multi-fiber PA data and fluence correction of absorption spectra.
//
// The Grueneisen parameter is fixed at 1 and folds into the model amplitude,
// so every recovered spectrum is defined up to a global scale.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fluencelab/boundary.hpp"
#include "fluencelab/errors.hpp"
#include "fluencelab/fluence_models.hpp"
#include "fluencelab/geometry_media.hpp"
#include "fluencelab/tensor.hpp"

namespace fluencelab {

struct ChromophoreSpectrum {
  std::string name;
  std::vector<double> alpha;  // mm^-1 per unit concentration, one per analysis wavelength

  void validate(std::size_t wavelengths) const {
    if (alpha.size() != wavelengths) {
      throw ConfigError("chromophore '" + name + "': expected " + std::to_string(wavelengths) + " values, got " +
                        std::to_string(alpha.size()));
    }
    for (double a : alpha) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("chromophore '" + name + "': alpha must be finite and >= 0");
    }
  }
};

/// Sum_l C_l alpha_l(lambda_j).
inline std::vector<double> mixture_absorption(const std::vector<ChromophoreSpectrum>& chromophores,
                                              const std::vector<double>& concentrations) {
  if (chromophores.size() != concentrations.size()) {
    throw ConfigError("mixture: one concentration per chromophore required");
  }
  if (chromophores.empty()) return {};
  std::vector<double> out(chromophores.front().alpha.size(), 0.0);
  for (std::size_t l = 0; l < chromophores.size(); ++l) {
    if (chromophores[l].alpha.size() != out.size()) throw ConfigError("mixture: chromophore spectra differ in length");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += concentrations[l] * chromophores[l].alpha[j];
  }
  return out;
}

struct Target {
  double x = 0.0;  // mm
  double z = 10.0;
  std::vector<double> concentrations;
  std::size_t footprint = 3;  // side of the square footprint in pixels; 1 is a single pixel
};

/// Pixels covered by a target, clipped to the grid.
inline std::vector<std::size_t> target_pixels(const PixelGrid& grid, const Target& t) {
  const auto [cx, cz] = grid.nearest(t.x, t.z);
  const long half = static_cast<long>(t.footprint / 2);
  std::vector<std::size_t> out;
  for (long dz = -half; dz <= half; ++dz) {
    for (long dx = -half; dx <= half; ++dx) {
      const long ix = static_cast<long>(cx) + dx;
      const long iz = static_cast<long>(cz) + dz;
      if (ix < 0 || iz < 0 || ix >= static_cast<long>(grid.nx) || iz >= static_cast<long>(grid.nz)) continue;
      out.push_back(grid.index(static_cast<std::size_t>(ix), static_cast<std::size_t>(iz)));
    }
  }
  return out;
}

struct SynthesisSpec {
  ProbeGeometry geometry = ProbeGeometry::standard();
  WavelengthGrid wavelengths = WavelengthGrid::standard();
  OpticalMedium medium;  // one entry per analysis wavelength
  std::vector<ChromophoreSpectrum> chromophores;
  std::vector<Target> targets;
  PixelGrid grid;
  ModelKind model = ModelKind::I;
  double snr_db = std::numeric_limits<double>::infinity();  // infinity disables noise
  std::vector<double> noise_mean;  // empty: zero; one value: every fiber; else one per fiber
  std::uint64_t seed = 1;

  void validate() const {
    geometry.validate();
    grid.validate();
    medium.validate();
    const std::size_t nj = wavelengths.analysis_wavelengths().size();
    if (wavelengths.control_index >= wavelengths.wavelengths_nm.size()) {
      throw ConfigError("synthesis: control index out of range");
    }
    if (medium.size() != nj) throw ConfigError("synthesis: medium must have one entry per analysis wavelength");
    for (const auto& c : chromophores) c.validate(nj);
    if (targets.empty()) throw ConfigError("synthesis: at least one target required");
    std::ostringstream outside;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const auto& tg = targets[t];
      if (tg.concentrations.size() != chromophores.size()) {
        throw ConfigError("synthesis: target " + std::to_string(t) + " needs one concentration per chromophore");
      }
      for (double c : tg.concentrations) {
        if (!(c >= 0.0)) throw ConfigError("synthesis: concentrations must be >= 0");
      }
      if (tg.footprint == 0 || tg.footprint % 2 == 0) throw ConfigError("synthesis: target footprint must be odd");
      if (!grid.contains(tg.x, tg.z)) outside << " #" << t << " (" << tg.x << ", " << tg.z << ")";
    }
    if (!outside.str().empty()) throw ConfigError("synthesis: targets outside the imaging field:" + outside.str());
    if (!(snr_db > -std::numeric_limits<double>::infinity()) || std::isnan(snr_db)) {
      throw ConfigError("synthesis: snr_db must be a number or +inf");
    }
    if (noise_mean.size() > 1 && noise_mean.size() != geometry.fiber_tips.size()) {
      throw ConfigError("synthesis: noise_mean must have 0, 1 or one-per-fiber entries");
    }
  }

  std::vector<FluenceParams> true_params() const {
    const auto moments = reflection_moments(geometry.n_rel());
    std::vector<FluenceParams> out;
    for (std::size_t j = 0; j < medium.size(); ++j) {
      out.push_back({medium.mu_eff_at(j), medium.mu_s_reduced[j], 1.0, moments});
    }
    return out;
  }
};

struct SyntheticData {
  MeasurementTensor tensor;
  std::vector<std::vector<std::size_t>> target_pixels;  // per target
  std::vector<std::vector<double>> target_absorption;   // per target, per analysis wavelength
  std::vector<double> sigma;                            // noise std per analysis wavelength
  std::vector<double> bias;                             // injected mean per fiber
};

/// Noise-free PA signal per analysis wavelength, fiber and pixel.
inline MeasurementTensor clean_signal(const SynthesisSpec& spec, std::vector<std::vector<std::size_t>>* footprints = nullptr,
                                      std::vector<std::vector<double>>* absorption = nullptr) {
  const auto params = spec.true_params();
  const std::size_t nj = params.size();
  const std::size_t nk = spec.geometry.fiber_tips.size();
  auto t = MeasurementTensor::zeros(spec.wavelengths.analysis_wavelengths(), std::nullopt, nk, spec.grid);
  const double tilt = spec.geometry.tilt_rad();

  // Overlapping footprints add their absorption.
  std::vector<double> mu_bar(nj * spec.grid.size(), 0.0);
  for (const auto& target : spec.targets) {
    const auto pix = target_pixels(spec.grid, target);
    const auto a = mixture_absorption(spec.chromophores, target.concentrations);
    for (std::size_t i : pix) {
      for (std::size_t j = 0; j < nj; ++j) mu_bar[j * spec.grid.size() + i] += a[j];
    }
    if (footprints) footprints->push_back(pix);
    if (absorption) absorption->push_back(a);
  }
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    bool any = false;
    for (std::size_t j = 0; j < nj; ++j) any = any || mu_bar[j * spec.grid.size() + i] != 0.0;
    if (!any) continue;
    const Vec3 r = spec.grid.coord(i);
    for (std::size_t j = 0; j < nj; ++j) {
      for (std::size_t k = 0; k < nk; ++k) {
        t.at(j, k, i) = mu_bar[j * spec.grid.size() + i] * model_fluence(spec.model, r, spec.geometry.fiber_tips[k], tilt, params[j]);
      }
    }
  }
  return t;
}

/// Synthetic tensor: control frame (noise only) plus one frame per analysis
/// wavelength. The noise std at wavelength j is set so that the SNR at the
/// target centers, averaged over targets, equals `snr_db`; the control frame
/// uses the mean of those stds.
inline SyntheticData synthesize(const SynthesisSpec& spec) {
  spec.validate();
  SyntheticData out;
  const auto clean = clean_signal(spec, &out.target_pixels, &out.target_absorption);
  const std::size_t nj = clean.frames();
  const std::size_t nk = clean.fibers;
  const std::size_t n = clean.pixels();

  const bool noisy = std::isfinite(spec.snr_db);
  out.sigma.assign(nj, 0.0);
  if (noisy) {
    const double ratio = std::pow(10.0, spec.snr_db / 20.0);
    for (std::size_t j = 0; j < nj; ++j) {
      double mean_signal = 0.0;
      for (const auto& target : spec.targets) {
        const auto [cx, cz] = spec.grid.nearest(target.x, target.z);
        const std::size_t i = spec.grid.index(cx, cz);
        double s = 0.0;
        for (std::size_t k = 0; k < nk; ++k) s += clean.at(j, k, i);
        mean_signal += s / static_cast<double>(nk);
      }
      mean_signal /= static_cast<double>(spec.targets.size());
      out.sigma[j] = std::abs(mean_signal) / ratio;
    }
  }
  const double control_sigma =
      nj == 0 ? 0.0 : std::accumulate(out.sigma.begin(), out.sigma.end(), 0.0) / static_cast<double>(nj);

  out.bias.assign(nk, 0.0);
  if (spec.noise_mean.size() == 1) out.bias.assign(nk, spec.noise_mean[0]);
  if (spec.noise_mean.size() == nk) out.bias = spec.noise_mean;

  out.tensor = MeasurementTensor::zeros(spec.wavelengths.wavelengths_nm, spec.wavelengths.control_index, nk, spec.grid);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t jd = 0;
  for (std::size_t j = 0; j < out.tensor.frames(); ++j) {
    const bool control = j == spec.wavelengths.control_index;
    const double sigma = control ? control_sigma : out.sigma[jd];
    for (std::size_t k = 0; k < nk; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = control ? 0.0 : clean.at(jd, k, i);
        const double noise = noisy ? sigma * normal(rng) : 0.0;
        out.tensor.at(j, k, i) = p + out.bias[k] + noise;
      }
    }
    if (!control) ++jd;
  }
  return out;
}

enum class SpectrumKind { Uncorrected, Corrected, Reference };

struct Spectrum {
  SpectrumKind kind = SpectrumKind::Reference;
  std::vector<double> values;
};

/// d_j = sum over the footprint and fibers of the debiased measurements.
inline Spectrum uncorrected_spectrum(const MeasurementTensor& debiased, const std::vector<std::size_t>& pixels) {
  if (pixels.empty()) throw DomainError("uncorrected_spectrum: empty target footprint");
  Spectrum s{SpectrumKind::Uncorrected, std::vector<double>(debiased.frames(), 0.0)};
  for (std::size_t j = 0; j < debiased.frames(); ++j) {
    for (std::size_t k = 0; k < debiased.fibers; ++k) {
      for (std::size_t i : pixels) s.values[j] += debiased.at(j, k, i);
    }
  }
  return s;
}

/// c_j = sum Phi_hat * ybar / sum Phi_hat^2 over footprint and fibers.
/// `fluence` is indexed [j][k][m] with m running over `pixels`.
inline Spectrum corrected_spectrum(const MeasurementTensor& debiased, const FluenceStack& fluence,
                                   const std::vector<std::size_t>& pixels) {
  if (pixels.empty()) throw DomainError("corrected_spectrum: empty target footprint");
  if (fluence.wavelengths != debiased.frames() || fluence.fibers != debiased.fibers || fluence.pixels != pixels.size()) {
    throw DomainError("corrected_spectrum: fluence stack does not match tensor and footprint");
  }
  Spectrum s{SpectrumKind::Corrected, std::vector<double>(debiased.frames(), 0.0)};
  for (std::size_t j = 0; j < debiased.frames(); ++j) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < debiased.fibers; ++k) {
      for (std::size_t m = 0; m < pixels.size(); ++m) {
        const double phi = fluence.at(j, k, m);
        num += phi * debiased.at(j, k, pixels[m]);
        den += phi * phi;
      }
    }
    if (den == 0.0) {
      throw NumericError("corrected_spectrum: estimated fluence is zero everywhere at wavelength index " +
                         std::to_string(j));
    }
    s.values[j] = num / den;
  }
  return s;
}

/// (mu - mu_hat) / mu * 100
inline double estimation_fractional_error(double mu_true, double mu_hat) {
  if (mu_true == 0.0) throw DomainError("estimation_fractional_error: true value is zero");
  return (mu_true - mu_hat) / mu_true * 100.0;
}

struct SpectrumSimilarity {
  double distance = 0.0;     // L2 distance between unit-norm spectra
  double correlation = 0.0;  // Pearson; NaN when either spectrum is constant
};

inline SpectrumSimilarity spectrum_similarity(const std::vector<double>& s1, const std::vector<double>& s2) {
  if (s1.size() != s2.size() || s1.empty()) throw DomainError("spectrum_similarity: spectra must have equal nonzero length");
  const auto norm = [](const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); };
  const double n1 = norm(s1);
  const double n2 = norm(s2);
  if (n1 == 0.0 || n2 == 0.0) throw DomainError("spectrum_similarity: zero-norm spectrum");

  SpectrumSimilarity out;
  double d2 = 0.0;
  for (std::size_t j = 0; j < s1.size(); ++j) {
    const double d = s1[j] / n1 - s2[j] / n2;
    d2 += d * d;
  }
  out.distance = std::sqrt(d2);

  const double m1 = std::accumulate(s1.begin(), s1.end(), 0.0) / static_cast<double>(s1.size());
  const double m2 = std::accumulate(s2.begin(), s2.end(), 0.0) / static_cast<double>(s2.size());
  double c12 = 0.0, c11 = 0.0, c22 = 0.0;
  for (std::size_t j = 0; j < s1.size(); ++j) {
    c12 += (s1[j] - m1) * (s2[j] - m2);
    c11 += (s1[j] - m1) * (s1[j] - m1);
    c22 += (s2[j] - m2) * (s2[j] - m2);
  }
  out.correlation = (c11 == 0.0 || c22 == 0.0) ? std::numeric_limits<double>::quiet_NaN() : c12 / std::sqrt(c11 * c22);
  return out;
}

inline std::vector<double> unit_normalized(const std::vector<double>& v) {
  const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  if (n == 0.0) throw DomainError("unit_normalized: zero-norm vector");
  std::vector<double> out(v);
  for (double& x : out) x /= n;
  return out;
}

}  // namespace fluencelab
