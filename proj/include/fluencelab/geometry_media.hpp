#pragma once

// Probe geometry, optical media and the scalar optical relations shared by
// every other module. Internal units: lengths in mm, coefficients in mm^-1.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "fluencelab/errors.hpp"

namespace fluencelab {

inline constexpr double kPi = std::numbers::pi;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(Vec3 a, Vec3 b) = default;

  constexpr double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }

// Literature tables quote coefficients in cm^-1.
constexpr double per_cm_to_per_mm(double v) { return v / 10.0; }
constexpr double per_mm_to_per_cm(double v) { return v * 10.0; }

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

/// Effective attenuation coefficient sqrt(3 mu_a mu_s').
inline double mu_eff(double mu_a, double mu_s_reduced) {
  if (!(mu_a >= 0.0) || !(mu_s_reduced > 0.0)) {
    throw DomainError("mu_eff: requires mu_a >= 0 and mu_s' > 0");
  }
  return std::sqrt(3.0 * mu_a * mu_s_reduced);
}

/// Reduced scattering of brain tissue, 40.8 cm^-1 * (lambda/500nm)^-3.089,
/// returned in mm^-1.
inline double brain_scattering(double lambda_nm) {
  if (!(lambda_nm > 0.0)) throw DomainError("brain_scattering: wavelength must be positive");
  return per_cm_to_per_mm(40.8 * std::pow(lambda_nm / 500.0, -3.089));
}

inline double transport_mfp(double mu_s_reduced) {
  if (!(mu_s_reduced > 0.0)) throw DomainError("transport_mfp: mu_s' must be positive");
  return 1.0 / mu_s_reduced;
}

inline double diffusion_coefficient(double mu_s_reduced) {
  if (!(mu_s_reduced > 0.0)) throw DomainError("diffusion_coefficient: mu_s' must be positive");
  return 1.0 / (3.0 * mu_s_reduced);
}

// Absorption implied by a (mu_eff, mu_s') pair.
inline double implied_absorption(double mu_eff_value, double mu_s_reduced) {
  return mu_eff_value * mu_eff_value / (3.0 * mu_s_reduced);
}

/// Fiber tips around the transducer and the refractive indices of the media.
///
/// The beam from each tip is tilted by `tilt_deg` from +z toward the image
/// plane y = 0.
struct ProbeGeometry {
  static constexpr std::size_t kFiberCount = 20;
  static constexpr std::size_t kFibersPerSide = 10;

  std::vector<Vec3> fiber_tips;
  double tilt_deg = 35.0;
  double n_medium = 1.33;
  double n_coupling = 1.49;

  double tilt_rad() const { return deg_to_rad(tilt_deg); }
  double n_rel() const { return n_medium / n_coupling; }

  // Ten tips per side, uniformly spaced in x over [-half_aperture, half_aperture].
  static ProbeGeometry standard(double y_offset_mm = 5.68, double half_aperture_mm = 6.35,
                                double tilt_deg = 35.0) {
    ProbeGeometry g;
    g.tilt_deg = tilt_deg;
    g.fiber_tips.reserve(kFiberCount);
    for (double side : {1.0, -1.0}) {
      for (std::size_t i = 0; i < kFibersPerSide; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(kFibersPerSide - 1);
        g.fiber_tips.push_back({-half_aperture_mm + 2.0 * half_aperture_mm * t, side * y_offset_mm, 0.0});
      }
    }
    return g;
  }

  void validate() const {
    if (fiber_tips.size() != kFiberCount) {
      throw ConfigError("geometry: expected 20 fiber tips, got " + std::to_string(fiber_tips.size()));
    }
    std::size_t plus = 0;
    std::size_t minus = 0;
    for (const auto& tip : fiber_tips) {
      if (tip.z != 0.0) throw ConfigError("geometry: fiber tips must lie on z = 0");
      if (tip.y > 0.0) ++plus;
      if (tip.y < 0.0) ++minus;
    }
    if (plus != kFibersPerSide || minus != kFibersPerSide) {
      throw ConfigError("geometry: need 10 fibers with y > 0 and 10 with y < 0");
    }
    if (!(tilt_deg >= 0.0 && tilt_deg < 90.0)) throw ConfigError("geometry: tilt must be in [0, 90) degrees");
    if (!(n_medium > 0.0) || !(n_coupling > 0.0)) throw ConfigError("geometry: refractive indices must be positive");
  }
};

// Sign convention for the lateral image-source offset: beams tilt toward y = 0.
inline double tilt_direction(double fiber_y) { return fiber_y < 0.0 ? 1.0 : -1.0; }

/// Wavelength-resolved homogeneous medium; one entry per analysis wavelength.
struct OpticalMedium {
  std::vector<double> mu_a;          // mm^-1
  std::vector<double> mu_s_reduced;  // mm^-1
  double g = 0.9;
  double n = 1.33;

  std::size_t size() const { return mu_a.size(); }
  double mu_s(std::size_t j) const { return mu_s_reduced.at(j) / (1.0 - g); }
  double mu_eff_at(std::size_t j) const { return mu_eff(mu_a.at(j), mu_s_reduced.at(j)); }

  void validate() const {
    if (mu_a.size() != mu_s_reduced.size()) throw ConfigError("medium: mu_a and mu_s' lengths differ");
    if (!(g > -1.0 && g < 1.0)) throw ConfigError("medium: anisotropy g must be in (-1, 1)");
    if (!(n > 0.0)) throw ConfigError("medium: refractive index must be positive");
    for (std::size_t j = 0; j < size(); ++j) {
      if (!(mu_a[j] >= 0.0)) throw ConfigError("medium: mu_a must be >= 0");
      if (!(mu_s_reduced[j] > 0.0)) throw ConfigError("medium: mu_s' must be > 0");
      if (!std::isfinite(mu_s(j))) throw ConfigError("medium: mu_s is not finite");
    }
  }

  // Brain scattering law with constant absorption.
  static OpticalMedium brain(const std::vector<double>& wavelengths_nm, double mu_a_per_mm, double g = 0.9) {
    OpticalMedium m;
    m.g = g;
    for (double lambda : wavelengths_nm) {
      m.mu_a.push_back(mu_a_per_mm);
      m.mu_s_reduced.push_back(brain_scattering(lambda));
    }
    return m;
  }
};

struct WavelengthGrid {
  std::vector<double> wavelengths_nm;
  std::size_t control_index = 0;

  // 700 nm control frame followed by 715..875 nm in 20 nm steps.
  static WavelengthGrid standard() {
    WavelengthGrid w;
    w.wavelengths_nm.push_back(700.0);
    for (int i = 0; i < 9; ++i) w.wavelengths_nm.push_back(715.0 + 20.0 * i);
    w.control_index = 0;
    return w;
  }

  std::vector<double> analysis_wavelengths() const {
    std::vector<double> out;
    for (std::size_t j = 0; j < wavelengths_nm.size(); ++j) {
      if (j != control_index) out.push_back(wavelengths_nm[j]);
    }
    return out;
  }
};

}  // namespace fluencelab
