#pragma once

// Analytic fluence of an obliquely incident pencil beam on a semi-infinite
// homogeneous medium.
//
//   Model I  - two isotropic image sources about the extrapolated boundary,
//              parameters (mu_eff, mu_s').
//   Model II - far-field limit of Model I as the sources merge, parameter
//              mu_eff only.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fluencelab/boundary.hpp"
#include "fluencelab/errors.hpp"
#include "fluencelab/geometry_media.hpp"

namespace fluencelab {

enum class ModelKind { I = 1, II = 2 };

// Evaluations closer than this to a source are rejected.
inline constexpr double kSingularRadius = 1e-6;

struct FluenceParams {
  double mu_eff = 0.0;        // mm^-1
  double mu_s_reduced = 0.0;  // mm^-1, Model I only
  double amplitude = 1.0;
  ReflectionMoments moments{};

  double diffusion() const { return diffusion_coefficient(mu_s_reduced); }
  double transport_length() const { return transport_mfp(mu_s_reduced); }
  double z_b() const { return extrapolated_distance(diffusion(), moments); }

  // mu_a > mu_s' is outside the diffusion regime but still evaluable.
  bool outside_diffusion_regime() const { return mu_eff * mu_eff > 3.0 * mu_s_reduced * mu_s_reduced; }

  void validate(ModelKind model) const {
    if (!(mu_eff > 0.0)) throw DomainError("fluence params: mu_eff must be positive");
    if (!(amplitude > 0.0)) throw DomainError("fluence params: amplitude must be positive");
    if (model == ModelKind::I && !(mu_s_reduced > 0.0)) throw DomainError("fluence params: mu_s' must be positive");
  }

  static FluenceParams from_medium(double mu_a, double mu_s_reduced, double n_rel, double amplitude = 1.0) {
    return {fluencelab::mu_eff(mu_a, mu_s_reduced), mu_s_reduced, amplitude, reflection_moments(n_rel)};
  }
};

struct ImageSourcePair {
  Vec3 r_plus;   // positive real source
  Vec3 r_minus;  // negative mirror source
};

/// Image sources for a fiber tip: the real source sits one transport length
/// along the tilted beam, the negative source is its mirror about z = -z_b.
inline ImageSourcePair image_sources(Vec3 tip, double tilt_rad, double l_t, double z_b) {
  const double lateral = tilt_direction(tip.y) * l_t * std::sin(tilt_rad);
  const double depth = l_t * std::cos(tilt_rad);
  return {{tip.x, tip.y + lateral, tip.z + depth}, {tip.x, tip.y + lateral, -tip.z - depth - 2.0 * z_b}};
}

inline ImageSourcePair image_sources(Vec3 tip, double tilt_rad, const FluenceParams& p) {
  return image_sources(tip, tilt_rad, p.transport_length(), p.z_b());
}

inline double model1_fluence(Vec3 r, const ImageSourcePair& src, const FluenceParams& p) {
  const double rho_plus = distance(r, src.r_plus);
  const double rho_minus = distance(r, src.r_minus);
  if (rho_plus < kSingularRadius || rho_minus < kSingularRadius) {
    throw NumericError("model1_fluence: evaluation point coincides with an image source");
  }
  const double four_pi_d = 4.0 * kPi * p.diffusion();
  return p.amplitude * (std::exp(-p.mu_eff * rho_plus) / (four_pi_d * rho_plus) -
                        std::exp(-p.mu_eff * rho_minus) / (four_pi_d * rho_minus));
}

inline double model1_fluence(Vec3 r, Vec3 tip, double tilt_rad, const FluenceParams& p) {
  return model1_fluence(r, image_sources(tip, tilt_rad, p), p);
}

/// amplitude * z (1 + mu_eff rho) exp(-mu_eff rho) / rho^3, with rho measured
/// from the fiber tip and z the depth below the tip plane.
inline double model2_fluence(Vec3 r, Vec3 tip, double mu_eff_value, double amplitude = 1.0) {
  const double rho = distance(r, tip);
  if (rho < kSingularRadius) throw NumericError("model2_fluence: evaluation point coincides with the fiber tip");
  const double z_rel = r.z - tip.z;
  return amplitude * z_rel * (1.0 + mu_eff_value * rho) * std::exp(-mu_eff_value * rho) / (rho * rho * rho);
}

inline double model_fluence(ModelKind model, Vec3 r, Vec3 tip, double tilt_rad, const FluenceParams& p) {
  return model == ModelKind::I ? model1_fluence(r, tip, tilt_rad, p) : model2_fluence(r, tip, p.mu_eff, p.amplitude);
}

/// Percentage discrepancy of Model II against Model I along the axial line
/// (0, 0, z). Model II's free amplitude is fixed by least squares against
/// Model I over the deep tail z / l_t in [fit_lo, fit_hi].
class ModelDiscrepancy {
 public:
  ModelDiscrepancy(Vec3 tip, double tilt_rad, FluenceParams params, double fit_lo = 15.0, double fit_hi = 40.0)
      : tip_(tip), tilt_rad_(tilt_rad), params_(params) {
    params_.validate(ModelKind::I);
    const double l_t = params_.transport_length();
    constexpr int kSamples = 400;
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < kSamples; ++i) {
      const double z = l_t * (fit_lo + (fit_hi - fit_lo) * i / (kSamples - 1.0));
      const double m1 = model1(z);
      const double m2 = model2_fluence({0.0, 0.0, z}, tip_, params_.mu_eff);
      num += m1 * m2;
      den += m2 * m2;
    }
    if (!(den > 0.0)) throw NumericError("model discrepancy: Model II vanishes over the matching window");
    alpha2_ = num / den;
  }

  double alpha2() const { return alpha2_; }
  double model1(double z) const { return model1_fluence({0.0, 0.0, z}, tip_, tilt_rad_, params_); }
  double model2(double z) const { return model2_fluence({0.0, 0.0, z}, tip_, params_.mu_eff, alpha2_); }

  // (Phi_I - Phi_II) / Phi_I * 100
  double error_pct(double z) const {
    const double m1 = model1(z);
    if (m1 == 0.0) throw NumericError("fractional_model_error: Model I vanishes at the probe point");
    return (m1 - model2(z)) / m1 * 100.0;
  }

 private:
  Vec3 tip_;
  double tilt_rad_;
  FluenceParams params_;
  double alpha2_ = 0.0;
};

inline double fractional_model_error(double z_mm, Vec3 tip, double tilt_rad, const FluenceParams& params) {
  return ModelDiscrepancy(tip, tilt_rad, params).error_pct(z_mm);
}

/// Depth of the Model I maximum on the axial line (0, 0, z) for a fiber at
/// (0, fiber_y, 0). A dense pre-scan locates the global maximum; golden-section
/// search then refines inside the bracketing cells.
inline double axial_fluence_peak(double fiber_y, double tilt_rad, const FluenceParams& params, double z_lo = 0.1,
                                 double z_hi = 40.0, double tol = 0.01) {
  const Vec3 tip{0.0, fiber_y, 0.0};
  auto f = [&](double z) { return model1_fluence({0.0, 0.0, z}, tip, tilt_rad, params); };

  constexpr int kScan = 800;
  const double step = (z_hi - z_lo) / kScan;
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double v = f(z_lo + step * i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = z_lo + step * std::max(best - 1, 0);
  double b = z_lo + step * std::min(best + 1, kScan);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol * 0.5) {
    if (fc > fd) {
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

}  // namespace fluencelab
