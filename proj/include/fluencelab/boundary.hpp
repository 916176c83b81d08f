#pragma once

// Fresnel reflectance at the index-mismatched surface of the medium, its
// angular moments, and the extrapolated-boundary distance used by the
// image-source fluence model.

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <sstream>

#include "fluencelab/errors.hpp"
#include "fluencelab/geometry_media.hpp"

namespace fluencelab {

/// Unpolarized Fresnel reflectance for light inside a medium of relative
/// index `n_rel` (inside / outside) hitting the surface at angle `theta_rad`
/// from the normal. Returns 1 beyond the critical angle and at grazing
/// incidence.
inline double fresnel_reflectance(double theta_rad, double n_rel) {
  if (!(theta_rad >= 0.0 && theta_rad <= kPi / 2.0)) {
    throw DomainError("fresnel_reflectance: angle must lie in [0, pi/2]");
  }
  if (!(n_rel > 0.0)) throw DomainError("fresnel_reflectance: n_rel must be positive");
  if (theta_rad == kPi / 2.0) return 1.0;
  if (n_rel == 1.0) return 0.0;

  const double sin_t = n_rel * std::sin(theta_rad);
  if (sin_t >= 1.0) return 1.0;  // total internal reflection
  const double cos_i = std::cos(theta_rad);
  const double cos_t = std::sqrt(1.0 - sin_t * sin_t);
  const double a = (n_rel * cos_t - cos_i) / (n_rel * cos_t + cos_i);
  const double b = (n_rel * cos_i - cos_t) / (n_rel * cos_i + cos_t);
  return 0.5 * (a * a + b * b);
}

inline double critical_angle(double n_rel) {
  return n_rel > 1.0 ? std::asin(1.0 / n_rel) : kPi / 2.0;
}

struct ReflectionMoments {
  double r_phi = 0.0;  // fluence moment: int 2 sin cos R
  double r_j = 0.0;    // current moment: int 3 sin cos^2 R

  // (1 + R_j) / (1 - R_phi); z_b = 2 D * factor.
  double boundary_factor() const {
    if (!(r_phi < 1.0)) throw NumericError("boundary: R_phi >= 1 makes the extrapolated boundary singular");
    return (1.0 + r_j) / (1.0 - r_phi);
  }
};

namespace detail {

// Tanh-sinh integration of f over [a, b]. It copes with the square-root
// kink of the reflectance at the critical angle, which sits on an endpoint.
template <class F>
double integrate_quad(F f, double a, double b, double rel_tol, const char* what) {
  if (b <= a) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  boost::math::quadrature::tanh_sinh<double> rule;
  const double value = rule.integrate(f, a, b, rel_tol, &error, &l1);
  if (!std::isfinite(value) || error > rel_tol * l1 + 1e-300) {
    std::ostringstream msg;
    msg << what << ": quadrature did not converge on [" << a << ", " << b << "], error estimate " << error
        << " vs L1 norm " << l1;
    throw NumericError(msg.str());
  }
  return value;
}

}  // namespace detail

/// Angular moments of the Fresnel reflectance. The integrand is only C0 at
/// the critical angle, so the interval is split there.
inline ReflectionMoments reflection_moments(double n_rel, double rel_tol = 1e-8) {
  if (!(n_rel > 0.0)) throw DomainError("reflection_moments: n_rel must be positive");
  if (n_rel == 1.0) return {};

  auto phi_integrand = [n_rel](double t) {
    return 2.0 * std::sin(t) * std::cos(t) * fresnel_reflectance(t, n_rel);
  };
  auto j_integrand = [n_rel](double t) {
    const double c = std::cos(t);
    return 3.0 * std::sin(t) * c * c * fresnel_reflectance(t, n_rel);
  };

  const double split = critical_angle(n_rel);
  ReflectionMoments m;
  m.r_phi = detail::integrate_quad(phi_integrand, 0.0, split, rel_tol, "R_phi") +
            detail::integrate_quad(phi_integrand, split, kPi / 2.0, rel_tol, "R_phi");
  m.r_j = detail::integrate_quad(j_integrand, 0.0, split, rel_tol, "R_j") +
          detail::integrate_quad(j_integrand, split, kPi / 2.0, rel_tol, "R_j");
  return m;
}

inline double extrapolated_distance(double diffusion_mm, const ReflectionMoments& moments) {
  if (!(diffusion_mm > 0.0)) throw DomainError("extrapolated_distance: D must be positive");
  return 2.0 * diffusion_mm * moments.boundary_factor();
}

/// z_b = 2 D (1 + R_j) / (1 - R_phi).
inline double extrapolated_distance(double diffusion_mm, double n_rel) {
  return extrapolated_distance(diffusion_mm, reflection_moments(n_rel));
}

struct BoundaryCondition {
  double n_rel = 1.0;
  double r_phi = 0.0;
  double r_j = 0.0;
  double z_b = 0.0;  // mm

  static BoundaryCondition make(double diffusion_mm, double n_rel) {
    const auto m = reflection_moments(n_rel);
    return {n_rel, m.r_phi, m.r_j, extrapolated_distance(diffusion_mm, m)};
  }
};

}  // namespace fluencelab
