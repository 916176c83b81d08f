#include <gtest/gtest.h>

#include "fluencelab/boundary.hpp"

using namespace fluencelab;

namespace {

// Midpoint Riemann sum with 10^6 panels, independent of the library quadrature.
ReflectionMoments riemann_moments(double n) {
  constexpr int kPanels = 1'000'000;
  const double h = (kPi / 2.0) / kPanels;
  ReflectionMoments m;
  for (int i = 0; i < kPanels; ++i) {
    const double t = (i + 0.5) * h;
    const double s = std::sin(t), c = std::cos(t);
    double r;
    if (n == 1.0) {
      r = 0.0;
    } else if (n * s >= 1.0) {
      r = 1.0;
    } else {
      const double tt = std::asin(n * s);
      const double a = std::sin(t - tt) / std::sin(t + tt);
      const double b = std::tan(t - tt) / std::tan(t + tt);
      r = 0.5 * (a * a + b * b);
    }
    m.r_phi += 2.0 * s * c * r * h;
    m.r_j += 3.0 * s * c * c * r * h;
  }
  return m;
}

}  // namespace

TEST(Fresnel, NormalIncidence) {
  EXPECT_NEAR(fresnel_reflectance(0.0, 1.33), 0.0200593, 1e-6);
  for (double n : {0.5, 0.893, 1.2, 1.33, 2.0}) {
    EXPECT_NEAR(fresnel_reflectance(0.0, n), fresnel_reflectance(0.0, 1.0 / n), 1e-15);
    EXPECT_NEAR(fresnel_reflectance(0.0, n), std::pow((n - 1.0) / (n + 1.0), 2), 1e-15);
  }
}

TEST(Fresnel, MatchedIndexIsTransparent) {
  for (double t = 0.0; t < kPi / 2.0; t += 0.01) EXPECT_EQ(fresnel_reflectance(t, 1.0), 0.0);
}

TEST(Fresnel, TotalInternalReflection) {
  const double tc = critical_angle(1.4);
  EXPECT_NEAR(std::sin(tc), 1.0 / 1.4, 1e-15);
  for (double t = tc; t <= kPi / 2.0; t += 0.01) EXPECT_EQ(fresnel_reflectance(t, 1.4), 1.0);
}

TEST(Fresnel, DomainErrors) {
  EXPECT_THROW(fresnel_reflectance(-0.1, 1.33), DomainError);
  EXPECT_THROW(fresnel_reflectance(kPi / 2.0 + 1e-9, 1.33), DomainError);
  EXPECT_THROW(fresnel_reflectance(0.1, 0.0), DomainError);
}

TEST(Fresnel, GrazingLimitAndMonotone) {
  for (double n : {0.75, 0.893, 1.12, 1.33, 1.4}) {
    EXPECT_GT(fresnel_reflectance(kPi / 2.0 - 1e-7, n), 0.999);
    EXPECT_EQ(fresnel_reflectance(kPi / 2.0, n), 1.0);
    // Nondecreasing over the last ten degrees before grazing.
    double prev = fresnel_reflectance(kPi / 2.0 - 0.1745, n);
    for (double t = kPi / 2.0 - 0.1745; t < kPi / 2.0; t += 1e-3) {
      const double r = fresnel_reflectance(t, n);
      EXPECT_GE(r, prev - 1e-14);
      prev = r;
    }
  }
}

TEST(Fresnel, ContinuousBelowCritical) {
  for (double n : {0.893, 1.4}) {
    const double tc = critical_angle(n);
    for (double t = 0.0; t + 1e-6 < tc - 1e-3; t += 1e-3) {
      EXPECT_LT(std::abs(fresnel_reflectance(t + 1e-6, n) - fresnel_reflectance(t, n)), 1e-3);
    }
  }
}

TEST(Moments, AgreeWithRiemannOracle) {
  for (double n : {0.75, 1.0, 1.12, 1.4}) {
    const auto lib = reflection_moments(n);
    const auto ref = riemann_moments(n);
    EXPECT_NEAR(lib.r_phi, ref.r_phi, 1e-6) << "n = " << n;
    EXPECT_NEAR(lib.r_j, ref.r_j, 1e-6) << "n = " << n;
  }
}

TEST(Moments, FrozenValues) {
  // Adaptive quadrature (scipy quad, split at the critical angle), frozen.
  struct Row {
    double n, r_phi, r_j;
  };
  for (const Row& r : {Row{0.75, 0.066458480382, 0.039867299319}, Row{1.12, 0.226135203486, 0.110104035168},
                       Row{1.33, 0.471949148793, 0.328238523607}, Row{1.4, 0.528985482437, 0.388782824275},
                       Row{1.33 / 1.49, 0.029324407060, 0.012199539727}}) {
    const auto m = reflection_moments(r.n);
    EXPECT_NEAR(m.r_phi, r.r_phi, 1e-9);
    EXPECT_NEAR(m.r_j, r.r_j, 1e-9);
  }
}

TEST(Moments, MatchedAndTransducer) {
  const auto m1 = reflection_moments(1.0);
  EXPECT_EQ(m1.r_phi, 0.0);
  EXPECT_EQ(m1.r_j, 0.0);
  const auto m = reflection_moments(1.33 / 1.49);
  EXPECT_GT(m.r_phi, 0.0);
  EXPECT_LT(m.r_phi, 0.2);
  EXPECT_LT(m.r_j, 0.2);
  const auto m14 = reflection_moments(1.4);
  EXPECT_GT(m14.r_phi, 0.0);
  EXPECT_LT(m14.r_phi, 1.0);
  EXPECT_GT(m14.r_j, 0.0);
  EXPECT_LT(m14.r_j, 1.0);
}

TEST(ExtrapolatedDistance, Values) {
  EXPECT_NEAR(extrapolated_distance(1.0 / 3.0, 1.0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(extrapolated_distance(0.3333, 1.0), 0.6666, 1e-12);
  EXPECT_GT(extrapolated_distance(0.3333, 1.4), 0.6667);
  EXPECT_NEAR(extrapolated_distance(1.0 / 3.0, 1.4), 1.965661740055, 1e-8);
  EXPECT_LT(extrapolated_distance(1e-9, 1.4), 1e-8);
  EXPECT_THROW(extrapolated_distance(0.0, 1.4), DomainError);
}

TEST(ExtrapolatedDistance, SingularBoundary) {
  ReflectionMoments m{1.0, 0.5};
  EXPECT_THROW(m.boundary_factor(), NumericError);
  EXPECT_THROW(extrapolated_distance(0.3, m), NumericError);
}

TEST(BoundaryCondition, Bundle) {
  const auto bc = BoundaryCondition::make(1.0 / 3.0, 1.33 / 1.49);
  EXPECT_NEAR(bc.z_b, 0.69518559862733, 1e-9);
  EXPECT_NEAR(bc.r_phi, 0.029324407060, 1e-9);
}
