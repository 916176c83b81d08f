#include <gtest/gtest.h>

#include <random>

#include "fluencelab/geometry_media.hpp"

using namespace fluencelab;

TEST(MuEff, TableValues) {
  EXPECT_NEAR(mu_eff(0.003, 1.353), 0.11034944494649714, 1e-14);
  EXPECT_NEAR(mu_eff(0.003, 0.725), 0.08077747210701756, 1e-14);
  EXPECT_EQ(mu_eff(0.0, 1.7), 0.0);
}

TEST(MuEff, RejectsNegative) {
  EXPECT_THROW(mu_eff(-0.1, 1.0), DomainError);
  EXPECT_THROW(mu_eff(0.1, -1.0), DomainError);
}

TEST(MuEff, SquareRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-4, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), s = u(rng);
    const double m = mu_eff(a, s);
    EXPECT_NEAR(m * m, 3.0 * a * s, 1e-14 * 3.0 * a * s);
  }
}

TEST(BrainScattering, Values) {
  EXPECT_DOUBLE_EQ(brain_scattering(500.0), 4.08);
  EXPECT_NEAR(brain_scattering(715.0), 1.3515345222460826, 1e-13);
  EXPECT_NEAR(brain_scattering(875.0), 0.7242952393832547, 1e-13);
  EXPECT_THROW(brain_scattering(0.0), DomainError);
  EXPECT_THROW(brain_scattering(-5.0), DomainError);
}

TEST(BrainScattering, StrictlyDecreasing) {
  double prev = brain_scattering(500.0);
  for (double l = 501.0; l <= 900.0; l += 1.0) {
    const double v = brain_scattering(l);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(TransportAndDiffusion, Values) {
  EXPECT_DOUBLE_EQ(transport_mfp(1.0), 1.0);
  EXPECT_DOUBLE_EQ(transport_mfp(0.5), 2.0);
  EXPECT_NEAR(transport_mfp(1.353), 0.7391, 5e-5);
  EXPECT_NEAR(diffusion_coefficient(1.0), 0.3333, 5e-5);
  EXPECT_NEAR(diffusion_coefficient(3.0), 0.1111, 5e-5);
  EXPECT_NEAR(diffusion_coefficient(1.353), 0.2464, 5e-5);
  EXPECT_THROW(transport_mfp(0.0), DomainError);
  EXPECT_THROW(diffusion_coefficient(-1.0), DomainError);
}

TEST(TransportAndDiffusion, RatioIsThree) {
  for (double s = 0.01; s < 50.0; s *= 1.37) EXPECT_NEAR(transport_mfp(s), 3.0 * diffusion_coefficient(s), 1e-13 * transport_mfp(s));
}

TEST(Units, RoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_NEAR(per_mm_to_per_cm(per_cm_to_per_mm(v)), v, 4 * std::numeric_limits<double>::epsilon() * v);
  }
}

TEST(ProbeGeometry, StandardLayout) {
  const auto g = ProbeGeometry::standard();
  ASSERT_EQ(g.fiber_tips.size(), 20u);
  int plus = 0, minus = 0;
  for (const auto& t : g.fiber_tips) {
    EXPECT_EQ(t.z, 0.0);
    EXPECT_GE(t.x, -6.35 - 1e-12);
    EXPECT_LE(t.x, 6.35 + 1e-12);
    if (t.y == 5.68) ++plus;
    if (t.y == -5.68) ++minus;
  }
  EXPECT_EQ(plus, 10);
  EXPECT_EQ(minus, 10);
  EXPECT_NEAR(g.n_rel(), 1.33 / 1.49, 1e-15);
  EXPECT_NO_THROW(g.validate());
}

TEST(ProbeGeometry, ValidationFailures) {
  auto g = ProbeGeometry::standard();
  g.fiber_tips.pop_back();
  EXPECT_THROW(g.validate(), ConfigError);
  g = ProbeGeometry::standard();
  g.fiber_tips[0].z = 0.5;
  EXPECT_THROW(g.validate(), ConfigError);
  g = ProbeGeometry::standard();
  g.tilt_deg = 95.0;
  EXPECT_THROW(g.validate(), ConfigError);
}

TEST(TiltDirection, TowardImagePlane) {
  EXPECT_EQ(tilt_direction(5.68), -1.0);
  EXPECT_EQ(tilt_direction(-5.68), 1.0);
}

TEST(OpticalMedium, Brain) {
  const auto w = WavelengthGrid::standard();
  ASSERT_EQ(w.wavelengths_nm.size(), 10u);
  EXPECT_EQ(w.wavelengths_nm[0], 700.0);
  const auto a = w.analysis_wavelengths();
  ASSERT_EQ(a.size(), 9u);
  EXPECT_EQ(a.front(), 715.0);
  EXPECT_EQ(a.back(), 875.0);
  const auto m = OpticalMedium::brain(a, 0.003);
  EXPECT_NO_THROW(m.validate());
  EXPECT_NEAR(m.mu_s(0), m.mu_s_reduced[0] / 0.1, 1e-12);
  EXPECT_NEAR(m.mu_eff_at(8), 0.08073820133276002, 1e-14);
}
