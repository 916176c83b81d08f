#include <gtest/gtest.h>

#include <random>

#include "fluencelab/fluence_models.hpp"

using namespace fluencelab;

namespace {

const double kTilt = deg_to_rad(35.0);
const double kNrel = 1.33 / 1.49;

FluenceParams params(double mu_a, double mu_s) { return FluenceParams::from_medium(mu_a, mu_s, kNrel); }

}  // namespace

TEST(ImageSources, FrozenPositions) {
  const auto p = image_sources({0.0, 5.68, 0.0}, kTilt, 1.0, 0.667);
  EXPECT_NEAR(p.r_plus.x, 0.0, 1e-12);
  EXPECT_NEAR(p.r_plus.y, 5.106424, 1e-6);
  EXPECT_NEAR(p.r_plus.z, 0.819152, 1e-6);
  EXPECT_NEAR(p.r_minus.y, 5.106424, 1e-6);
  EXPECT_NEAR(p.r_minus.z, -2.153152, 1e-6);
}

TEST(ImageSources, MirrorAndLimits) {
  const auto p = image_sources({1.0, -5.68, 0.0}, kTilt, 0.7, 0.4);
  EXPECT_DOUBLE_EQ(p.r_minus.z, -p.r_plus.z - 2.0 * 0.4);
  EXPECT_GT(p.r_plus.y, -5.68);  // tilted toward y = 0

  const auto n = image_sources({2.0, 5.68, 0.0}, 0.0, 0.9, 0.4);
  EXPECT_DOUBLE_EQ(n.r_plus.x, 2.0);
  EXPECT_DOUBLE_EQ(n.r_plus.y, 5.68);
  EXPECT_DOUBLE_EQ(n.r_plus.z, 0.9);

  const auto c = image_sources({0.0, 5.68, 0.0}, kTilt, 1e-12, 0.5);
  EXPECT_NEAR(c.r_plus.z - c.r_minus.z, 1.0, 1e-9);
  EXPECT_NEAR(c.r_plus.y, 5.68, 1e-9);
}

TEST(Model1, IndependentEvaluation) {
  // Closed form evaluated separately with scipy quad moments.
  const auto p = params(0.003, 1.0);
  EXPECT_NEAR(p.z_b(), 0.69518559862733, 1e-9);
  const double v = model1_fluence({0.0, 0.0, 10.0}, {0.0, 5.68, 0.0}, kTilt, p);
  EXPECT_NEAR(v, 3.248414451638704e-03, 1e-12 * 3.248414451638704e-03);
}

TEST(Model1, VanishesOnExtrapolatedPlane) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (double mus : {0.5, 1.0, 2.0}) {
    const auto p = params(0.003, mus);
    const Vec3 tip{0.0, 5.68, 0.0};
    const double peak = model1_fluence({0.0, 0.0, axial_fluence_peak(5.68, kTilt, p)}, tip, kTilt, p);
    for (int i = 0; i < 10; ++i) {
      const Vec3 r{u(rng), u(rng), -p.z_b()};
      EXPECT_LT(std::abs(model1_fluence(r, tip, kTilt, p)), 1e-12 * peak);
    }
  }
}

TEST(Model1, NonnegativeInHalfSpace) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-15.0, 15.0), uz(0.0, 30.0);
  const auto tip = ProbeGeometry::standard().fiber_tips;
  for (double mus : {0.2, 1.0, 3.0}) {
    const auto p = params(0.004, mus);
    for (int i = 0; i < 2000; ++i) {
      const Vec3 r{u(rng), u(rng), uz(rng)};
      EXPECT_GE(model1_fluence(r, tip[i % 20], kTilt, p), 0.0);
    }
  }
}

TEST(Model1, DecaysFarAway) {
  const auto p = params(0.003, 1.0);
  const Vec3 tip{0.0, 5.68, 0.0};
  const double zmax = axial_fluence_peak(5.68, kTilt, p);
  double prev = model1_fluence({0.0, 0.0, zmax + 0.5}, tip, kTilt, p);
  for (double z = zmax + 1.0; z < 60.0; z += 0.5) {
    const double v = model1_fluence({0.0, 0.0, z}, tip, kTilt, p);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Model1, SingularityGuard) {
  const auto p = params(0.003, 1.0);
  const auto src = image_sources({0.0, 5.68, 0.0}, kTilt, p);
  EXPECT_THROW(model1_fluence(src.r_plus, src, p), NumericError);
}

TEST(Model2, Basics) {
  const Vec3 tip{0.0, 5.68, 0.0};
  EXPECT_EQ(model2_fluence({1.0, 2.0, 0.0}, tip, 0.1), 0.0);
  const Vec3 r{0.0, 0.0, 10.0};
  const double rho = distance(r, tip);
  EXPECT_NEAR(model2_fluence(r, tip, 0.0, 2.0), 2.0 * 10.0 / (rho * rho * rho), 1e-15);
  EXPECT_NEAR(model2_fluence(r, tip, mu_eff(0.003, 1.0)), 4.617169141150909e-03, 1e-15);
  EXPECT_THROW(model2_fluence(tip, tip, 0.1), NumericError);
}

TEST(Models, AmplitudeScaling) {
  auto p = params(0.003, 1.0);
  const Vec3 tip{1.0, -5.68, 0.0};
  const Vec3 r{0.5, 0.0, 7.0};
  const double base1 = model1_fluence(r, tip, kTilt, p);
  const double base2 = model2_fluence(r, tip, p.mu_eff, 1.0);
  p.amplitude = 3.7;
  EXPECT_NEAR(model1_fluence(r, tip, kTilt, p), 3.7 * base1, 1e-15);
  EXPECT_NEAR(model2_fluence(r, tip, p.mu_eff, 3.7), 3.7 * base2, 1e-15);
}

TEST(ModelError, UnderTenPercentDeep) {
  const Vec3 tip{0.0, 5.68, 0.0};
  for (double mus_cm : {5.0, 10.0, 20.0, 30.0}) {
    const double mus = per_cm_to_per_mm(mus_cm);
    ModelDiscrepancy d(tip, kTilt, params(0.003, mus));
    EXPECT_LT(std::abs(d.error_pct(20.0 / mus)), 10.0) << mus_cm;
  }
}

TEST(ModelError, AbsorptionInsensitive) {
  const Vec3 tip{0.0, 5.68, 0.0};
  std::vector<ModelDiscrepancy> curves;
  for (double mua_cm : {0.01, 0.02, 0.03, 0.04, 0.05}) curves.emplace_back(tip, kTilt, params(per_cm_to_per_mm(mua_cm), 1.0));
  for (double zl = 10.0; zl <= 40.0; zl += 1.0) {
    double lo = 1e300, hi = -1e300;
    for (const auto& c : curves) {
      lo = std::min(lo, c.error_pct(zl));
      hi = std::max(hi, c.error_pct(zl));
    }
    EXPECT_LT(hi - lo, 2.0) << zl;
  }
}

TEST(ModelError, DeepErrorSettles) {
  // Past the matching window the error flattens to a few percent.
  const Vec3 tip{0.0, 5.68, 0.0};
  for (double mus : {0.5, 1.0, 2.0, 3.0}) {
    ModelDiscrepancy d(tip, kTilt, params(0.003, mus));
    const double near_slope = std::abs(d.error_pct(15.0 / mus) - d.error_pct(10.0 / mus));
    const double far_slope = std::abs(d.error_pct(80.0 / mus) - d.error_pct(60.0 / mus));
    EXPECT_LT(far_slope, 0.5) << mus;
    EXPECT_LT(far_slope, near_slope) << mus;
    EXPECT_LT(std::abs(d.error_pct(80.0 / mus)), 5.0) << mus;
  }
}

TEST(ZMax, AroundThreeMillimetres) {
  for (double mus_cm : {5.0, 10.0, 20.0}) {
    const double z = axial_fluence_peak(5.7, kTilt, params(0.003, per_cm_to_per_mm(mus_cm)));
    EXPECT_NEAR(z, 3.0, 1.0) << mus_cm;
  }
}

TEST(ZMax, IncreasesWithOffset) {
  for (double mus_cm : {5.0, 10.0, 20.0}) {
    const auto p = params(0.003, per_cm_to_per_mm(mus_cm));
    double prev = 0.0;
    for (double y = 1.0; y <= 15.0; y += 1.0) {
      const double z = axial_fluence_peak(y, kTilt, p);
      EXPECT_GE(z, prev - 0.01);
      prev = z;
    }
  }
}

TEST(ZMax, SmallForCentredSource) {
  const auto p = params(0.003, 5.0);
  EXPECT_LT(axial_fluence_peak(0.0, kTilt, p, 0.01, 10.0, 0.001), 1.0);
}

TEST(FluenceParams, Validation) {
  FluenceParams p;
  EXPECT_THROW(p.validate(ModelKind::II), DomainError);
  p.mu_eff = 0.1;
  EXPECT_NO_THROW(p.validate(ModelKind::II));
  EXPECT_THROW(p.validate(ModelKind::I), DomainError);
  p.mu_s_reduced = 0.01;
  EXPECT_TRUE(p.outside_diffusion_regime());
}
