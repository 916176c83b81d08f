#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fluencelab/montecarlo.hpp"

using namespace fluencelab;

namespace {

McConfig small_config() {
  McConfig c;
  c.photons = 20000;
  c.mu_a = 0.01;
  c.mu_s_reduced = 1.0;
  c.grid = VoxelGrid::centered(20.0, 20.0, 15.0, 0.5);
  c.batch_size = 4096;
  c.threads = 1;
  c.seed = 42;
  return c;
}

}  // namespace

TEST(VoxelGrid, CenteredLayout) {
  const auto g = VoxelGrid::centered(50.0, 50.0, 40.0, 0.2);
  EXPECT_EQ(g.dims[0], 250u);
  EXPECT_EQ(g.dims[1], 250u);
  EXPECT_EQ(g.dims[2], 200u);
  EXPECT_DOUBLE_EQ(g.origin.x, -25.0);
  EXPECT_DOUBLE_EQ(g.origin.z, 0.0);
  const auto c = g.center(0, 0, 0);
  EXPECT_NEAR(c.x, -24.9, 1e-12);
  EXPECT_NEAR(c.z, 0.1, 1e-12);
  EXPECT_EQ(g.index(1, 2, 3), 1u + 250u * (2u + 250u * 3u));
  EXPECT_NEAR(g.voxel_volume(), 0.008, 1e-15);
  EXPECT_THROW(VoxelGrid::centered(1.0, 1.0, 1.0, 0.0), ConfigError);
}

TEST(Sampling, HenyeyGreensteinMeanCosine) {
  std::mt19937_64 rng(7);
  constexpr int kN = 1'000'000;
  for (double g : {0.0, 0.5, 0.9, -0.3}) {
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < kN; ++i) {
      const double c = sample_hg_cosine(g, detail::uniform01(rng));
      ASSERT_GE(c, -1.0);
      ASSERT_LE(c, 1.0);
      s += c;
      s2 += c * c;
    }
    const double mean = s / kN;
    const double se = std::sqrt((s2 / kN - mean * mean) / kN);
    EXPECT_LT(std::abs(mean - g), 3.0 * se) << "g = " << g;
  }
}

TEST(Sampling, FreePathMean) {
  std::mt19937_64 rng(8);
  constexpr int kN = 1'000'000;
  for (double mu_t : {0.2, 1.0, 10.0}) {
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < kN; ++i) {
      const double l = sample_free_path(mu_t, detail::uniform01(rng));
      ASSERT_GE(l, 0.0);
      s += l;
      s2 += l * l;
    }
    const double mean = s / kN;
    const double se = std::sqrt((s2 / kN - mean * mean) / kN);
    EXPECT_LT(std::abs(mean - 1.0 / mu_t), 3.0 * se) << "mu_t = " << mu_t;
  }
}

TEST(Sampling, DeflectKeepsUnitLengthAndAngle) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double cost = 2.0 * detail::uniform01(rng) - 1.0;
    const auto [cp, sp] = sample_azimuth(rng);
    EXPECT_NEAR(cp * cp + sp * sp, 1.0, 1e-12);
    Vec3 d{detail::uniform01(rng) - 0.5, detail::uniform01(rng) - 0.5, detail::uniform01(rng) - 0.5};
    d = (1.0 / d.norm()) * d;
    const Vec3 out = deflect(d, cost, cp, sp);
    EXPECT_NEAR(out.norm(), 1.0, 1e-12);
    EXPECT_NEAR(out.x * d.x + out.y * d.y + out.z * d.z, cost, 1e-9);
  }
}

TEST(Simulate, EnergyConservation) {
  auto c = small_config();
  c.photons = 100000;
  c.threads = 0;
  const auto f = simulate(c);
  EXPECT_EQ(f.tally.launched, 100000.0);
  EXPECT_NEAR(f.tally.accounted(), f.tally.launched, 1e-3 * f.tally.launched);
  EXPECT_GT(f.tally.absorbed, 0.0);
  EXPECT_GT(f.tally.transducer + f.tally.escaped, 0.0);
}

TEST(Simulate, SeedDeterminismAndThreadIndependence) {
  auto c = small_config();
  const auto a = simulate(c);
  const auto b = simulate(c);
  c.threads = 3;
  const auto t = simulate(c);
  ASSERT_EQ(a.values.size(), t.values.size());
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.values, t.values);
  EXPECT_EQ(a.tally.interactions, t.tally.interactions);

  c.seed = 43;
  const auto d = simulate(c);
  EXPECT_NE(a.values, d.values);
}

TEST(Simulate, MatchedIndexHasNoInternalReflection) {
  auto c = small_config();
  c.photons = 5000;
  c.n_medium = c.n_coupling = c.n_ambient = 1.33;
  const auto f = simulate(c);
  EXPECT_EQ(f.tally.internal_reflections, 0u);

  c.n_coupling = 1.49;
  c.n_ambient = 1.0;
  EXPECT_GT(simulate(c).tally.internal_reflections, 0u);
}

TEST(Simulate, BeerLambertWithoutScattering) {
  // Unscattered beam: absorbed fraction per depth slab follows exp(-mu_a s).
  McConfig c;
  c.photons = 200000;
  c.mu_a = 0.1;
  c.mu_s_reduced = 0.0;
  c.grid = VoxelGrid::centered(40.0, 40.0, 20.0, 0.5);
  c.threads = 0;
  const auto f = simulate(c);
  EXPECT_EQ(f.tally.internal_reflections, 0u);
  EXPECT_EQ(f.tally.interactions, c.photons);

  const double cos_t = std::cos(deg_to_rad(c.tilt_deg));
  const double norm = c.mu_a * c.grid.voxel_volume();
  for (std::size_t iz = 0; iz < c.grid.dims[2]; iz += 4) {
    double slab = 0.0;
    for (std::size_t iy = 0; iy < c.grid.dims[1]; ++iy)
      for (std::size_t ix = 0; ix < c.grid.dims[0]; ++ix) slab += f.at(ix, iy, iz);
    slab *= norm;
    const double z0 = iz * c.grid.spacing, z1 = z0 + c.grid.spacing;
    const double expect = std::exp(-c.mu_a * z0 / cos_t) - std::exp(-c.mu_a * z1 / cos_t);
    const double se = std::sqrt(expect * (1.0 - expect) / c.photons);
    EXPECT_NEAR(slab, expect, 4.0 * se) << "slab " << iz;
  }
}

TEST(Simulate, BallisticSpikeInLowScattering) {
  McConfig c;
  c.photons = 100000;
  c.mu_a = 0.003;
  c.mu_s_reduced = 0.2;
  c.grid = VoxelGrid::centered(30.0, 30.0, 20.0, 0.2);
  c.threads = 0;
  const auto f = simulate(c);
  const double tan_t = std::tan(deg_to_rad(c.tilt_deg));
  for (double z : {1.0, 2.0, 3.0}) {
    const Vec3 on{0.0, c.source.y - z * tan_t, z};
    const Vec3 off{2.0, on.y, z};
    EXPECT_GT(f.sample(on), 5.0 * f.sample(off)) << "z = " << z;
  }
}

TEST(Simulate, RejectsInvalidConfig) {
  auto c = small_config();
  c.mu_a = 0.0;
  EXPECT_THROW(simulate(c), ConfigError);
  c = small_config();
  c.g = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.tilt_deg = 90.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.photons = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(CompareToModel, SelfComparisonIsZero) {
  FluenceField f;
  f.grid = VoxelGrid::centered(4.0, 4.0, 30.0, 0.5);
  f.values.resize(f.grid.size());
  const auto model = [](Vec3 p) { return 2.0 + 0.5 * p.z + 0.1 * p.x; };
  for (std::size_t iz = 0; iz < f.grid.dims[2]; ++iz)
    for (std::size_t iy = 0; iy < f.grid.dims[1]; ++iy)
      for (std::size_t ix = 0; ix < f.grid.dims[0]; ++ix)
        f.values[f.grid.index(ix, iy, iz)] = model(f.grid.center(ix, iy, iz));
  const auto t = compare_to_model(f, model, AxialLine{});
  EXPECT_NEAR(t.amplitude, 1.0, 1e-12);
  EXPECT_LT(t.max_abs_rel, 1e-12);
  EXPECT_EQ(t.rows.size(), 41u);

  // Amplitude-matched: a scaled model still compares as zero.
  const auto t2 = compare_to_model(f, [&](Vec3 p) { return 7.0 * model(p); }, AxialLine{});
  EXPECT_NEAR(t2.amplitude, 1.0 / 7.0, 1e-12);
  EXPECT_LT(t2.max_abs_rel, 1e-12);

  AxialLine bad;
  bad.step = 0.0;
  EXPECT_THROW(compare_to_model(f, model, bad), NumericError);
}
