#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "homcam/interferometer.hpp"

using namespace homcam;

TEST(ArmTransform, Definition) {
  EXPECT_EQ(arm_transform({1.0, 2.0}), (Vec2{-1.0, -2.0}));
  EXPECT_EQ(arm_transform({0.0, 0.0}), (Vec2{0.0, 0.0}));
  const Vec2 q{0.3, -7.25};
  EXPECT_EQ(arm_transform(arm_transform(q)), q);
}

TEST(Indistinguishability, PerfectOverlap) {
  InterferometerConfig cfg;
  EXPECT_DOUBLE_EQ(indistinguishability(Vec2{12.0, -3.0}, cfg), 1.0);
  EXPECT_DOUBLE_EQ(indistinguishability(Vec2{0.0, 0.0}, cfg), 1.0);
}

TEST(Indistinguishability, EnvelopeAtOneSigma) {
  InterferometerConfig cfg;
  cfg.delay_um = cfg.temporal_width_um;
  EXPECT_NEAR(indistinguishability(Vec2{5.0, 5.0}, cfg), 0.6065306597, 1e-9);
  cfg.delay_um = -cfg.temporal_width_um;
  EXPECT_NEAR(indistinguishability(Vec2{5.0, 5.0}, cfg), 0.6065306597, 1e-9);
}

TEST(Indistinguishability, OnlyPerfectAlignmentReachesOne) {
  InterferometerConfig cfg;
  cfg.displacement = {0.5, 0.0};
  EXPECT_LT(indistinguishability(Vec2{0.0, 0.0}, cfg), 1.0);
  cfg.displacement = {};
  cfg.rotation_rad = 0.01;
  EXPECT_LT(indistinguishability(Vec2{10.0, 0.0}, cfg), 1.0);
}

TEST(Indistinguishability, DecreasesWithRadiusUnderRotation) {
  InterferometerConfig cfg;
  cfg.rotation_rad = 0.05;
  double previous = 1.0 + 1e-12;
  for (double r = 0.0; r <= 80.0; r += 4.0) {
    const double i = indistinguishability(Vec2{r * 0.6, r * 0.8}, cfg);
    EXPECT_LT(i, previous);
    previous = i;
  }
}

TEST(RoutePair, RejectsOutOfRange) {
  Rng rng(1);
  EXPECT_THROW(route_pair(-0.1, rng), DomainError);
  EXPECT_THROW(route_pair(1.01, rng), DomainError);
}

TEST(RoutePair, BunchedMatchesSpotPorts) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const auto r = route_pair(uniform01(rng), rng);
    ASSERT_TRUE(valid_spot(r.spot_signal) && valid_spot(r.spot_idler));
    EXPECT_EQ(r.bunched, port_of(r.spot_signal) == port_of(r.spot_idler));
  }
}

namespace {
double same_port_fraction(double indist, int trials, std::uint64_t seed) {
  Rng rng(seed);
  int same = 0;
  for (int i = 0; i < trials; ++i) same += route_pair(indist, rng).bunched ? 1 : 0;
  return static_cast<double>(same) / trials;
}
} // namespace

TEST(RoutePair, PerfectInterferenceNeverSplits) {
  EXPECT_EQ(same_port_fraction(1.0, 100000, 3), 1.0);
}

TEST(RoutePair, DistinguishableIsFiftyFifty) {
  EXPECT_NEAR(same_port_fraction(0.0, 100000, 4), 0.5, 0.01);
}

TEST(RoutePair, PartialOverlap) {
  EXPECT_NEAR(same_port_fraction(0.64, 100000, 5), 0.82, 0.01);
}

TEST(RoutePair, ProbabilityConservation) {
  // same + cross = 1 and the same-port fraction tracks (1+I)/2 across I.
  for (double i : {0.0, 0.2, 0.5, 0.9}) {
    const int n = 40000;
    const double same = same_port_fraction(i, n, 6);
    const double sd = std::sqrt(0.25 / n);
    EXPECT_NEAR(same, 0.5 * (1.0 + i), 4.0 * sd);
  }
}

TEST(RoutePair, SpotsUniformWithinPort) {
  Rng rng(8);
  std::array<int, 4> hits{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto r = route_pair(0.3, rng);
    ++hits[r.spot_signal - 1];
  }
  // Signal lands in each port half the time, then on either spot: 1/4 each.
  double chi2 = 0.0;
  for (int h : hits) chi2 += (h - n / 4.0) * (h - n / 4.0) / (n / 4.0);
  EXPECT_LT(chi2, 16.27);  // χ²(3) at p = 0.001
}

TEST(MeanOverlap, MatchesQuadrature) {
  // Reference values from adaptive quadrature of the radial integrals.
  EXPECT_NEAR(mean_overlap_in_disk(23.79, 51.2, 0.07, 2.0), 0.642334, 2e-6);
  EXPECT_NEAR(mean_overlap_in_disk(10.0, 5.0, 0.3, 1.5), 0.792351, 2e-6);
  EXPECT_NEAR(mean_overlap_in_disk(10.0, 5.0, 0.0, 1.5), 1.0, 1e-12);
}

TEST(MeanOverlap, DecreasesWithRadius) {
  double previous = 1.0;
  for (double r = 5.0; r <= 100.0; r += 5.0) {
    const double v = mean_overlap_in_disk(24.0, r, 0.07, 2.0);
    EXPECT_LT(v, previous);
    previous = v;
  }
}

TEST(MeanOverlap, AgreesWithMonteCarlo) {
  InterferometerConfig cfg;
  cfg.rotation_rad = 0.05;
  cfg.spatial_mismatch_sigma = 1.5;
  const double beam = 20.0, radius = 30.0;
  Rng rng(12);
  double sum = 0.0;
  int inside = 0;
  while (inside < 200000) {
    const Vec2 q{beam * standard_normal(rng), beam * standard_normal(rng)};
    if (norm(q) > radius) continue;
    sum += spatial_overlap(q, cfg);
    ++inside;
  }
  EXPECT_NEAR(sum / inside, mean_overlap_in_disk(beam, radius, cfg.rotation_rad, cfg.spatial_mismatch_sigma), 0.003);
}
