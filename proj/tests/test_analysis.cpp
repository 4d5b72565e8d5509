#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "homcam/analysis.hpp"

using namespace homcam;

namespace {

std::vector<double> scan_delays() {
  std::vector<double> d;
  for (int i = -10; i <= 10; ++i) d.push_back(6.0 * i);
  return d;
}

CoincidencePair pair_at(int ax, int ay, SpotId la, int bx, int by, SpotId lb) {
  CoincidencePair p;
  p.event_a = {static_cast<std::uint16_t>(ax), static_cast<std::uint16_t>(ay), 0, 0};
  p.event_b = {static_cast<std::uint16_t>(bx), static_cast<std::uint16_t>(by), 0, 0};
  p.label_a = la;
  p.label_b = lb;
  return p;
}

} // namespace

TEST(FitHomCounts, ExactDipVisibility) {
  const auto d = scan_delays();
  std::vector<double> c;
  for (double x : d) c.push_back(1000.0 - 640.0 * std::exp(-0.5 * x * x / 400.0));
  const auto r = fit_hom_counts(d, c);
  ASSERT_TRUE(r.visibility);
  EXPECT_NEAR(*r.visibility, 0.64, 1e-6);
  EXPECT_NEAR(r.fit.c, 20.0, 1e-5);
  EXPECT_NEAR(r.normalized_counts[10], 0.36, 1e-6);
}

TEST(FitHomCounts, PeakVisibilityMayExceedOne) {
  const auto d = scan_delays();
  std::vector<double> c;
  for (double x : d) c.push_back(100.0 + 120.0 * std::exp(-0.5 * x * x / 400.0));
  const auto r = fit_hom_counts(d, c);
  ASSERT_TRUE(r.visibility);
  EXPECT_NEAR(*r.visibility, 1.2, 1e-6);
}

TEST(FitHomCounts, PoissonScanErrorBarCoversTruth) {
  Rng rng(41);
  const auto d = scan_delays();
  int covered = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<double> c;
    for (double x : d) {
      std::poisson_distribution<int> p(2000.0 * (1.0 - 0.5 * std::exp(-0.5 * x * x / 400.0)));
      c.push_back(p(rng));
    }
    const auto r = fit_hom_counts(d, c);
    ASSERT_TRUE(r.visibility);
    covered += std::abs(*r.visibility - 0.5) <= 2.0 * r.visibility_error ? 1 : 0;
  }
  EXPECT_GE(covered, static_cast<int>(0.9 * reps));
}

TEST(FitHomCounts, FlatCountsHaveNoVisibility) {
  Rng rng(42);
  const auto d = scan_delays();
  int reported = 0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> c;
    std::poisson_distribution<int> p(500.0);
    for (std::size_t i = 0; i < d.size(); ++i) c.push_back(p(rng));
    const auto r = fit_hom_counts(d, c);
    reported += r.visibility ? 1 : 0;
    for (double n : r.normalized_counts) EXPECT_NEAR(n, 1.0, 0.25);
  }
  EXPECT_LE(reported, 3);
}

TEST(FitHomCounts, InputValidation) {
  const std::vector<double> d{0, 1, 2, 2, 3};
  const std::vector<double> c{1, 1, 1, 1, 1};
  EXPECT_THROW(fit_hom_counts(d, c), DomainError);
  const std::vector<double> short_d{0, 1, 2, 3};
  EXPECT_THROW(fit_hom_counts(short_d, std::vector<double>{1, 1, 1, 1}), DomainError);
}

TEST(HomScan, PerfectDipFromSimulation) {
  SourceConfig src;
  src.pair_rate = 2.0e5;
  CameraConfig cam;
  cam.efficiency = 1.0;
  cam.dark_rate = 0.0;
  InterferometerConfig icfg;
  std::vector<double> delays;
  std::vector<EventStream> streams;
  for (int i = -5; i <= 5; ++i) {
    icfg.delay_um = 12.0 * i;
    src.seed = mix_seed(100, static_cast<std::uint64_t>(i + 5));
    delays.push_back(icfg.delay_um);
    streams.push_back(simulate_stream(src, icfg, cam, 0.1).stream);
  }
  const RoiSpec a{cam.center(2), 50.0, 2}, b{cam.center(4), 50.0, 4};
  const auto r = hom_scan(delays, streams, a, b);
  ASSERT_TRUE(r.visibility);
  EXPECT_NEAR(*r.visibility, 1.0, 0.05);
  EXPECT_NEAR(r.fit.c, 20.0, 3.0);
  ScanOptions opt;
  opt.accidental_offset = 2;
  EXPECT_THROW(hom_scan(delays, streams, a, b, opt), DomainError);
}

TEST(Histogram2D, Bounds) {
  Histogram2D h(3);
  h.add(-3, 3);
  h.add(0, 0, 5);
  EXPECT_EQ(h.at(-3, 3), 1u);
  EXPECT_EQ(h.at(0, 0), 5u);
  EXPECT_EQ(h.total(), 6u);
  EXPECT_EQ(h.at(4, 0), 0u);
  EXPECT_THROW(h.add(4, 0), DomainError);
}

TEST(JpdProjections, SpotCentredSumAndDifference) {
  const SpotCenters c = default_spot_centers;
  const std::vector<CoincidencePair> pairs{pair_at(66, 61, 1, 190, 196, 4), pair_at(192, 64, 2, 64, 192, 3)};
  const auto j = jpd_projections(pairs, c, 20);
  EXPECT_EQ(j.total_pairs, 2u);
  EXPECT_EQ(j.diff_hist.at(4, -7), 1u);
  EXPECT_EQ(j.sum_hist.at(0, 1), 1u);
  EXPECT_EQ(j.diff_hist.at(0, 0), 1u);
  EXPECT_EQ(j.sum_hist.at(0, 0), 1u);
  auto bad = pairs;
  bad[0].label_a = 0;
  EXPECT_THROW(jpd_projections(bad, c, 20), DomainError);
}

TEST(RadialGaussian, RecoversWidth) {
  Histogram2D h(40);
  const double sigma = 3.7;
  for (int y = -40; y <= 40; ++y)
    for (int x = -40; x <= 40; ++x)
      h.add(x, y, static_cast<std::uint64_t>(std::llround(1.0e6 * std::exp(-0.5 * (x * x + y * y) / (sigma * sigma)))));
  const auto f = fit_radial_gaussian(h, 25);
  ASSERT_TRUE(f.converged);
  EXPECT_NEAR(std::abs(f.c), sigma, 1e-3);
  EXPECT_NEAR(f.b, 0.0, 1e-6);
}

TEST(RadialGaussian, RecoversWidthFromSampledPairs) {
  Rng rng(43);
  Histogram2D h(60);
  const double sigma = 5.0;
  for (int i = 0; i < 200000; ++i)
    h.add(static_cast<int>(std::lround(sigma * standard_normal(rng))),
          static_cast<int>(std::lround(sigma * standard_normal(rng))));
  const auto f = fit_radial_gaussian(h, 25);
  ASSERT_TRUE(f.converged);
  // Rounding to integer bins adds 1/12 px² of variance per axis.
  EXPECT_NEAR(std::abs(f.c), std::sqrt(sigma * sigma + 1.0 / 12.0), 0.05);
}

TEST(BandFilter, ChebyshevBand) {
  const SpotCenters c = default_spot_centers;
  const std::vector<CoincidencePair> pairs{
      pair_at(64, 64, 1, 192, 192, 4),   // diff (0, 0)
      pair_at(66, 64, 1, 192, 192, 4),   // diff (2, 0)
      pair_at(66, 66, 1, 192, 192, 4),   // diff (2, 2)
      pair_at(67, 64, 1, 192, 192, 4),   // diff (3, 0)
      pair_at(70, 70, 1, 186, 186, 4),   // sum (0, 0), diff (12, 12)
  };
  EXPECT_EQ(band_filter(pairs, c, 1, BandDirection::difference).size(), 1u);
  EXPECT_EQ(band_filter(pairs, c, 2, BandDirection::difference).size(), 3u);
  EXPECT_EQ(band_filter(pairs, c, 3, BandDirection::difference).size(), 4u);
  EXPECT_EQ(band_filter(pairs, c, 1, BandDirection::sum).size(), 2u);
  EXPECT_THROW(band_filter(pairs, c, 0, BandDirection::difference), DomainError);
}

TEST(BandFilter, MonotoneInWidth) {
  Rng rng(44);
  std::vector<CoincidencePair> pairs;
  std::uniform_int_distribution<int> off(-30, 30);
  for (int i = 0; i < 5000; ++i)
    pairs.push_back(pair_at(64 + off(rng), 64 + off(rng), 1, 192 + off(rng), 192 + off(rng), 4));
  std::size_t previous = 0;
  for (int bw = 1; bw <= 60; ++bw) {
    const auto n = band_filter(pairs, default_spot_centers, bw, BandDirection::difference).size();
    EXPECT_GE(n, previous);
    previous = n;
  }
  EXPECT_EQ(previous, pairs.size());
}

TEST(EffectiveModes, FormulaValues) {
  IntensityImage img;
  const RoiSpec roi{{128, 128}, 30.0, 1};
  const RoiMask mask(roi, img.width, img.height);
  int lit = 0;
  for (int y = 0; y < img.height && lit < 1725; ++y)
    for (int x = 0; x < img.width && lit < 1725; ++x)
      if (mask.contains(x, y)) {
        img.at(x, y) = 2.0;
        ++lit;
      }
  img.at(0, 0) = 1000.0;  // outside the ROI, ignored
  ASSERT_EQ(lit, 1725);
  const auto wide = effective_modes(img, roi, 3.73);
  EXPECT_NEAR(wide.intensity_sum_ratio, 1725.0, 1e-9);
  EXPECT_NEAR(wide.n_s, 31.0, 0.01);
  const auto narrow = effective_modes(img, roi, 0.5);
  EXPECT_NEAR(narrow.n_s, 1725.0, 1e-9);
  EXPECT_LE(std::abs(narrow.n_s - 1.7e3) / 1.7e3, 0.03);
}

TEST(EffectiveModes, Errors) {
  IntensityImage img;
  const RoiSpec roi{{128, 128}, 10.0, 1};
  EXPECT_THROW(effective_modes(img, roi, 3.0), AnalysisError);
  img.at(128, 128) = 1.0;
  EXPECT_THROW(effective_modes(img, roi, 0.0), DomainError);
  EXPECT_NEAR(effective_modes(img, roi, 0.5).n_s, 1.0, 1e-12);
}

TEST(EffectiveModes, IntensityImageCountsEvents) {
  EventStream s;
  s.width = 4;
  s.height = 3;
  s.events = {{1, 2, 0, 0}, {1, 2, 5, 0}, {3, 0, 6, 0}};
  const auto img = intensity_image(s);
  EXPECT_EQ(img.at(1, 2), 2.0);
  EXPECT_EQ(img.at(3, 0), 1.0);
  EXPECT_EQ(img.at(0, 0), 0.0);
}

TEST(Schmidt, EstimateFromPixels) {
  Calibration cal;
  EXPECT_THROW(
      {
        try {
          estimate_schmidt_from_pixels(3.7, 4.1, cal);
        } catch (const AnalysisError& e) {
          EXPECT_NE(std::string(e.what()).find("analysis.calibration.um_per_pixel"), std::string::npos);
          throw;
        }
      },
      AnalysisError);
  cal.um_per_pixel = 55.0 / 53.68;
  EXPECT_THROW(
      {
        try {
          estimate_schmidt_from_pixels(3.7, 4.1, cal);
        } catch (const AnalysisError& e) {
          EXPECT_NE(std::string(e.what()).find("analysis.calibration.inv_um_per_pixel"), std::string::npos);
          throw;
        }
      },
      AnalysisError);
  cal.inv_um_per_pixel = 55.0 / 10750.0;
  const double k = estimate_schmidt_from_pixels(3.752, 4.1216, cal);
  EXPECT_NEAR(k, schmidt_number({3.752 * 55.0 / 53.68, 4.1216 * 55.0 / 10750.0}), 1e-12);
  EXPECT_NEAR(estimate_schmidt(10.0, 0.023), 5.24, 0.005);
}

TEST(BandFilter, CountMatchesMaterializedFilter) {
  SourceConfig src;
  src.pair_rate = 2.0e5;
  CameraConfig cam;
  cam.dark_rate = 30.0;
  InterferometerConfig icfg;
  icfg.delay_um = 500.0;
  const auto s = simulate_stream(src, icfg, cam, 0.05).stream;
  const RoiSpec a{cam.center(1), 30.0, 1}, b{cam.center(3), 30.0, 3};
  const auto pairs = find_coincidences(s, a, b, 2);
  for (int bw : {1, 3, 10}) {
    for (auto dir : {BandDirection::difference, BandDirection::sum}) {
      EXPECT_EQ(count_band_coincidences(s, a, b, 2, 0, cam.spot_centers, bw, dir),
                band_filter(pairs, cam.spot_centers, bw, dir).size());
    }
  }
  EXPECT_GT(count_band_coincidences(s, a, b, 2, 0, cam.spot_centers, 60, BandDirection::difference), 0u);
  EXPECT_EQ(count_band_coincidences(s, a, b, 2, 0, cam.spot_centers, 60, BandDirection::difference), pairs.size());
}
