#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "homcam/report.hpp"
#include "homcam/run_config.hpp"

using namespace homcam;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> problems_of(const json& j) {
  try {
    parse_run_config(j);
  } catch (const SchemaError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

} // namespace

TEST(RunConfig, DefaultsFromEmptyDocument) {
  const auto c = parse_run_config(json::object());
  EXPECT_EQ(c.source.crystal_length_mm, 0.5);
  EXPECT_EQ(c.camera.tick_ns, 6.0);
  EXPECT_EQ(c.camera.efficiency, 0.3);
  EXPECT_EQ(c.camera.dark_rate, 10.0);
  EXPECT_EQ(c.analysis.window_ticks, 2u);
  EXPECT_FALSE(c.camera_spot_centers_explicit);
}

TEST(RunConfig, ParsesAllSections) {
  const auto j = json::parse(R"({
    "source": {"crystal_length_mm": 1.0, "pair_rate": 5e4, "seed": 9},
    "interferometer": {"delay_um": -12.5, "rotation_rad": 0.07, "displacement": [1.0, -2.0]},
    "camera": {"imaging_plane": "far_field", "efficiency": 0.5, "spot_centers": [[10,10],[20,10],[10,20],[20,20]]},
    "analysis": {"window_ticks": 3, "band_width": 4, "accidental_offset": 100, "dip_spots": [1, 3],
                 "calibration": {"um_per_pixel": 1.1}, "svg": true},
    "io": {"duration_s": 0.5, "threads": 2}
  })");
  const auto c = parse_run_config(j);
  EXPECT_EQ(c.source.crystal_length_mm, 1.0);
  EXPECT_EQ(c.source.seed, 9u);
  EXPECT_EQ(c.interferometer.delay_um, -12.5);
  EXPECT_EQ(c.interferometer.displacement, (Vec2{1.0, -2.0}));
  EXPECT_EQ(c.camera.plane, ImagingPlane::far_field);
  EXPECT_TRUE(c.camera_spot_centers_explicit);
  EXPECT_EQ(c.camera.spot_centers[3], (PixelCoord{20, 20}));
  EXPECT_EQ(c.analysis.window_ticks, 3u);
  EXPECT_EQ(*c.analysis.band_width, 4);
  EXPECT_EQ(*c.analysis.accidental_offset, 100u);
  EXPECT_EQ(c.analysis.dip_spots[1], 3);
  EXPECT_EQ(*c.analysis.calibration.um_per_pixel, 1.1);
  EXPECT_TRUE(c.analysis.svg);
  EXPECT_EQ(c.io.threads, 2u);
}

TEST(RunConfig, UnknownKeysReportedWithPaths) {
  const auto p = problems_of(json::parse(R"({
    "source": {"crystal_lenght_mm": 1.0},
    "camera": {"efficiency": "high"},
    "analysis": {"calibration": {"pixels": 3}},
    "extra": {}
  })"));
  EXPECT_TRUE(mentions(p, "source.crystal_lenght_mm: unknown key"));
  EXPECT_TRUE(mentions(p, "camera.efficiency: expected a number"));
  EXPECT_TRUE(mentions(p, "analysis.calibration.pixels: unknown key"));
  EXPECT_TRUE(mentions(p, "extra: unknown section"));
  EXPECT_EQ(p.size(), 4u);
}

TEST(RunConfig, TypeAndRangeErrors) {
  EXPECT_TRUE(mentions(problems_of(json::parse(R"({"analysis": {"window_ticks": -1}})")), "analysis.window_ticks"));
  EXPECT_TRUE(mentions(problems_of(json::parse(R"({"analysis": {"window_ticks": 1.5}})")), "expected an integer"));
  EXPECT_TRUE(mentions(problems_of(json::parse(R"({"camera": {"efficiency": 1.5}})")), "camera.efficiency"));
  EXPECT_TRUE(mentions(problems_of(json::parse(R"({"source": {"alpha": 0}})")), "source.alpha"));
  EXPECT_TRUE(mentions(problems_of(json::parse(R"({"camera": {"imaging_plane": "mid"}})")), "camera.imaging_plane"));
  EXPECT_TRUE(mentions(problems_of(json::parse(R"({"analysis": {"dip_spots": [2, 2]}})")), "analysis.dip_spots"));
  EXPECT_TRUE(
      mentions(problems_of(json::parse(R"({"analysis": {"window_ticks": 5, "accidental_offset": 5}})")),
               "analysis.accidental_offset"));
  EXPECT_THROW(parse_run_config(json::array()), SchemaError);
}

TEST(RunConfig, LoadFromFile) {
  const auto path = fs::temp_directory_path() / ("homcam_cfg_" + std::to_string(std::random_device{}()) + ".json");
  {
    std::ofstream(path) << R"({"io": {"duration_s": 2}})";
  }
  EXPECT_EQ(load_run_config(path).io.duration_s, 2.0);
  {
    std::ofstream(path) << "{ not json";
  }
  EXPECT_THROW(load_run_config(path), ConfigError);
  fs::remove(path);
  EXPECT_THROW(load_run_config(path), IoError);
}

TEST(RunConfig, SpotCalibrationFallbacks) {
  auto c = parse_run_config(json::object());
  EXPECT_THROW(analysis_spot_centers(c), ConfigError);
  c = parse_run_config(json::parse(R"({"camera": {"spot_centers": [[1,1],[2,1],[1,2],[2,2]]}})"));
  EXPECT_EQ(analysis_spot_centers(c)[1], (PixelCoord{2, 1}));
  c = parse_run_config(json::parse(R"({"analysis": {"spot_centers": [[5,5],[6,5],[5,6],[6,6]]}})"));
  EXPECT_EQ(analysis_spot_centers(c)[0], (PixelCoord{5, 5}));
  const auto cal = analysis_calibration(c);
  EXPECT_NEAR(*cal.um_per_pixel, 55.0 / 53.68, 1e-12);
  EXPECT_NEAR(*cal.inv_um_per_pixel, 55.0 / 10750.0, 1e-15);
}

TEST(Digest, Sha256KnownVector) {
  EXPECT_EQ(to_hex(sha256("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(to_hex(sha256("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Digest, SensitiveToGenerationParametersOnly) {
  auto a = parse_run_config(json::object());
  auto b = a;
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.analysis.window_ticks = 9;
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.source.seed = 2;
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(Report, JsonKeys) {
  HomScanResult r;
  r.delays = {0, 1, 2, 3, 4};
  r.counts = r.normalized_counts = {1, 1, 1, 1, 1};
  auto j = to_json(r);
  EXPECT_TRUE(j["visibility"].is_null());
  EXPECT_FALSE(j["converged"].get<bool>());
  for (const char* k : {"delays_um", "counts", "normalized_counts", "fit"}) EXPECT_TRUE(j.contains(k)) << k;
  r.visibility = 0.9;
  r.visibility_error = 0.01;
  j = to_json(r);
  EXPECT_EQ(j["visibility"].get<double>(), 0.9);
  EXPECT_EQ(j["visibility_error"].get<double>(), 0.01);
  for (const char* k : {"a", "b", "c", "d", "a_err", "c_err", "residual_sse", "converged"})
    EXPECT_TRUE(j["fit"].contains(k)) << k;
}

TEST(Report, AppendOnlyNaming) {
  const auto dir = fs::temp_directory_path() / ("homcam_rep_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const auto p1 = next_free_path(dir, "report", ".json");
  EXPECT_EQ(p1.filename(), "report-0001.json");
  write_text_file(p1, "{}");
  const auto p2 = next_free_path(dir, "report", ".json");
  EXPECT_EQ(p2.filename(), "report-0002.json");
  EXPECT_THROW(write_text_file(p1, "{}"), IoError);
  fs::remove_all(dir);
}

TEST(Report, SvgOutputs) {
  const std::vector<double> d{-20, -10, 0, 10, 20};
  std::vector<double> c;
  for (double x : d) c.push_back(100.0 - 60.0 * std::exp(-0.5 * x * x / 100.0));
  const auto r = fit_hom_counts(d, c);
  const auto s = svg::scan_plot(r, "scan");
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("polyline"), std::string::npos);
  Histogram2D h(5);
  h.add(0, 0, 3);
  const auto m = svg::heatmap(h, 5, "jpd");
  EXPECT_NE(m.find("rgb(0,0,0)"), std::string::npos);
}
