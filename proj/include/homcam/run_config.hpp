#pragma once

// Run configuration: JSON document with sections source, interferometer,
// camera, analysis and io. Unknown keys and type mismatches are collected
// with their key paths and reported together.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "homcam/analysis.hpp"
#include "homcam/camera.hpp"
#include "homcam/error.hpp"
#include "homcam/event_io.hpp"
#include "homcam/interferometer.hpp"
#include "homcam/physics.hpp"

namespace homcam {

using json = nlohmann::json;

struct AnalysisConfig {
  std::uint64_t window_ticks{2};
  double roi_radius{20.0};
  std::vector<double> roi_radii{10, 20, 30, 40, 50};
  std::optional<int> band_width;
  std::optional<std::uint64_t> accidental_offset;
  std::array<SpotId, 2> dip_spots{2, 4};
  std::array<SpotId, 2> peak_spots{1, 2};
  int jpd_fit_radius{25};
  double mode_roi_radius{50.0};
  std::optional<SpotCenters> spot_centers;  ///< falls back to an explicit camera.spot_centers
  Calibration calibration;                  ///< falls back to explicit camera imaging constants
  bool svg{false};
};

struct IoConfig {
  double duration_s{10.0};
  unsigned threads{0};
};

struct RunConfig {
  SourceConfig source;
  InterferometerConfig interferometer;
  CameraConfig camera;
  AnalysisConfig analysis;
  IoConfig io;
  bool camera_spot_centers_explicit{false};
};

/// Thrown with every schema violation found, one per line.
class SchemaError : public ConfigError {
public:
  explicit SchemaError(std::vector<std::string> problems)
      : ConfigError(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& p : v) s += "\n  " + p;
    return s;
  }
  std::vector<std::string> problems_;
};

namespace detail {

class SchemaReader {
public:
  std::vector<std::string> problems;

  /// Visits `section` of `root`; flags keys not listed in `allowed`.
  const json* section(const json& root, const std::string& name, std::initializer_list<const char*> allowed) {
    if (!root.contains(name)) return nullptr;
    const json& s = root.at(name);
    if (!s.is_object()) {
      problems.push_back(name + ": expected an object");
      return nullptr;
    }
    for (const auto& [key, value] : s.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) problems.push_back(name + "." + key + ": unknown key");
    }
    return &s;
  }

  template <class T>
  bool number(const json* s, const std::string& path, const char* key, T& out) {
    if (!s || !s->contains(key)) return false;
    const json& v = s->at(key);
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) {
        problems.push_back(path + "." + key + ": expected an integer");
        return false;
      }
      if (std::is_unsigned_v<T> && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        problems.push_back(path + "." + key + ": expected a non-negative integer");
        return false;
      }
    } else if (!v.is_number()) {
      problems.push_back(path + "." + key + ": expected a number");
      return false;
    }
    out = v.get<T>();
    return true;
  }

  bool boolean(const json* s, const std::string& path, const char* key, bool& out) {
    if (!s || !s->contains(key)) return false;
    if (!s->at(key).is_boolean()) {
      problems.push_back(path + "." + key + ": expected a boolean");
      return false;
    }
    out = s->at(key).get<bool>();
    return true;
  }

  bool spots(const json* s, const std::string& path, const char* key, SpotCenters& out) {
    if (!s || !s->contains(key)) return false;
    const json& v = s->at(key);
    bool ok = v.is_array() && v.size() == 4;
    for (std::size_t i = 0; ok && i < 4; ++i) {
      ok = v[i].is_array() && v[i].size() == 2 && v[i][0].is_number_integer() && v[i][1].is_number_integer();
      if (ok) out[i] = {v[i][0].get<int>(), v[i][1].get<int>()};
    }
    if (!ok) problems.push_back(path + "." + key + ": expected four [x, y] integer pairs");
    return ok;
  }

  bool spot_pair(const json* s, const std::string& path, const char* key, std::array<SpotId, 2>& out) {
    if (!s || !s->contains(key)) return false;
    const json& v = s->at(key);
    const bool ok = v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer() &&
                    valid_spot(v[0].get<int>()) && valid_spot(v[1].get<int>()) && v[0] != v[1];
    if (!ok) {
      problems.push_back(path + "." + key + ": expected two distinct spot ids in 1..4");
      return false;
    }
    out = {static_cast<SpotId>(v[0].get<int>()), static_cast<SpotId>(v[1].get<int>())};
    return true;
  }
};

} // namespace detail

inline RunConfig parse_run_config(const json& root) {
  detail::SchemaReader rd;
  RunConfig cfg;
  if (!root.is_object()) throw SchemaError({"<root>: expected an object"});
  for (const auto& [key, value] : root.items())
    if (key != "source" && key != "interferometer" && key != "camera" && key != "analysis" && key != "io")
      rd.problems.push_back(key + ": unknown section");

  if (const json* s = rd.section(root, "source", {"crystal_length_mm", "pump_wavelength_nm", "pump_coherence_length_um",
                                                  "pump_waist_um", "alpha", "pair_rate", "seed"})) {
    auto& c = cfg.source;
    rd.number(s, "source", "crystal_length_mm", c.crystal_length_mm);
    rd.number(s, "source", "pump_wavelength_nm", c.pump_wavelength_nm);
    rd.number(s, "source", "pump_coherence_length_um", c.pump_coherence_length_um);
    rd.number(s, "source", "pump_waist_um", c.pump_waist_um);
    rd.number(s, "source", "alpha", c.alpha);
    rd.number(s, "source", "pair_rate", c.pair_rate);
    rd.number(s, "source", "seed", c.seed);
  }

  if (const json* s = rd.section(root, "interferometer", {"delay_um", "temporal_width_um", "rotation_rad",
                                                          "displacement", "spatial_mismatch_sigma"})) {
    auto& c = cfg.interferometer;
    rd.number(s, "interferometer", "delay_um", c.delay_um);
    rd.number(s, "interferometer", "temporal_width_um", c.temporal_width_um);
    rd.number(s, "interferometer", "rotation_rad", c.rotation_rad);
    rd.number(s, "interferometer", "spatial_mismatch_sigma", c.spatial_mismatch_sigma);
    if (s->contains("displacement")) {
      const json& v = s->at("displacement");
      if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        c.displacement = {v[0].get<double>(), v[1].get<double>()};
      else
        rd.problems.push_back("interferometer.displacement: expected [x, y]");
    }
  }

  if (const json* s = rd.section(root, "camera", {"width", "height", "pixel_pitch_um", "tick_ns", "jitter_ns",
                                                  "efficiency", "dark_rate", "imaging_plane", "magnification",
                                                  "focal_scale", "spot_centers"})) {
    auto& c = cfg.camera;
    rd.number(s, "camera", "width", c.width);
    rd.number(s, "camera", "height", c.height);
    rd.number(s, "camera", "pixel_pitch_um", c.pixel_pitch_um);
    rd.number(s, "camera", "tick_ns", c.tick_ns);
    rd.number(s, "camera", "jitter_ns", c.jitter_ns);
    rd.number(s, "camera", "efficiency", c.efficiency);
    rd.number(s, "camera", "dark_rate", c.dark_rate);
    rd.number(s, "camera", "magnification", c.magnification);
    rd.number(s, "camera", "focal_scale", c.focal_scale);
    if (s->contains("imaging_plane")) {
      const json& v = s->at("imaging_plane");
      if (v == "near_field")
        c.plane = ImagingPlane::near_field;
      else if (v == "far_field")
        c.plane = ImagingPlane::far_field;
      else
        rd.problems.push_back("camera.imaging_plane: expected \"near_field\" or \"far_field\"");
    }
    cfg.camera_spot_centers_explicit = rd.spots(s, "camera", "spot_centers", c.spot_centers);
  }

  if (const json* s = rd.section(root, "analysis", {"window_ticks", "roi_radius", "roi_radii", "band_width",
                                                    "accidental_offset", "dip_spots", "peak_spots", "jpd_fit_radius",
                                                    "mode_roi_radius", "spot_centers", "calibration", "svg"})) {
    auto& c = cfg.analysis;
    rd.number(s, "analysis", "window_ticks", c.window_ticks);
    rd.number(s, "analysis", "roi_radius", c.roi_radius);
    if (s->contains("roi_radii")) {
      const json& v = s->at("roi_radii");
      if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }))
        c.roi_radii = v.get<std::vector<double>>();
      else
        rd.problems.push_back("analysis.roi_radii: expected an array of numbers");
    }
    int bw = 0;
    if (rd.number(s, "analysis", "band_width", bw)) c.band_width = bw;
    std::uint64_t off = 0;
    if (rd.number(s, "analysis", "accidental_offset", off)) c.accidental_offset = off;
    rd.spot_pair(s, "analysis", "dip_spots", c.dip_spots);
    rd.spot_pair(s, "analysis", "peak_spots", c.peak_spots);
    rd.number(s, "analysis", "jpd_fit_radius", c.jpd_fit_radius);
    rd.number(s, "analysis", "mode_roi_radius", c.mode_roi_radius);
    SpotCenters sc{};
    if (rd.spots(s, "analysis", "spot_centers", sc)) c.spot_centers = sc;
    if (const json* cal = s->contains("calibration") ? &s->at("calibration") : nullptr) {
      if (!cal->is_object()) {
        rd.problems.push_back("analysis.calibration: expected an object");
      } else {
        for (const auto& [key, value] : cal->items())
          if (key != "um_per_pixel" && key != "inv_um_per_pixel")
            rd.problems.push_back("analysis.calibration." + key + ": unknown key");
        double v = 0.0;
        if (rd.number(cal, "analysis.calibration", "um_per_pixel", v)) c.calibration.um_per_pixel = v;
        if (rd.number(cal, "analysis.calibration", "inv_um_per_pixel", v)) c.calibration.inv_um_per_pixel = v;
      }
    }
    rd.boolean(s, "analysis", "svg", c.svg);
  }

  if (const json* s = rd.section(root, "io", {"duration_s", "threads"})) {
    rd.number(s, "io", "duration_s", cfg.io.duration_s);
    rd.number(s, "io", "threads", cfg.io.threads);
  }

  if (!rd.problems.empty()) throw SchemaError(rd.problems);

  std::vector<std::string> range;
  const auto check = [&range](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      range.push_back(e.what());
    }
  };
  check([&] { (void)validate(cfg.source); });
  check([&] { validate(cfg.interferometer); });
  check([&] { validate(cfg.camera); });
  if (!(cfg.io.duration_s >= 0.0)) range.push_back("io.duration_s must be >= 0");
  if (!(cfg.analysis.roi_radius > 0.0)) range.push_back("analysis.roi_radius must be > 0");
  for (double r : cfg.analysis.roi_radii)
    if (!(r > 0.0)) range.push_back("analysis.roi_radii entries must be > 0");
  if (cfg.analysis.band_width && *cfg.analysis.band_width < 1) range.push_back("analysis.band_width must be >= 1");
  if (cfg.analysis.accidental_offset && *cfg.analysis.accidental_offset <= cfg.analysis.window_ticks)
    range.push_back("analysis.accidental_offset must exceed analysis.window_ticks");
  if (!range.empty()) throw SchemaError(range);
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError({path.string() + ": " + e.what()});
  }
  return parse_run_config(root);
}

inline const char* plane_name(ImagingPlane p) { return p == ImagingPlane::near_field ? "near_field" : "far_field"; }

/// Fully resolved generation parameters (the part of the config that
/// determines an event file).
inline json generation_json(const RunConfig& c) {
  json spots = json::array();
  for (const auto& s : c.camera.spot_centers) spots.push_back({s.x, s.y});
  return {
      {"source",
       {{"crystal_length_mm", c.source.crystal_length_mm},
        {"pump_wavelength_nm", c.source.pump_wavelength_nm},
        {"pump_coherence_length_um", c.source.pump_coherence_length_um},
        {"pump_waist_um", c.source.pump_waist_um},
        {"alpha", c.source.alpha},
        {"pair_rate", c.source.pair_rate},
        {"seed", c.source.seed}}},
      {"interferometer",
       {{"delay_um", c.interferometer.delay_um},
        {"temporal_width_um", c.interferometer.temporal_width_um},
        {"rotation_rad", c.interferometer.rotation_rad},
        {"displacement", {c.interferometer.displacement.x, c.interferometer.displacement.y}},
        {"spatial_mismatch_sigma", c.interferometer.spatial_mismatch_sigma}}},
      {"camera",
       {{"width", c.camera.width},
        {"height", c.camera.height},
        {"pixel_pitch_um", c.camera.pixel_pitch_um},
        {"tick_ns", c.camera.tick_ns},
        {"jitter_ns", c.camera.jitter_ns},
        {"efficiency", c.camera.efficiency},
        {"dark_rate", c.camera.dark_rate},
        {"imaging_plane", plane_name(c.camera.plane)},
        {"magnification", c.camera.magnification},
        {"focal_scale", c.camera.focal_scale},
        {"spot_centers", spots}}},
      {"io", {{"duration_s", c.io.duration_s}}},
  };
}

inline ConfigDigest sha256(const std::string& data) {
  ConfigDigest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
    throw Error("SHA-256 computation failed");
  return out;
}

inline ConfigDigest config_digest(const RunConfig& c) { return sha256(generation_json(c).dump()); }

inline std::string to_hex(const ConfigDigest& d) {
  static constexpr char hex[] = "0123456789abcdef";
  std::string s;
  for (auto b : d) {
    s += hex[b >> 4];
    s += hex[b & 15];
  }
  return s;
}

/// Spot centres for analysis: analysis.spot_centers, else an explicit
/// camera.spot_centers; otherwise the calibration is missing.
inline SpotCenters analysis_spot_centers(const RunConfig& c) {
  if (c.analysis.spot_centers) return *c.analysis.spot_centers;
  if (c.camera_spot_centers_explicit) return c.camera.spot_centers;
  throw ConfigError("missing spot calibration: set analysis.spot_centers (or camera.spot_centers)");
}

/// Pixel calibration for analysis: explicit analysis.calibration keys, else
/// the camera's imaging constants.
inline Calibration analysis_calibration(const RunConfig& c) {
  Calibration cal = c.analysis.calibration;
  if (!cal.um_per_pixel) cal.um_per_pixel = c.camera.pixel_pitch_um / c.camera.magnification;
  if (!cal.inv_um_per_pixel) cal.inv_um_per_pixel = c.camera.pixel_pitch_um / c.camera.focal_scale;
  return cal;
}

} // namespace homcam
