// homcam: simulate, scan and analyze camera-based HOM experiments.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "homcam.hpp"

using namespace homcam;
namespace fs = std::filesystem;

namespace {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kConfigFailure = 2, kIoFailure = 3, kAnalysisFailure = 4 };

struct AnalysisOverrides {
  std::optional<double> roi_radius;
  std::optional<std::uint64_t> window_ticks;
  std::optional<int> band_width;
  std::optional<std::uint64_t> accidental_offset;
  bool svg{false};
};

RunConfig load_or_default(const std::string& path) {
  RunConfig cfg = path.empty() ? parse_run_config(json::object()) : load_run_config(path);
  for (const auto& w : validate(cfg.source)) std::cerr << "warning: " << w << '\n';
  return cfg;
}

void apply(const AnalysisOverrides& o, AnalysisConfig& a) {
  if (o.roi_radius) {
    if (!(*o.roi_radius > 0.0)) throw ConfigError("--roi-radius must be > 0");
    a.roi_radius = *o.roi_radius;
    a.roi_radii = {*o.roi_radius};
  }
  if (o.window_ticks) a.window_ticks = *o.window_ticks;
  if (o.band_width) {
    if (*o.band_width < 1) throw ConfigError("--band-width must be >= 1");
    a.band_width = *o.band_width;
  }
  if (o.accidental_offset) a.accidental_offset = *o.accidental_offset;
  if (a.accidental_offset && *a.accidental_offset <= a.window_ticks)
    throw ConfigError("accidental offset must exceed the coincidence window");
  a.svg = a.svg || o.svg;
}

/// "lo:hi:step" (inclusive) or a comma-separated list, in µm.
std::vector<double> parse_delays(const std::string& text) {
  std::vector<double> out;
  const auto number = [&text](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) throw ConfigError("--delays: cannot parse '" + text + "'");
    return v;
  };
  if (std::count(text.begin(), text.end(), ':') == 2) {
    const auto p1 = text.find(':');
    const auto p2 = text.find(':', p1 + 1);
    const double lo = number(text.substr(0, p1));
    const double hi = number(text.substr(p1 + 1, p2 - p1 - 1));
    const double step = number(text.substr(p2 + 1));
    if (!(step > 0.0) || hi < lo) throw ConfigError("--delays: range needs lo <= hi and step > 0");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (long i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  } else {
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(number(item));
  }
  if (out.size() < 2) throw ConfigError("--delays: a scan needs at least 2 delays");
  auto sorted = out;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("--delays: duplicate delay values");
  return out;
}

json truth_json(const TruthSummary& t) {
  return {{"generated_pairs", t.generated_pairs},
          {"detected_photons", t.detected_photons},
          {"absorbed_photons", t.absorbed_photons},
          {"out_of_sensor_photons", t.out_of_sensor_photons},
          {"dropped_photons", t.dropped_photons},
          {"dark_counts", t.dark_counts},
          {"bunched_pairs", t.bunched_pairs},
          {"detected_per_spot", t.detected_per_spot},
          {"mean_indistinguishability", t.mean_indistinguishability()}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + path.string());
}

SimulationResult run_simulation(const RunConfig& cfg, const fs::path& out) {
  SimulationOptions opts;
  opts.threads = cfg.io.threads;
  auto res = simulate_stream(cfg.source, cfg.interferometer, cfg.camera, cfg.io.duration_s, opts);
  write_stream(out, res.stream, config_digest(cfg));
  return res;
}

int cmd_simulate(const std::string& config, const std::string& out) {
  const RunConfig cfg = load_or_default(config);
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto res = run_simulation(cfg, path);
  auto truth = truth_json(res.truth);
  truth["config_digest"] = to_hex(config_digest(cfg));
  truth["event_file"] = path.filename().string();
  truth["records"] = res.stream.events.size();
  auto truth_path = path;
  truth_path.replace_extension(".truth.json");
  write_json(truth_path, truth);

  const auto& t = res.truth;
  std::cout << "pairs generated     " << t.generated_pairs << '\n'
            << "photons detected    " << t.detected_photons << '\n'
            << "photons absorbed    " << t.absorbed_photons << '\n'
            << "photons off sensor  " << t.out_of_sensor_photons << '\n'
            << "dark counts         " << t.dark_counts << '\n'
            << "bunched fraction    " << (t.generated_pairs ? double(t.bunched_pairs) / double(t.generated_pairs) : 0.0)
            << '\n'
            << "events written      " << res.stream.events.size() << " -> " << path.string() << '\n';
  return kOk;
}

int cmd_scan(const std::string& config, const std::string& delays_text, const std::string& out) {
  const RunConfig base = load_or_default(config);
  const auto delays = parse_delays(delays_text);
  const fs::path dir(out);
  fs::create_directories(dir);
  const auto manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) throw IoError("refusing to overwrite " + manifest_path.string());

  json entries = json::array();
  for (std::size_t i = 0; i < delays.size(); ++i) {
    RunConfig cfg = base;
    cfg.interferometer.delay_um = delays[i];
    cfg.source.seed = mix_seed(base.source.seed, i);
    char name[32];
    std::snprintf(name, sizeof name, "delay-%03zu.evt", i);
    const auto res = run_simulation(cfg, dir / name);
    entries.push_back({{"delay_um", delays[i]},
                       {"file", name},
                       {"seed", cfg.source.seed},
                       {"config_digest", to_hex(config_digest(cfg))},
                       {"records", res.stream.events.size()},
                       {"truth", truth_json(res.truth)}});
    std::cout << "delay " << delays[i] << " um: " << res.stream.events.size() << " events -> " << name << '\n';
  }
  write_json(manifest_path, {{"config_digest", to_hex(config_digest(base))}, {"entries", entries}});
  std::cout << "manifest -> " << manifest_path.string() << '\n';
  return kOk;
}

struct ManifestEntry {
  double delay_um;
  fs::path file;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  try {
    const json j = json::parse(in);
    for (const auto& e : j.at("entries")) {
      fs::path f = e.at("file").get<std::string>();
      if (f.is_relative()) f = path.parent_path() / f;
      out.push_back({e.at("delay_um").get<double>(), f});
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed manifest (" + e.what() + ")");
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.delay_um < b.delay_um; });
  return out;
}

BandDirection band_direction(ImagingPlane plane) {
  // Positions are correlated in the near field, momenta anti-correlated in the far field.
  return plane == ImagingPlane::near_field ? BandDirection::difference : BandDirection::sum;
}

double roi_count(const EventStream& s, const RoiSpec& a, const RoiSpec& b, const AnalysisConfig& an,
                 const SpotCenters& centers, BandDirection dir, std::int64_t shift) {
  if (an.band_width) return double(count_band_coincidences(s, a, b, an.window_ticks, shift, centers, *an.band_width, dir));
  return double(count_coincidences(s, a, b, an.window_ticks, shift));
}

json analysis_json(const RunConfig& cfg) {
  const auto& a = cfg.analysis;
  json j{{"window_ticks", a.window_ticks},
         {"roi_radius", a.roi_radius},
         {"roi_radii", a.roi_radii},
         {"dip_spots", a.dip_spots},
         {"peak_spots", a.peak_spots},
         {"jpd_fit_radius", a.jpd_fit_radius},
         {"mode_roi_radius", a.mode_roi_radius}};
  j["band_width"] = a.band_width ? json(*a.band_width) : json(nullptr);
  j["accidental_offset"] = a.accidental_offset ? json(*a.accidental_offset) : json(nullptr);
  return j;
}

json analyze_manifest(const RunConfig& cfg, const SpotCenters& centers, const fs::path& manifest, const fs::path& out,
                      json& inputs) {
  const auto& an = cfg.analysis;
  const auto entries = read_manifest(manifest);
  const auto dir = band_direction(cfg.camera.plane);
  const std::size_t nr = an.roi_radii.size();
  std::vector<std::vector<double>> dip(nr), peak(nr);
  std::vector<double> delays;

  for (const auto& e : entries) {
    EventFileHeader h;
    const auto s = read_stream(e.file, &h);
    inputs.push_back({{"file", e.file.string()}, {"delay_um", e.delay_um}, {"config_digest", to_hex(h.config_digest)}});
    delays.push_back(e.delay_um);
    for (std::size_t r = 0; r < nr; ++r) {
      const auto count = [&](const std::array<SpotId, 2>& spots) {
        const RoiSpec a{centers[spots[0] - 1], an.roi_radii[r], spots[0]};
        const RoiSpec b{centers[spots[1] - 1], an.roi_radii[r], spots[1]};
        double n = roi_count(s, a, b, an, centers, dir, 0);
        if (an.accidental_offset) n -= roi_count(s, a, b, an, centers, dir, static_cast<std::int64_t>(*an.accidental_offset));
        return n;
      };
      dip[r].push_back(count(an.dip_spots));
      peak[r].push_back(count(an.peak_spots));
    }
  }

  json scans = json::array();
  for (std::size_t r = 0; r < nr; ++r) {
    const auto d = fit_hom_counts(delays, dip[r]);
    const auto p = fit_hom_counts(delays, peak[r]);
    scans.push_back({{"roi_radius", an.roi_radii[r]}, {"dip", to_json(d)}, {"peak", to_json(p)}});
    if (an.svg) {
      const auto tag = "r" + std::to_string(static_cast<int>(std::lround(an.roi_radii[r])));
      write_text_file(next_free_path(out, "scan-dip-" + tag, ".svg"), svg::scan_plot(d, "dip, ROI " + tag));
      write_text_file(next_free_path(out, "scan-peak-" + tag, ".svg"), svg::scan_plot(p, "peak, ROI " + tag));
    }
  }
  return {{"kind", "hom_scan"}, {"scans", scans}};
}

struct JpdResult {
  Gaussian1DFit fit;
  std::uint64_t pairs{0};
  std::uint64_t band_pairs{0};
  Histogram2D hist{25};
};

/// Pools coincidences of every spot pair and fits the correlated projection
/// (difference in the near field, sum in the far field).
JpdResult jpd_width(const EventStream& s, ImagingPlane plane, const RunConfig& cfg, const SpotCenters& centers) {
  const auto& an = cfg.analysis;
  std::vector<CoincidencePair> pooled;
  for (SpotId i = 1; i <= 4; ++i)
    for (SpotId j = static_cast<SpotId>(i + 1); j <= 4; ++j) {
      const auto p = find_coincidences(s, {centers[i - 1], an.mode_roi_radius, i}, {centers[j - 1], an.mode_roi_radius, j},
                                       an.window_ticks);
      pooled.insert(pooled.end(), p.begin(), p.end());
    }
  const int half = std::max(an.jpd_fit_radius, 2 * static_cast<int>(std::ceil(an.mode_roi_radius)) + 2);
  const auto proj = jpd_projections(pooled, centers, half);
  const auto& hist = plane == ImagingPlane::near_field ? proj.diff_hist : proj.sum_hist;
  JpdResult r;
  r.pairs = proj.total_pairs;
  if (an.band_width) r.band_pairs = band_filter(pooled, centers, *an.band_width, band_direction(plane)).size();
  r.hist = Histogram2D(an.jpd_fit_radius);
  for (int y = -an.jpd_fit_radius; y <= an.jpd_fit_radius; ++y)
    for (int x = -an.jpd_fit_radius; x <= an.jpd_fit_radius; ++x)
      if (const auto n = hist.at(x, y)) r.hist.add(x, y, n);
  if (r.pairs >= 5) {
    r.fit = fit_radial_gaussian(hist, an.jpd_fit_radius);
  }
  return r;
}

json jpd_json(const JpdResult& r, ImagingPlane plane) {
  json j{{"imaging_plane", plane_name(plane)},
         {"projection", plane == ImagingPlane::near_field ? "difference" : "sum"},
         {"pairs", r.pairs},
         {"fit", to_json(r.fit)},
         {"converged", r.fit.converged}};
  j["sigma_pixels"] = r.fit.converged ? json(std::abs(r.fit.c)) : json(nullptr);
  return j;
}

json analyze_events(const RunConfig& cfg, const SpotCenters& centers, const fs::path& events,
                    const std::string& far_events, const fs::path& out, json& inputs) {
  const auto& an = cfg.analysis;
  const ImagingPlane plane = cfg.camera.plane;
  if (!far_events.empty() && plane != ImagingPlane::near_field)
    throw ConfigError("--far-events needs camera.imaging_plane = \"near_field\" for --events");

  EventFileHeader h;
  const auto s = read_stream(events, &h);
  inputs.push_back({{"file", events.string()}, {"imaging_plane", plane_name(plane)}, {"config_digest", to_hex(h.config_digest)}});
  const auto main = jpd_width(s, plane, cfg, centers);
  json report{{"kind", "jpd"}, {"jpd", json::array({jpd_json(main, plane)})}};
  if (an.band_width) report["band_filter"] = {{"band_width", *an.band_width}, {"pairs", main.band_pairs}};
  if (an.svg)
    write_text_file(next_free_path(out, std::string("jpd-") + plane_name(plane), ".svg"),
                    svg::heatmap(main.hist, an.jpd_fit_radius, std::string("JPD ") + plane_name(plane)));

  if (plane == ImagingPlane::near_field && main.fit.converged) {
    const RoiSpec roi{centers[0], an.mode_roi_radius, 1};
    report["effective_modes"] = to_json(effective_modes(intensity_image(s), roi, std::abs(main.fit.c)));
  }

  if (!far_events.empty()) {
    EventFileHeader fh;
    const auto far = read_stream(far_events, &fh);
    inputs.push_back({{"file", far_events}, {"imaging_plane", "far_field"}, {"config_digest", to_hex(fh.config_digest)}});
    const auto fr = jpd_width(far, ImagingPlane::far_field, cfg, centers);
    report["jpd"].push_back(jpd_json(fr, ImagingPlane::far_field));
    if (an.svg)
      write_text_file(next_free_path(out, "jpd-far_field", ".svg"), svg::heatmap(fr.hist, an.jpd_fit_radius, "JPD far_field"));
    if (!main.fit.converged || !fr.fit.converged)
      throw AnalysisError("Schmidt estimate needs converged near- and far-field width fits");
    const auto cal = analysis_calibration(cfg);
    const double k = estimate_schmidt_from_pixels(std::abs(main.fit.c), std::abs(fr.fit.c), cal);
    report["schmidt"] = {{"k_estimate", k},
                         {"sigma_r_um", std::abs(main.fit.c) * *cal.um_per_pixel},
                         {"sigma_k_inv_um", std::abs(fr.fit.c) * *cal.inv_um_per_pixel},
                         {"um_per_pixel", *cal.um_per_pixel},
                         {"inv_um_per_pixel", *cal.inv_um_per_pixel}};
  }
  return report;
}

int cmd_analyze(const std::string& config, const std::string& manifest, const std::string& events,
                const std::string& far_events, const std::string& out, const AnalysisOverrides& overrides) {
  RunConfig cfg = load_or_default(config);
  apply(overrides, cfg.analysis);
  const SpotCenters centers = analysis_spot_centers(cfg);
  const fs::path dir(out);
  fs::create_directories(dir);

  json inputs = json::array();
  json body = manifest.empty() ? analyze_events(cfg, centers, events, far_events, dir, inputs)
                               : analyze_manifest(cfg, centers, manifest, dir, inputs);
  json report{{"inputs", inputs},
              {"analysis", analysis_json(cfg)},
              {"coincidence_window_ticks", cfg.analysis.window_ticks},
              {"config_digest", to_hex(config_digest(cfg))}};
  report.update(body);
  const auto path = next_free_path(dir, "report", ".json");
  write_text_file(path, report.dump(2) + "\n");
  std::cout << "report -> " << path.string() << '\n';
  if (body["kind"] == "hom_scan")
    for (const auto& s : body["scans"]) {
      std::cout << "ROI " << s["roi_radius"] << ": dip visibility " << s["dip"]["visibility"] << ", peak visibility "
                << s["peak"]["visibility"] << '\n';
    }
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-based Hong-Ou-Mandel simulation and analysis"};
  app.require_subcommand(1);

  std::string config, out, delays, manifest, events, far_events;
  AnalysisOverrides ov;

  auto* sim = app.add_subcommand("simulate", "Simulate one event file");
  sim->add_option("--config", config, "Run configuration (JSON)")->required();
  sim->add_option("--out", out, "Output event file")->required();

  auto* scan = app.add_subcommand("scan", "Simulate one event file per delay plus a manifest");
  scan->add_option("--config", config, "Run configuration (JSON)")->required();
  scan->add_option("--delays", delays, "Delays in um: lo:hi:step or a comma list")->required();
  scan->add_option("--out", out, "Output directory")->required();

  auto* ana = app.add_subcommand("analyze", "Analyze a scan manifest or an event file");
  ana->add_option("--config", config, "Run configuration (JSON)");
  auto* m_opt = ana->add_option("--manifest", manifest, "Scan manifest from 'scan'");
  auto* e_opt = ana->add_option("--events", events, "Event file for JPD analysis");
  ana->add_option("--far-events", far_events, "Far-field event file for the Schmidt estimate")->needs(e_opt);
  m_opt->excludes(e_opt);
  ana->add_option("--out", out, "Report directory")->required();
  ana->add_option("--roi-radius", ov.roi_radius, "ROI radius in pixels (replaces the radius list)");
  ana->add_option("--window-ticks", ov.window_ticks, "Coincidence window in ticks");
  ana->add_option("--band-width", ov.band_width, "Correlation band half-width in pixels");
  ana->add_option("--accidental-offset", ov.accidental_offset, "Accidental subtraction offset in ticks");
  ana->add_flag("--svg", ov.svg, "Also write SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  try {
    if (*sim) return cmd_simulate(config, out);
    if (*scan) return cmd_scan(config, delays, out);
    if (manifest.empty() && events.empty()) throw ConfigError("analyze needs --manifest or --events");
    return cmd_analyze(config, manifest, events, far_events, out, ov);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const FormatError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const TruncationError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const BoundsError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const OrderError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << '\n';
    return kAnalysisFailure;
  } catch (const DomainError& e) {
    std::cerr << "analysis error: " << e.what() << '\n';
    return kAnalysisFailure;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}
