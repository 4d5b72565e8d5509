#pragma once

// Machine-readable reports (JSON) and static SVG plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "homcam/analysis.hpp"
#include "homcam/error.hpp"

namespace homcam {

inline nlohmann::json to_json(const Gaussian1DFit& f) {
  return {{"a", f.a},
          {"b", f.b},
          {"c", f.c},
          {"d", f.d},
          {"a_err", f.error(0)},
          {"b_err", f.error(1)},
          {"c_err", f.error(2)},
          {"d_err", f.error(3)},
          {"residual_sse", f.residual_sse},
          {"converged", f.converged}};
}

inline nlohmann::json to_json(const HomScanResult& r) {
  nlohmann::json j{{"delays_um", r.delays},
                   {"counts", r.counts},
                   {"normalized_counts", r.normalized_counts},
                   {"fit", to_json(r.fit)},
                   {"converged", r.visibility.has_value()}};
  if (r.visibility) {
    j["visibility"] = *r.visibility;
    j["visibility_error"] = r.visibility_error;
  } else {
    j["visibility"] = nullptr;
  }
  return j;
}

inline nlohmann::json to_json(const EffectiveModeReport& m) {
  return {{"n_s", m.n_s},
          {"sigma_pixels", m.sigma_pixels},
          {"intensity_sum_ratio", m.intensity_sum_ratio},
          {"roi", {{"center", {m.roi.center.x, m.roi.center.y}}, {"radius", m.roi.radius}, {"label", m.roi.label}}},
          {"interpretation", m.m_interpretation}};
}

/// First "<stem>-NNNN<ext>" in `dir` that does not exist yet. Reports are
/// never overwritten.
inline std::filesystem::path next_free_path(const std::filesystem::path& dir, const std::string& stem,
                                            const std::string& ext) {
  for (int i = 1; i < 100000; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "-%04d", i);
    auto p = dir / (stem + name + ext);
    if (!std::filesystem::exists(p)) return p;
  }
  throw IoError("no free report name in " + dir.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (std::filesystem::exists(path)) throw IoError("refusing to overwrite " + path.string());
  std::ofstream out(path);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

namespace svg {

/// Scan points with the fitted curve.
inline std::string scan_plot(const HomScanResult& r, const std::string& title) {
  const double w = 480, h = 320, m = 48;
  const double x0 = r.delays.front(), x1 = r.delays.back();
  double y1 = 0.0;
  for (double v : r.normalized_counts) y1 = std::max(y1, v);
  y1 = std::max(1.2, y1 * 1.1);
  const auto sx = [&](double x) { return m + (x - x0) / (x1 - x0) * (w - 2 * m); };
  const auto sy = [&](double y) { return h - m - y / y1 * (h - 2 * m); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n"
    << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"12\">delay (um)</text>\n";
  for (std::size_t i = 0; i < r.delays.size(); ++i)
    o << "<circle cx=\"" << sx(r.delays[i]) << "\" cy=\"" << sy(r.normalized_counts[i]) << "\" r=\"3\" fill=\"steelblue\"/>\n";
  if (r.fit.converged && r.fit.d > 0.0) {
    o << "<polyline fill=\"none\" stroke=\"firebrick\" points=\"";
    for (int i = 0; i <= 200; ++i) {
      const double x = x0 + (x1 - x0) * i / 200.0;
      o << sx(x) << ',' << sy(r.fit(x) / r.fit.d) << ' ';
    }
    o << "\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Grey-scale heat map of the central (2·half+1)² bins of a histogram.
inline std::string heatmap(const Histogram2D& hist, int half, const std::string& title) {
  const int cell = 6;
  const int side = 2 * half + 1;
  std::uint64_t peak = 1;
  for (int y = -half; y <= half; ++y)
    for (int x = -half; x <= half; ++x) peak = std::max(peak, hist.at(x, y));
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side * cell << "\" height=\"" << side * cell + 24
    << "\">\n<text x=\"4\" y=\"16\" font-size=\"12\">" << title << "</text>\n";
  for (int y = -half; y <= half; ++y)
    for (int x = -half; x <= half; ++x) {
      const int g = 255 - static_cast<int>(255.0 * static_cast<double>(hist.at(x, y)) / static_cast<double>(peak));
      o << "<rect x=\"" << (x + half) * cell << "\" y=\"" << 24 + (y + half) * cell << "\" width=\"" << cell
        << "\" height=\"" << cell << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
    }
  o << "</svg>\n";
  return o.str();
}

} // namespace svg
} // namespace homcam
