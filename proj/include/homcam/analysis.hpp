#pragma once

// HOM delay scans, visibility, JPD projections, correlation-band selection,
// effective mode counting and Schmidt-number estimation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "homcam/camera.hpp"
#include "homcam/coincidence.hpp"
#include "homcam/error.hpp"
#include "homcam/fit.hpp"
#include "homcam/physics.hpp"

namespace homcam {

// ---------------------------------------------------------------------------
// HOM scans

struct HomScanResult {
  std::vector<double> delays;             ///< Δl, µm, strictly increasing
  std::vector<double> counts;             ///< raw (or accidental-subtracted) coincidences per delay
  std::vector<double> normalized_counts;  ///< counts / fitted baseline d
  Gaussian1DFit fit;
  std::optional<double> visibility;       ///< |a|/d; absent unless the fit is converged and significant
  double visibility_error{0.0};
};

struct ScanOptions {
  std::uint64_t window_ticks{2};
  std::optional<std::uint64_t> accidental_offset;  ///< subtract shifted-window coincidences when set
  double significance{3.0};                        ///< minimum |a|/σ_a for a reported visibility
};

/// Fits a Gaussian dip/peak to per-delay counts. The visibility is reported
/// only for a converged fit whose centre lies in the scanned range, whose
/// width is between half the smallest delay step and the full span, and whose
/// amplitude is at least `significance` standard errors from zero.
inline HomScanResult fit_hom_counts(std::span<const double> delays, std::span<const double> counts,
                                    double significance = 3.0) {
  if (delays.size() != counts.size()) throw DomainError("hom scan: delays and counts differ in length");
  if (delays.size() < 5) throw DomainError("hom scan: at least 5 delay points required");
  for (std::size_t i = 1; i < delays.size(); ++i)
    if (!(delays[i] > delays[i - 1])) throw DomainError("hom scan: delays must be strictly increasing");

  HomScanResult r;
  r.delays.assign(delays.begin(), delays.end());
  r.counts.assign(counts.begin(), counts.end());
  r.fit = fit_gaussian_1d(delays, counts);

  double min_step = INFINITY;
  for (std::size_t i = 1; i < delays.size(); ++i) min_step = std::min(min_step, delays[i] - delays[i - 1]);
  const double span = delays.back() - delays.front();
  const auto& f = r.fit;
  const bool plausible = f.converged && f.d > 0.0 && f.b >= delays.front() && f.b <= delays.back() &&
                         f.c >= 0.5 * min_step && f.c <= span && std::abs(f.a) >= significance * f.error(0);

  double reference = f.d;
  if (!(f.converged && f.d > 0.0)) {
    reference = 0.0;
    for (double c : counts) reference += c;
    reference /= static_cast<double>(counts.size());
  }
  r.normalized_counts.reserve(counts.size());
  for (double c : counts) r.normalized_counts.push_back(reference > 0.0 ? c / reference : 0.0);

  if (plausible) {
    r.visibility = std::abs(f.a) / f.d;
    // V = |a|/d: ∂V/∂a = sign(a)/d, ∂V/∂d = −|a|/d².
    const double ga = (f.a < 0.0 ? -1.0 : 1.0) / f.d;
    const double gd = -std::abs(f.a) / (f.d * f.d);
    const double var = ga * ga * f.covariance[0][0] + 2.0 * ga * gd * f.covariance[0][3] + gd * gd * f.covariance[3][3];
    r.visibility_error = std::sqrt(std::max(0.0, var));
  }
  return r;
}

/// Coincidences between two ROIs for each delay's stream, then fit.
inline HomScanResult hom_scan(std::span<const double> delays, std::span<const EventStream> streams,
                              const RoiSpec& roi_a, const RoiSpec& roi_b, const ScanOptions& opt = {}) {
  if (delays.size() != streams.size()) throw DomainError("hom scan: one stream per delay required");
  std::vector<double> counts;
  counts.reserve(streams.size());
  for (const auto& s : streams) {
    double n = static_cast<double>(count_coincidences(s, roi_a, roi_b, opt.window_ticks));
    if (opt.accidental_offset) {
      if (*opt.accidental_offset <= opt.window_ticks)
        throw DomainError("accidental offset must exceed the coincidence window");
      n -= static_cast<double>(
          count_coincidences(s, roi_a, roi_b, opt.window_ticks, static_cast<std::int64_t>(*opt.accidental_offset)));
    }
    counts.push_back(n);
  }
  return fit_hom_counts(delays, counts, opt.significance);
}

// ---------------------------------------------------------------------------
// JPD projections

/// Dense square histogram over integer coordinates in [−half, half]².
class Histogram2D {
public:
  explicit Histogram2D(int half_extent = 510)
      : half_(half_extent), side_(2 * half_extent + 1), bins_(static_cast<std::size_t>(side_) * side_, 0) {}

  int half_extent() const noexcept { return half_; }

  bool in_range(int x, int y) const noexcept { return std::abs(x) <= half_ && std::abs(y) <= half_; }

  void add(int x, int y, std::uint64_t n = 1) {
    if (!in_range(x, y)) throw DomainError("histogram coordinate outside extent");
    bins_[index(x, y)] += n;
    total_ += n;
  }

  std::uint64_t at(int x, int y) const noexcept { return in_range(x, y) ? bins_[index(x, y)] : 0; }
  std::uint64_t total() const noexcept { return total_; }

private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y + half_) * static_cast<std::size_t>(side_) + static_cast<std::size_t>(x + half_);
  }

  int half_;
  int side_;
  std::vector<std::uint64_t> bins_;
  std::uint64_t total_{0};
};

struct JpdProjections {
  Histogram2D diff_hist;  ///< (x₁−x₂, y₁−y₂) about the spot centres
  Histogram2D sum_hist;   ///< (x₁+x₂, y₁+y₂) about the spot centres
  std::uint64_t total_pairs{0};
};

/// Spot-centred coordinates of a pair: (event_a − centre(label_a), event_b − centre(label_b)).
struct CenteredPair {
  int ax, ay, bx, by;
};

inline CenteredPair centered(const CoincidencePair& p, const SpotCenters& centers) {
  if (!valid_spot(p.label_a) || !valid_spot(p.label_b)) throw DomainError("pair label is not a spot id");
  const auto& ca = centers[p.label_a - 1];
  const auto& cb = centers[p.label_b - 1];
  return {p.event_a.x - ca.x, p.event_a.y - ca.y, p.event_b.x - cb.x, p.event_b.y - cb.y};
}

inline JpdProjections jpd_projections(std::span<const CoincidencePair> pairs, const SpotCenters& centers,
                                      int half_extent = 510) {
  JpdProjections j{Histogram2D(half_extent), Histogram2D(half_extent), 0};
  for (const auto& p : pairs) {
    const auto c = centered(p, centers);
    j.diff_hist.add(c.ax - c.bx, c.ay - c.by);
    j.sum_hist.add(c.ax + c.bx, c.ay + c.by);
    ++j.total_pairs;
  }
  return j;
}

/// Isotropic Gaussian width of a histogram peak at the origin. Bins are
/// grouped by exact radius (mean count per bin), mirrored to ±ρ and fitted
/// with the 1-D engine; c is the per-axis σ in pixels.
inline Gaussian1DFit fit_radial_gaussian(const Histogram2D& h, int max_radius = 25) {
  const int r = std::min(max_radius, h.half_extent());
  std::map<int, std::pair<double, int>> shells;  // r² → (sum, bins)
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x) {
      const int r2 = x * x + y * y;
      if (r2 > r * r) continue;
      auto& s = shells[r2];
      s.first += static_cast<double>(h.at(x, y));
      s.second += 1;
    }
  std::vector<double> xs, ys;
  for (const auto& [r2, s] : shells) {
    const double rho = std::sqrt(static_cast<double>(r2));
    const double mean = s.first / s.second;
    if (r2 > 0) {
      xs.push_back(-rho);
      ys.push_back(mean);
    }
    xs.push_back(rho);
    ys.push_back(mean);
  }
  return fit_gaussian_1d(xs, ys);
}

// ---------------------------------------------------------------------------
// Correlation-band selection

enum class BandDirection { difference, sum };

/// Keeps pairs whose spot-centred difference (or sum) coordinate lies within
/// `band_width` of zero on both axes.
inline std::vector<CoincidencePair> band_filter(std::span<const CoincidencePair> pairs, const SpotCenters& centers,
                                                int band_width, BandDirection direction) {
  if (band_width < 1) throw DomainError("band_width must be >= 1");
  std::vector<CoincidencePair> out;
  for (const auto& p : pairs) {
    const auto c = centered(p, centers);
    const int u = direction == BandDirection::difference ? c.ax - c.bx : c.ax + c.bx;
    const int v = direction == BandDirection::difference ? c.ay - c.by : c.ay + c.by;
    if (std::abs(u) <= band_width && std::abs(v) <= band_width) out.push_back(p);
  }
  return out;
}

/// Coincidence count restricted to the correlation band, without
/// materializing pairs. B timestamps are read as toa + shift_b.
inline std::uint64_t count_band_coincidences(const EventStream& s, const RoiSpec& roi_a, const RoiSpec& roi_b,
                                             std::uint64_t window, std::int64_t shift_b, const SpotCenters& centers,
                                             int band_width, BandDirection direction) {
  if (band_width < 1) throw DomainError("band_width must be >= 1");
  if (!valid_spot(roi_a.label) || !valid_spot(roi_b.label)) throw DomainError("ROI label is not a spot id");
  detail::require_ordered(s.events);
  const RoiMask ma(roi_a, s.width, s.height);
  const RoiMask mb(roi_b, s.width, s.height);
  const auto a = detail::members(s.events, ma, 0, s.events.size());
  const auto b = detail::members(s.events, mb, 0, s.events.size());
  const auto& ca = centers[roi_a.label - 1];
  const auto& cb = centers[roi_b.label - 1];
  const int sign = direction == BandDirection::difference ? -1 : 1;
  std::uint64_t n = 0;
  detail::sweep(s.events, a, b, window, shift_b, [&](std::uint64_t ia, std::uint64_t ib, std::int64_t) {
    const auto& ea = s.events[ia];
    const auto& eb = s.events[ib];
    const int u = (ea.x - ca.x) + sign * (eb.x - cb.x);
    const int v = (ea.y - ca.y) + sign * (eb.y - cb.y);
    if (std::abs(u) <= band_width && std::abs(v) <= band_width) ++n;
  });
  return n;
}

// ---------------------------------------------------------------------------
// Effective spatial modes

struct IntensityImage {
  int width{256};
  int height{256};
  std::vector<double> pixels = std::vector<double>(static_cast<std::size_t>(width) * height, 0.0);

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Per-pixel photon counts of a stream (continuous-exposure image).
inline IntensityImage intensity_image(const EventStream& s) {
  IntensityImage img{s.width, s.height};
  for (const auto& e : s.events) img.at(e.x, e.y) += 1.0;
  return img;
}

struct EffectiveModeReport {
  double n_s{0.0};
  double sigma_pixels{0.0};
  double intensity_sum_ratio{0.0};  ///< Σᵢ Iᵢ / I_max over the ROI
  RoiSpec roi;
  std::string m_interpretation{
      "n_s estimates the number M of spatial modes in the multi-mode two-photon N00N state"};
};

/// N_s = Σᵢ Iᵢ / (4 σ² I_max) over the pixels of `roi`.
inline EffectiveModeReport effective_modes(const IntensityImage& image, const RoiSpec& roi, double sigma_pixels) {
  if (!(sigma_pixels > 0.0)) throw DomainError("effective_modes: sigma must be positive");
  const RoiMask mask(roi, image.width, image.height);
  double sum = 0.0;
  double peak = 0.0;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      if (!mask.contains(x, y)) continue;
      const double v = image.at(x, y);
      if (v < 0.0) throw DomainError("effective_modes: negative intensity");
      sum += v;
      peak = std::max(peak, v);
    }
  if (!(peak > 0.0)) throw AnalysisError("effective_modes: image is zero inside the ROI");
  EffectiveModeReport rep;
  rep.sigma_pixels = sigma_pixels;
  rep.intensity_sum_ratio = sum / peak;
  rep.n_s = rep.intensity_sum_ratio / (4.0 * sigma_pixels * sigma_pixels);
  rep.roi = roi;
  return rep;
}

// ---------------------------------------------------------------------------
// Schmidt number from fitted widths

/// Pixel → physical conversion for the two imaging planes.
struct Calibration {
  std::optional<double> um_per_pixel;      ///< near field
  std::optional<double> inv_um_per_pixel;  ///< far field
};

inline double estimate_schmidt(double diff_sigma_um, double sum_sigma_inv_um) {
  return schmidt_number(make_widths(diff_sigma_um, sum_sigma_inv_um));
}

inline double estimate_schmidt_from_pixels(double diff_sigma_px, double sum_sigma_px, const Calibration& cal) {
  if (!cal.um_per_pixel) throw AnalysisError("missing calibration key analysis.calibration.um_per_pixel");
  if (!cal.inv_um_per_pixel) throw AnalysisError("missing calibration key analysis.calibration.inv_um_per_pixel");
  return estimate_schmidt(diff_sigma_px * *cal.um_per_pixel, sum_sigma_px * *cal.inv_um_per_pixel);
}

} // namespace homcam
