#pragma once

// Time-tagging camera model: imaging onto four spots, detection efficiency,
// timing jitter and quantization, dark counts, and the full pair pipeline.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "homcam/error.hpp"
#include "homcam/events.hpp"
#include "homcam/interferometer.hpp"
#include "homcam/physics.hpp"
#include "homcam/rng.hpp"

namespace homcam {

struct PixelCoord {
  int x{0};
  int y{0};
  friend constexpr bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

using SpotCenters = std::array<PixelCoord, 4>;

inline constexpr SpotCenters default_spot_centers{{{64, 64}, {192, 64}, {64, 192}, {192, 192}}};

struct CameraConfig {
  int width{256};
  int height{256};
  double pixel_pitch_um{55.0};
  double tick_ns{6.0};
  double jitter_ns{2.0};
  double efficiency{0.3};
  double dark_rate{10.0};  ///< counts per pixel per second
  ImagingPlane plane{ImagingPlane::near_field};
  double magnification{53.68};  ///< near field: sensor µm per crystal µm
  double focal_scale{10750.0};  ///< far field: sensor µm per µm⁻¹
  SpotCenters spot_centers{default_spot_centers};

  const PixelCoord& center(SpotId s) const { return spot_centers.at(static_cast<std::size_t>(s - 1)); }

  /// Imaged-coordinate units per pixel (µm/px near field, µm⁻¹/px far field).
  double coordinate_per_pixel() const noexcept {
    return pixel_pitch_um / (plane == ImagingPlane::near_field ? magnification : focal_scale);
  }
};

inline void validate(const CameraConfig& cfg) {
  if (cfg.width < 1 || cfg.width > 65535 || cfg.height < 1 || cfg.height > 65535)
    throw ConfigError("camera sensor dimensions must lie in [1, 65535]");
  if (!(cfg.pixel_pitch_um > 0.0)) throw ConfigError("camera.pixel_pitch_um must be > 0");
  if (!(cfg.tick_ns > 0.0)) throw ConfigError("camera.tick_ns must be > 0");
  if (!(cfg.jitter_ns >= 0.0)) throw ConfigError("camera.jitter_ns must be >= 0");
  if (!(cfg.efficiency >= 0.0 && cfg.efficiency <= 1.0)) throw ConfigError("camera.efficiency must lie in [0, 1]");
  if (!(cfg.dark_rate >= 0.0)) throw ConfigError("camera.dark_rate must be >= 0");
  if (!(cfg.magnification > 0.0)) throw ConfigError("camera.magnification must be > 0");
  if (!(cfg.focal_scale > 0.0)) throw ConfigError("camera.focal_scale must be > 0");
  for (std::size_t i = 0; i < cfg.spot_centers.size(); ++i) {
    const auto& c = cfg.spot_centers[i];
    if (c.x < 0 || c.y < 0 || c.x >= cfg.width || c.y >= cfg.height)
      throw ConfigError("camera.spot_centers[" + std::to_string(i) + "] lies outside the sensor");
  }
}

/// Pixel (i, j) covers coordinates [i − ½, i + ½) about the spot centre, so the
/// origin maps onto the centre pixel and the mapping has no half-pixel bias.
inline std::optional<PixelCoord> map_to_pixel(const Vec2& coord, const CameraConfig& cfg, SpotId spot) {
  const double scale = 1.0 / cfg.coordinate_per_pixel();
  const auto& c = cfg.center(spot);
  const double px = std::floor(c.x + coord.x * scale + 0.5);
  const double py = std::floor(c.y + coord.y * scale + 0.5);
  if (px < 0.0 || py < 0.0 || px >= cfg.width || py >= cfg.height) return std::nullopt;
  return PixelCoord{static_cast<int>(px), static_cast<int>(py)};
}

inline std::uint64_t quantize_time(double t_ns, double tick_ns) noexcept {
  if (!(t_ns > 0.0)) return 0;
  return static_cast<std::uint64_t>(std::floor(t_ns / tick_ns));
}

/// Returns the quantized time of arrival, or nullopt if the photon is absorbed.
inline std::optional<std::uint64_t> detect(double event_time_ns, const CameraConfig& cfg, Rng& rng) {
  if (!(uniform01(rng) < cfg.efficiency)) return std::nullopt;
  double t = event_time_ns;
  if (cfg.jitter_ns > 0.0) t += cfg.jitter_ns * standard_normal(rng);
  return quantize_time(t, cfg.tick_ns);
}

/// Dark counts over [start, start + duration), uniform over the sensor. The
/// sensor-wide process is Poisson with rate dark_rate·pixels, so arrival
/// times come out ordered from exponential gaps.
inline std::vector<PhotonEvent> generate_dark_counts(double duration_s, const CameraConfig& cfg, Rng& rng,
                                                     double start_ns = 0.0) {
  std::vector<PhotonEvent> out;
  if (!(duration_s > 0.0) || !(cfg.dark_rate > 0.0)) return out;
  const double rate_per_ns = cfg.dark_rate * cfg.width * cfg.height * 1.0e-9;
  const double end_ns = start_ns + duration_s * 1.0e9;
  out.reserve(static_cast<std::size_t>(rate_per_ns * duration_s * 1.0e9 * 1.01) + 16);
  std::exponential_distribution<double> gap(rate_per_ns);
  std::uniform_int_distribution<int> px(0, cfg.width - 1);
  std::uniform_int_distribution<int> py(0, cfg.height - 1);
  for (double t = start_ns + gap(rng); t < end_ns; t += gap(rng)) {
    PhotonEvent e;
    e.x = static_cast<std::uint16_t>(px(rng));
    e.y = static_cast<std::uint16_t>(py(rng));
    e.toa = quantize_time(t, cfg.tick_ns);
    out.push_back(e);
  }
  // Times are ordered already; only runs of equal ticks need the canonical tie order.
  for (auto first = out.begin(); first != out.end();) {
    auto last = std::find_if(first, out.end(), [t = first->toa](const PhotonEvent& e) { return e.toa != t; });
    if (last - first > 1) std::sort(first, last, event_before);
    first = last;
  }
  return out;
}

struct TruthSummary {
  std::uint64_t generated_pairs{0};
  std::uint64_t detected_photons{0};  ///< pair photons only, dark counts excluded
  std::uint64_t absorbed_photons{0};
  std::uint64_t out_of_sensor_photons{0};
  std::uint64_t dropped_photons{0};   ///< pair photons removed by SimulationOptions::drop_hook
  std::uint64_t dark_counts{0};
  std::uint64_t bunched_pairs{0};
  std::array<std::uint64_t, 4> detected_per_spot{};
  double indistinguishability_sum{0.0};

  double mean_indistinguishability() const noexcept {
    return generated_pairs ? indistinguishability_sum / static_cast<double>(generated_pairs) : 0.0;
  }

  TruthSummary& operator+=(const TruthSummary& o) noexcept {
    generated_pairs += o.generated_pairs;
    detected_photons += o.detected_photons;
    absorbed_photons += o.absorbed_photons;
    out_of_sensor_photons += o.out_of_sensor_photons;
    dropped_photons += o.dropped_photons;
    dark_counts += o.dark_counts;
    bunched_pairs += o.bunched_pairs;
    for (std::size_t i = 0; i < 4; ++i) detected_per_spot[i] += o.detected_per_spot[i];
    indistinguishability_sum += o.indistinguishability_sum;
    return *this;
  }
};

struct SimulationOptions {
  unsigned threads{0};  ///< 0 = hardware concurrency
  /// Applied to the merged, time-ordered stream; returning true drops the
  /// event (e.g. a dead-time model). Called sequentially.
  std::function<bool(const PhotonEvent&)> drop_hook;
};

struct SimulationResult {
  EventStream stream;
  TruthSummary truth;
};

namespace detail {

/// Length of the independently seeded generation intervals. Depends only on
/// the configuration so the output is identical for any thread count.
inline double chunk_length_ns(const SourceConfig& src) {
  return std::max(1.0e6, 131072.0 / src.pair_rate * 1.0e9);
}

struct ChunkOutput {
  std::vector<PhotonEvent> events;
  TruthSummary truth;
};

inline ChunkOutput simulate_chunk(const SourceConfig& src, const CorrelationWidths& widths,
                                  const InterferometerConfig& icfg, const CameraConfig& cam,
                                  double begin_ns, double end_ns, std::uint64_t chunk_index) {
  ChunkOutput out;
  Rng rng = make_rng(src.seed, chunk_index);
  PairSource source(src, widths, begin_ns);
  const bool near = cam.plane == ImagingPlane::near_field;

  const auto emit = [&](const Vec2& coord, SpotId spot, double t_ns) {
    const auto px = map_to_pixel(coord, cam, spot);
    if (!px) {
      ++out.truth.out_of_sensor_photons;
      return;
    }
    const auto toa = detect(t_ns, cam, rng);
    if (!toa) {
      ++out.truth.absorbed_photons;
      return;
    }
    PhotonEvent e;
    e.x = static_cast<std::uint16_t>(px->x);
    e.y = static_cast<std::uint16_t>(px->y);
    e.toa = *toa;
    e.spot_hint = spot;
    out.events.push_back(e);
    ++out.truth.detected_photons;
    ++out.truth.detected_per_spot[spot - 1];
  };

  for (;;) {
    const BiphotonSample pair = source.next(rng);
    if (pair.t_emit >= end_ns) break;
    ++out.truth.generated_pairs;
    const double indist = indistinguishability(pair, icfg, cam.plane);
    out.truth.indistinguishability_sum += indist;
    const RoutedPair routed = route_pair(indist, rng);
    if (routed.bunched) ++out.truth.bunched_pairs;
    emit(near ? pair.r_signal : pair.k_signal, routed.spot_signal, pair.t_emit);
    emit(near ? pair.r_idler : pair.k_idler, routed.spot_idler, pair.t_emit);
  }

  std::sort(out.events.begin(), out.events.end(), event_before);
  const auto darks = generate_dark_counts((end_ns - begin_ns) * 1.0e-9, cam, rng, begin_ns);
  out.truth.dark_counts = darks.size();
  std::vector<PhotonEvent> merged(out.events.size() + darks.size());
  std::merge(out.events.begin(), out.events.end(), darks.begin(), darks.end(), merged.begin(), event_before);
  out.events = std::move(merged);
  return out;
}

} // namespace detail

/// Full pipeline per pair: sample → indistinguishability → route → map →
/// detect, merged with dark counts and globally time-ordered. The camera records
/// each photon at its own source-frame coordinate (position in the near
/// field, momentum in the far field) about its spot centre.
inline SimulationResult simulate_stream(const SourceConfig& src, const InterferometerConfig& icfg,
                                        const CameraConfig& cam, double duration_s,
                                        const SimulationOptions& opts = {}) {
  (void)validate(src);
  validate(icfg);
  validate(cam);
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) throw ConfigError("duration must be finite and >= 0");

  SimulationResult result;
  result.stream.width = static_cast<std::uint16_t>(cam.width);
  result.stream.height = static_cast<std::uint16_t>(cam.height);
  result.stream.tick_ns = cam.tick_ns;
  if (duration_s == 0.0) return result;

  const auto widths = widths_from_source(src);
  const double total_ns = duration_s * 1.0e9;
  const double chunk_ns = detail::chunk_length_ns(src);
  const auto n_chunks = static_cast<std::size_t>(std::ceil(total_ns / chunk_ns));

  std::vector<detail::ChunkOutput> chunks(n_chunks);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      const double begin = static_cast<double>(c) * chunk_ns;
      const double end = std::min(total_ns, begin + chunk_ns);
      chunks[c] = detail::simulate_chunk(src, widths, icfg, cam, begin, end, c);
    }
  };
  unsigned n_threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_chunks));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  std::size_t total = 0;
  for (const auto& c : chunks) total += c.events.size();
  auto& events = result.stream.events;
  events.reserve(total);
  for (auto& c : chunks) {
    result.truth += c.truth;
    const auto mid = static_cast<std::ptrdiff_t>(events.size());
    events.insert(events.end(), c.events.begin(), c.events.end());
    c.events = {};
    // Chunks are individually sorted; only jitter reaches across a border.
    if (mid > 0 && event_before(events[static_cast<std::size_t>(mid)], events[static_cast<std::size_t>(mid) - 1]))
      std::inplace_merge(events.begin(), events.begin() + mid, events.end(), event_before);
  }

  if (opts.drop_hook) {
    std::size_t kept = 0;
    for (const auto& e : events) {
      if (opts.drop_hook(e)) {
        if (e.spot_hint == 0) {
          --result.truth.dark_counts;
        } else {
          --result.truth.detected_photons;
          --result.truth.detected_per_spot[e.spot_hint - 1];
          ++result.truth.dropped_photons;
        }
      } else {
        events[kept++] = e;
      }
    }
    events.resize(kept);
  }
  return result;
}

} // namespace homcam
