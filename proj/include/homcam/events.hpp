#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

namespace homcam {

/// One camera detection. `toa` counts ticks of the stream's tick duration.
struct PhotonEvent {
  std::uint16_t x{0};
  std::uint16_t y{0};
  std::uint64_t toa{0};
  std::uint8_t spot_hint{0};  ///< simulation truth (0 = dark/unknown); never read by analysis

  friend bool operator==(const PhotonEvent& a, const PhotonEvent& b) noexcept {
    return a.x == b.x && a.y == b.y && a.toa == b.toa;
  }
};

/// Total order used whenever a stream has to be sorted deterministically.
inline bool event_before(const PhotonEvent& a, const PhotonEvent& b) noexcept {
  return std::tie(a.toa, a.x, a.y, a.spot_hint) < std::tie(b.toa, b.x, b.y, b.spot_hint);
}

struct EventStream {
  std::uint16_t width{256};
  std::uint16_t height{256};
  double tick_ns{6.0};
  std::vector<PhotonEvent> events;

  /// Span covered by the stream, in seconds (zero for fewer than two events).
  double duration_s() const noexcept {
    if (events.size() < 2) return 0.0;
    return static_cast<double>(events.back().toa - events.front().toa + 1) * tick_ns * 1.0e-9;
  }
};

inline bool is_time_ordered(std::span<const PhotonEvent> events) noexcept {
  return std::is_sorted(events.begin(), events.end(),
                        [](const PhotonEvent& a, const PhotonEvent& b) { return a.toa < b.toa; });
}

} // namespace homcam
