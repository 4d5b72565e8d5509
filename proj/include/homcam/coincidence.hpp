#pragma once

// Windowed two-fold coincidence search between circular pixel regions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <thread>
#include <vector>

#include "homcam/camera.hpp"
#include "homcam/error.hpp"
#include "homcam/events.hpp"

namespace homcam {

struct RoiSpec {
  PixelCoord center{};
  double radius{1.0};
  SpotId label{1};
};

/// Pixel bitmap of a circular ROI, clipped to the sensor.
class RoiMask {
public:
  RoiMask(const RoiSpec& roi, int width, int height)
      : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {
    if (!(roi.radius > 0.0)) throw DomainError("ROI radius must be positive");
    const double r2 = roi.radius * roi.radius;
    const int span = static_cast<int>(std::ceil(roi.radius));
    for (int y = std::max(0, roi.center.y - span); y <= std::min(height - 1, roi.center.y + span); ++y) {
      for (int x = std::max(0, roi.center.x - span); x <= std::min(width - 1, roi.center.x + span); ++x) {
        const double dx = x - roi.center.x;
        const double dy = y - roi.center.y;
        if (dx * dx + dy * dy <= r2) {
          bits_[static_cast<std::size_t>(y) * width + x] = 1;
          ++count_;
        }
      }
    }
  }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_ && bits_[static_cast<std::size_t>(y) * width_ + x];
  }
  bool contains(const PhotonEvent& e) const noexcept { return contains(e.x, e.y); }

  std::size_t pixel_count() const noexcept { return count_; }

private:
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
  std::size_t count_{0};
};

struct CoincidencePair {
  PhotonEvent event_a;
  PhotonEvent event_b;
  std::int64_t dt{0};  ///< toa_b − toa_a, ticks
  SpotId label_a{0};
  SpotId label_b{0};
  std::uint64_t index_a{0};  ///< position of event_a in the input stream
  std::uint64_t index_b{0};

  friend bool operator==(const CoincidencePair& p, const CoincidencePair& q) noexcept {
    return p.index_a == q.index_a && p.index_b == q.index_b && p.dt == q.dt && p.event_a == q.event_a &&
           p.event_b == q.event_b && p.label_a == q.label_a && p.label_b == q.label_b;
  }
};

namespace detail {

inline void require_ordered(std::span<const PhotonEvent> events) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].toa < events[i - 1].toa)
      throw OrderError("event stream not time-ordered at index " + std::to_string(i));
}

inline std::vector<std::uint64_t> members(std::span<const PhotonEvent> events, const RoiMask& mask,
                                          std::size_t begin, std::size_t end) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = begin; i < end; ++i)
    if (mask.contains(events[i])) out.push_back(i);
  return out;
}

/// Two-pointer sweep over time-sorted member lists. B timestamps are read as
/// toa + shift. Self-pairs (same stream index) are skipped. Emits in
/// (index_a, index_b) order.
template <class Emit>
void sweep(std::span<const PhotonEvent> events, std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
           std::uint64_t window, std::int64_t shift, Emit&& emit) {
  const auto w = static_cast<std::int64_t>(std::min<std::uint64_t>(window, std::numeric_limits<std::int64_t>::max() / 4));
  std::size_t lo = 0;
  for (const auto ia : a) {
    const auto ta = static_cast<std::int64_t>(events[ia].toa);
    while (lo < b.size() && static_cast<std::int64_t>(events[b[lo]].toa) + shift + w < ta) ++lo;
    for (std::size_t j = lo; j < b.size(); ++j) {
      const auto tb = static_cast<std::int64_t>(events[b[j]].toa) + shift;
      if (tb > ta + w) break;
      if (b[j] != ia) emit(ia, b[j], tb - ta);
    }
  }
}

} // namespace detail

/// Every pair (e₁ ∈ roi_a, e₂ ∈ roi_b, e₁ ≠ e₂) with |toa₁ − toa₂| ≤ window,
/// in (index_a, index_b) order. O(n + m + p).
inline std::vector<CoincidencePair> find_coincidences(std::span<const PhotonEvent> events, int width, int height,
                                                      const RoiSpec& roi_a, const RoiSpec& roi_b,
                                                      std::uint64_t window) {
  detail::require_ordered(events);
  const RoiMask ma(roi_a, width, height);
  const RoiMask mb(roi_b, width, height);
  const auto a = detail::members(events, ma, 0, events.size());
  const auto b = detail::members(events, mb, 0, events.size());
  std::vector<CoincidencePair> out;
  detail::sweep(events, a, b, window, 0, [&](std::uint64_t ia, std::uint64_t ib, std::int64_t dt) {
    out.push_back({events[ia], events[ib], dt, roi_a.label, roi_b.label, ia, ib});
  });
  return out;
}

inline std::vector<CoincidencePair> find_coincidences(const EventStream& s, const RoiSpec& roi_a,
                                                      const RoiSpec& roi_b, std::uint64_t window) {
  return find_coincidences(s.events, s.width, s.height, roi_a, roi_b, window);
}

/// Same result as find_coincidences without materializing the pairs.
inline std::uint64_t count_coincidences(const EventStream& s, const RoiSpec& roi_a, const RoiSpec& roi_b,
                                        std::uint64_t window, std::int64_t shift_b = 0) {
  detail::require_ordered(s.events);
  const RoiMask ma(roi_a, s.width, s.height);
  const RoiMask mb(roi_b, s.width, s.height);
  const auto a = detail::members(s.events, ma, 0, s.events.size());
  const auto b = detail::members(s.events, mb, 0, s.events.size());
  std::uint64_t n = 0;
  detail::sweep(s.events, a, b, window, shift_b, [&n](std::uint64_t, std::uint64_t, std::int64_t) { ++n; });
  return n;
}

/// All-pairs reference implementation. O(n·m); same output order as
/// find_coincidences. Does not require a sorted stream.
inline std::vector<CoincidencePair> brute_force_coincidences(std::span<const PhotonEvent> events, int width,
                                                             int height, const RoiSpec& roi_a,
                                                             const RoiSpec& roi_b, std::uint64_t window) {
  std::vector<CoincidencePair> out;
  const auto inside = [](const PhotonEvent& e, const RoiSpec& r) {
    const double dx = static_cast<double>(e.x) - r.center.x;
    const double dy = static_cast<double>(e.y) - r.center.y;
    return dx * dx + dy * dy <= r.radius * r.radius;
  };
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].x >= width || events[i].y >= height || !inside(events[i], roi_a)) continue;
    for (std::size_t j = 0; j < events.size(); ++j) {
      if (j == i || events[j].x >= width || events[j].y >= height || !inside(events[j], roi_b)) continue;
      const auto dt = static_cast<std::int64_t>(events[j].toa) - static_cast<std::int64_t>(events[i].toa);
      if (static_cast<std::uint64_t>(dt < 0 ? -dt : dt) <= window)
        out.push_back({events[i], events[j], dt, roi_a.label, roi_b.label, i, j});
    }
  }
  return out;
}

inline std::vector<CoincidencePair> brute_force_coincidences(const EventStream& s, const RoiSpec& roi_a,
                                                             const RoiSpec& roi_b, std::uint64_t window) {
  return brute_force_coincidences(s.events, s.width, s.height, roi_a, roi_b, window);
}

/// Time-partitioned search. Shard k owns a contiguous range of A-events and
/// sees B-events from one window before its first to one window after its
/// last owned event, so pairs straddling a boundary belong to exactly one
/// shard (the owner of event_a). Output is identical to find_coincidences.
inline std::vector<CoincidencePair> find_coincidences_sharded(const EventStream& s, const RoiSpec& roi_a,
                                                              const RoiSpec& roi_b, std::uint64_t window,
                                                              std::size_t shards, unsigned threads = 0) {
  const auto& ev = s.events;
  detail::require_ordered(ev);
  shards = std::max<std::size_t>(1, std::min<std::size_t>(shards, std::max<std::size_t>(1, ev.size())));
  const RoiMask ma(roi_a, s.width, s.height);
  const RoiMask mb(roi_b, s.width, s.height);
  std::vector<std::vector<CoincidencePair>> parts(shards);

  const auto run = [&](std::size_t k) {
    const std::size_t own_begin = ev.size() * k / shards;
    const std::size_t own_end = ev.size() * (k + 1) / shards;
    if (own_begin == own_end) return;
    const std::uint64_t t_lo = ev[own_begin].toa > window ? ev[own_begin].toa - window : 0;
    const std::uint64_t t_hi = ev[own_end - 1].toa + window;
    const auto by_toa = [](const PhotonEvent& e, std::uint64_t t) { return e.toa < t; };
    const auto view_begin = static_cast<std::size_t>(std::lower_bound(ev.begin(), ev.end(), t_lo, by_toa) - ev.begin());
    const auto view_end = static_cast<std::size_t>(
        std::upper_bound(ev.begin(), ev.end(), t_hi, [](std::uint64_t t, const PhotonEvent& e) { return t < e.toa; }) -
        ev.begin());
    const auto a = detail::members(ev, ma, own_begin, own_end);
    const auto b = detail::members(ev, mb, view_begin, view_end);
    auto& out = parts[k];
    detail::sweep(ev, a, b, window, 0, [&](std::uint64_t ia, std::uint64_t ib, std::int64_t dt) {
      out.push_back({ev[ia], ev[ib], dt, roi_a.label, roi_b.label, ia, ib});
    });
  };

  unsigned n_threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, shards));
  if (n_threads <= 1) {
    for (std::size_t k = 0; k < shards; ++k) run(k);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = t; k < shards; k += n_threads) run(k);
      });
  }

  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<CoincidencePair> out;
  out.reserve(total);
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

/// Uncorrelated background rate (pairs per second) from re-matching with
/// roi_b timestamps shifted by `offset` ticks.
inline double estimate_accidentals(const EventStream& s, const RoiSpec& roi_a, const RoiSpec& roi_b,
                                   std::uint64_t window, std::uint64_t offset) {
  if (offset <= window) throw DomainError("accidental offset must exceed the coincidence window");
  if (s.events.empty()) return 0.0;
  const double duration = s.duration_s();
  if (!(duration > 0.0)) return 0.0;
  const auto n = count_coincidences(s, roi_a, roi_b, window, static_cast<std::int64_t>(offset));
  return static_cast<double>(n) / duration;
}

} // namespace homcam
