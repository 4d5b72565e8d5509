#pragma once

// Binary event-stream files.
//
// Layout (all integers little-endian, no padding between fields):
//
//   offset size  field
//   0      8     magic "HOMEVT01"
//   8      2     version (u16, currently 1)
//   10     2     sensor_width (u16)
//   12     2     sensor_height (u16)
//   14     2     reserved (u16, zero)
//   16     8     tick_ns (IEEE-754 binary64)
//   24     8     record_count (u64)
//   32     32    config_digest (SHA-256 of the generating configuration)
//   64     14·n  records: x u16, y u16, toa u64, tot u16 (zero)

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "homcam/error.hpp"
#include "homcam/events.hpp"

namespace homcam {

using ConfigDigest = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kHeaderSize = 64;
inline constexpr std::size_t kRecordSize = 14;
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr char kEventMagic[8] = {'H', 'O', 'M', 'E', 'V', 'T', '0', '1'};

struct EventFileHeader {
  std::uint16_t version{kFormatVersion};
  std::uint16_t sensor_width{256};
  std::uint16_t sensor_height{256};
  std::uint16_t reserved{0};
  double tick_ns{6.0};
  std::uint64_t record_count{0};
  ConfigDigest config_digest{};
};

namespace le {

inline void put16(std::uint8_t* p, std::uint16_t v) noexcept {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}

inline void put64(std::uint8_t* p, std::uint64_t v) noexcept {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint16_t get16(const std::uint8_t* p) noexcept {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint64_t get64(const std::uint8_t* p) noexcept {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

} // namespace le

namespace detail {

inline std::array<std::uint8_t, kHeaderSize> encode_header(const char (&magic)[8], const EventFileHeader& h) {
  std::array<std::uint8_t, kHeaderSize> buf{};
  std::memcpy(buf.data(), magic, 8);
  le::put16(buf.data() + 8, h.version);
  le::put16(buf.data() + 10, h.sensor_width);
  le::put16(buf.data() + 12, h.sensor_height);
  le::put16(buf.data() + 14, h.reserved);
  le::put64(buf.data() + 16, std::bit_cast<std::uint64_t>(h.tick_ns));
  le::put64(buf.data() + 24, h.record_count);
  std::memcpy(buf.data() + 32, h.config_digest.data(), 32);
  return buf;
}

inline EventFileHeader decode_header(const char (&magic)[8], const std::uint8_t* buf, const std::string& path) {
  if (std::memcmp(buf, magic, 8) != 0) throw FormatError(path + ": bad magic");
  EventFileHeader h;
  h.version = le::get16(buf + 8);
  if (h.version != kFormatVersion)
    throw FormatError(path + ": unsupported version " + std::to_string(h.version));
  h.sensor_width = le::get16(buf + 10);
  h.sensor_height = le::get16(buf + 12);
  h.reserved = le::get16(buf + 14);
  h.tick_ns = std::bit_cast<double>(le::get64(buf + 16));
  h.record_count = le::get64(buf + 24);
  std::memcpy(h.config_digest.data(), buf + 32, 32);
  if (!(h.tick_ns > 0.0)) throw FormatError(path + ": tick_ns must be positive");
  return h;
}

/// Validates that a file holds exactly header + count·record_size bytes.
inline void check_size(const std::string& path, std::uint64_t file_size, std::uint64_t count,
                       std::size_t record_size) {
  const std::uint64_t expected = kHeaderSize + count * record_size;
  if (file_size < expected) {
    const std::uint64_t complete = (file_size - kHeaderSize) / record_size;
    throw TruncationError(path + ": truncated inside record " + std::to_string(complete),
                          kHeaderSize + complete * record_size);
  }
  if (file_size > expected)
    throw FormatError(path + ": " + std::to_string(file_size - expected) +
                      " trailing bytes beyond record_count");
}

} // namespace detail

inline void encode_record(std::uint8_t* p, const PhotonEvent& e) noexcept {
  le::put16(p, e.x);
  le::put16(p + 2, e.y);
  le::put64(p + 4, e.toa);
  le::put16(p + 12, 0);
}

inline PhotonEvent decode_record(const std::uint8_t* p) noexcept {
  PhotonEvent e;
  e.x = le::get16(p);
  e.y = le::get16(p + 2);
  e.toa = le::get64(p + 4);
  return e;
}

/// Streaming writer. Enforces time order and sensor bounds; the record count
/// in the header is patched on close().
class EventWriter {
public:
  EventWriter(const std::filesystem::path& path, EventFileHeader header)
      : path_(path.string()), header_(header), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path_ + " for writing");
    header_.record_count = 0;
    const auto buf = detail::encode_header(kEventMagic, header_);
    out_.write(reinterpret_cast<const char*>(buf.data()), buf.size());
    buffer_.reserve(kBufferRecords * kRecordSize);
  }

  EventWriter(const EventWriter&) = delete;
  EventWriter& operator=(const EventWriter&) = delete;

  ~EventWriter() {
    try {
      close();
    } catch (...) {
    }
  }

  void write(const PhotonEvent& e) {
    if (closed_) throw IoError(path_ + ": write after close");
    if (e.x >= header_.sensor_width || e.y >= header_.sensor_height)
      throw BoundsError(path_ + ": pixel (" + std::to_string(e.x) + ", " + std::to_string(e.y) +
                        ") outside sensor");
    if (header_.record_count > 0 && e.toa < last_toa_)
      throw OrderError(path_ + ": events not time-ordered at record " + std::to_string(header_.record_count));
    last_toa_ = e.toa;
    const auto old = buffer_.size();
    buffer_.resize(old + kRecordSize);
    encode_record(buffer_.data() + old, e);
    ++header_.record_count;
    if (buffer_.size() >= kBufferRecords * kRecordSize) flush();
  }

  void write(std::span<const PhotonEvent> events) {
    for (const auto& e : events) write(e);
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    flush();
    std::uint8_t count[8];
    le::put64(count, header_.record_count);
    out_.seekp(24);
    out_.write(reinterpret_cast<const char*>(count), 8);
    out_.close();
    if (!out_) throw IoError("failed to finalize " + path_);
  }

  std::uint64_t records_written() const noexcept { return header_.record_count; }

private:
  static constexpr std::size_t kBufferRecords = 1 << 14;

  void flush() {
    out_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
    if (!out_) throw IoError("write failed on " + path_);
    buffer_.clear();
  }

  std::string path_;
  EventFileHeader header_;
  std::ofstream out_;
  std::vector<std::uint8_t> buffer_;
  std::uint64_t last_toa_{0};
  bool closed_{false};
};

/// Streaming reader with constant memory; validates magic, version, size and
/// per-record bounds.
class EventReader {
public:
  explicit EventReader(const std::filesystem::path& path) : path_(path.string()), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path_);
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("cannot stat " + path_);
    std::array<std::uint8_t, kHeaderSize> buf{};
    in_.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (size < kHeaderSize) {
      if (size >= 8 && std::memcmp(buf.data(), kEventMagic, 8) != 0) throw FormatError(path_ + ": bad magic");
      throw TruncationError(path_ + ": truncated header", size);
    }
    header_ = detail::decode_header(kEventMagic, buf.data(), path_);
    detail::check_size(path_, size, header_.record_count, kRecordSize);
    buffer_.resize(kBufferRecords * kRecordSize);
  }

  const EventFileHeader& header() const noexcept { return header_; }

  /// Reads the next record; returns false at end of stream.
  bool next(PhotonEvent& e) {
    if (pos_ == filled_) {
      if (consumed_ == header_.record_count) return false;
      const auto n = std::min<std::uint64_t>(kBufferRecords, header_.record_count - consumed_);
      in_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(n * kRecordSize));
      if (!in_)
        throw TruncationError(path_ + ": short read", kHeaderSize + consumed_ * kRecordSize);
      pos_ = 0;
      filled_ = static_cast<std::size_t>(n);
    }
    e = decode_record(buffer_.data() + pos_ * kRecordSize);
    if (e.x >= header_.sensor_width || e.y >= header_.sensor_height)
      throw BoundsError(path_ + ": record " + std::to_string(consumed_) + " pixel (" + std::to_string(e.x) +
                        ", " + std::to_string(e.y) + ") outside sensor");
    ++pos_;
    ++consumed_;
    return true;
  }

  std::uint64_t records_read() const noexcept { return consumed_; }

private:
  static constexpr std::size_t kBufferRecords = 1 << 14;

  std::string path_;
  std::ifstream in_;
  EventFileHeader header_;
  std::vector<std::uint8_t> buffer_;
  std::size_t pos_{0};
  std::size_t filled_{0};
  std::uint64_t consumed_{0};
};

inline void write_stream(const std::filesystem::path& path, const EventFileHeader& header,
                         std::span<const PhotonEvent> events) {
  EventWriter w(path, header);
  w.write(events);
  w.close();
}

inline EventFileHeader make_header(const EventStream& s, const ConfigDigest& digest = {}) {
  EventFileHeader h;
  h.sensor_width = s.width;
  h.sensor_height = s.height;
  h.tick_ns = s.tick_ns;
  h.config_digest = digest;
  return h;
}

inline void write_stream(const std::filesystem::path& path, const EventStream& s, const ConfigDigest& digest = {}) {
  write_stream(path, make_header(s, digest), s.events);
}

/// Loads a whole file into memory (the analysis entry points need random access).
inline EventStream read_stream(const std::filesystem::path& path, EventFileHeader* header_out = nullptr) {
  EventReader r(path);
  EventStream s;
  s.width = r.header().sensor_width;
  s.height = r.header().sensor_height;
  s.tick_ns = r.header().tick_ns;
  s.events.reserve(static_cast<std::size_t>(r.header().record_count));
  PhotonEvent e;
  while (r.next(e)) s.events.push_back(e);
  if (header_out) *header_out = r.header();
  return s;
}

} // namespace homcam
