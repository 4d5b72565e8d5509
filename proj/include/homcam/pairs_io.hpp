#pragma once

// Packed coincidence-pair files. Same 64-byte header layout as event files
// with magic "HOMPAIR1"; the reserved u16 carries label_a (low byte) and
// label_b (high byte). Each 28-byte record is event_a followed by event_b in
// the 14-byte event record encoding.

#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "homcam/coincidence.hpp"
#include "homcam/event_io.hpp"

namespace homcam {

inline constexpr char kPairMagic[8] = {'H', 'O', 'M', 'P', 'A', 'I', 'R', '1'};
inline constexpr std::size_t kPairRecordSize = 2 * kRecordSize;

inline void write_pairs(const std::filesystem::path& path, EventFileHeader header,
                        std::span<const CoincidencePair> pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  SpotId la = pairs.empty() ? 0 : pairs.front().label_a;
  SpotId lb = pairs.empty() ? 0 : pairs.front().label_b;
  header.reserved = static_cast<std::uint16_t>(la | (lb << 8));
  header.record_count = pairs.size();
  const auto head = detail::encode_header(kPairMagic, header);
  out.write(reinterpret_cast<const char*>(head.data()), head.size());
  std::vector<std::uint8_t> buf(kPairRecordSize);
  for (const auto& p : pairs) {
    if (p.label_a != la || p.label_b != lb) throw DomainError("pairs file holds a single ROI pair");
    encode_record(buf.data(), p.event_a);
    encode_record(buf.data() + kRecordSize, p.event_b);
    out.write(reinterpret_cast<const char*>(buf.data()), kPairRecordSize);
  }
  if (!out) throw IoError("write failed on " + path.string());
}

/// Stream indices are not stored; they come back as record positions.
inline std::vector<CoincidencePair> read_pairs(const std::filesystem::path& path, EventFileHeader* header_out = nullptr) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + name);
  const auto size = std::filesystem::file_size(path);
  std::array<std::uint8_t, kHeaderSize> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  if (size < kHeaderSize) throw TruncationError(name + ": truncated header", size);
  const auto h = detail::decode_header(kPairMagic, head.data(), name);
  detail::check_size(name, size, h.record_count, kPairRecordSize);
  std::vector<CoincidencePair> pairs;
  pairs.reserve(static_cast<std::size_t>(h.record_count));
  std::vector<std::uint8_t> buf(kPairRecordSize);
  for (std::uint64_t i = 0; i < h.record_count; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), kPairRecordSize);
    CoincidencePair p;
    p.event_a = decode_record(buf.data());
    p.event_b = decode_record(buf.data() + kRecordSize);
    p.dt = static_cast<std::int64_t>(p.event_b.toa) - static_cast<std::int64_t>(p.event_a.toa);
    p.label_a = static_cast<SpotId>(h.reserved & 0xff);
    p.label_b = static_cast<SpotId>(h.reserved >> 8);
    p.index_a = p.index_b = i;
    pairs.push_back(p);
  }
  if (header_out) *header_out = h;
  return pairs;
}

} // namespace homcam
