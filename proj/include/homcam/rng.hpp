#pragma once

#include <cstdint>
#include <random>

namespace homcam {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng{mix_seed(seed, stream)};
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>{0.0, 1.0}(rng);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>{0.0, 1.0}(rng);
}

} // namespace homcam
