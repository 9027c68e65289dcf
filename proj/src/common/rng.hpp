#pragma once

#include <cstdint>
#include <random>

namespace tfh {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent streams from a root seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` under `seed`. Tasks and episodes each get their own
/// stream so results do not depend on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Salts separating the purposes a single task seed is used for.
namespace stream {
inline constexpr std::uint64_t kEpisode = 1;
inline constexpr std::uint64_t kLatent = 2;
inline constexpr std::uint64_t kFineTune = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kShuffle = 5;
inline constexpr std::uint64_t kData = 6;
}  // namespace stream

}  // namespace tfh
