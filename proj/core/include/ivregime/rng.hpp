#pragma once

#include <cstdint>

namespace ivregime {

/// SplitMix64 output finalizer (Stafford variant 13). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` under `parent`:
///   mix64(parent ^ mix64(index * 0x9E3779B97F4A7C15 + 0xD1B54A32D192ED03)).
/// Used for both replication seeds (parent = master seed, index = replication)
/// and per-row streams (parent = dataset seed, index = row).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(parent ^ mix64(index * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL));
}

/// Dataset seed of replication r under a master seed.
constexpr std::uint64_t child_seed(std::uint64_t master, std::uint64_t replication) noexcept {
  return derive_seed(master, replication);
}

/// SplitMix64 generator. Its output sequence and the uniform mapping below are
/// fully specified, so draws agree bit-for-bit on every platform.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0,1) with 53 random bits.
  constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Default master seed when none is given on the command line.
inline constexpr std::uint64_t kDefaultSeed = 20201028;

}  // namespace ivregime
