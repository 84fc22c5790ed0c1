#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace evmcv {

// Random streams
// --------------
// Engine: std::mt19937_64 (output fully pinned by the C++ standard).
// Seeding: every stream seed is SplitMix64(master ^ FNV-1a-64(label)) or
// SplitMix64(master + golden * (index + 1)) for indexed blocks. Stream
// derivation is versioned by kStreamVersion; bumping it changes every
// derived seed.
//
// Uniform and normal variates are generated here rather than through
// <random> distributions, whose algorithms are implementation-defined.

inline constexpr std::uint32_t kStreamVersion = 1;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for a named purpose ("train", "test", "covariance", ...).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept {
  return splitmix64(master ^ fnv1a64(label) ^ (std::uint64_t{kStreamVersion} << 56));
}

/// Seed for the index-th block of a stream.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(master + 0x9e3779b97f4a7c15ULL * (index + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the sine branch is cached.
  double normal() noexcept;

  /// Exp(1) by inversion.
  double exponential() noexcept;

  std::uint64_t next_u64() noexcept { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace evmcv
