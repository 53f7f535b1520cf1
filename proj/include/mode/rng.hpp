#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, coordinates), so serial and OpenMP kernels produce bit-identical
// streams regardless of scheduling or thread count.

#include <cstdint>

namespace mode::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for a labelled sub-stream (replicate, tree, environment...).
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t label) noexcept {
  return mix64(seed ^ mix64(label + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                               std::uint64_t b) noexcept {
  return derive(derive(seed, a), b);
}

/// Uniform on the open interval (0, 1) from the top 52 bits of a key.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Standard normal quantile, Wichura's AS241 (PPND16), |rel err| < 1e-16.
double normal_quantile(double p) noexcept;

inline double standard_normal(std::uint64_t bits) noexcept {
  return normal_quantile(to_unit(bits));
}

/// Sequential view over a counter-based stream.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t next_u64() noexcept { return mix64(seed_ ^ mix64(counter_++)); }
  double uniform() noexcept { return to_unit(next_u64()); }
  double normal() noexcept { return standard_normal(next_u64()); }

  /// Uniform integer in [0, bound) by 128-bit multiply-shift.
  std::uint64_t below(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace mode::rng
