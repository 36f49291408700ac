#pragma once

// Counter-based random streams. A stream is identified by a 64-bit key; the
// i-th output is a pure function of (key, i), so streams can be derived per
// replication and consumed in any order or on any thread.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sgdfclt {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for sub-stream `index` of `seed`.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed ^ 0x6A09E667F3BCC909ULL) + mix64(index + 0x9E3779B97F4A7C15ULL));
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(mix64(key + 0x243F6A8885A308D3ULL)) {}

  std::uint64_t next_u64() noexcept {
    const std::uint64_t c = counter_++;
    return mix64(mix64(c * 0x9E3779B97F4A7C15ULL + key_) ^ key_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Laplace(0, scale) by inverse CDF.
  double laplace(double scale) noexcept {
    const double u = uniform() - 0.5;
    return u < 0.0 ? scale * std::log1p(2.0 * u) : -scale * std::log1p(-2.0 * u);
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sgdfclt
