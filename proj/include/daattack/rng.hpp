#ifndef DAATTACK_RNG_HPP
#define DAATTACK_RNG_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace daa {

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

/// 64-bit FNV-1a. Stable across platforms; used for config/dataset hashes
/// and for deriving named sub-seeds.
constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t h = 0xCBF29CE484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Fixed-width lowercase hex, used for hashes in file names and artifacts.
inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Sub-seed for a named pipeline stage ("dataset", "train/m0", "attack", ...).
/// Changing one label's consumer never perturbs another's stream.
constexpr std::uint64_t labeled_seed(std::uint64_t master, std::string_view label) noexcept {
  return detail::mix64(fnv1a(label) ^ detail::mix64(master + detail::kGolden));
}

/// Counter-based deterministic generator. The n-th output is a pure function
/// of (key, n), so a stream can be replayed by copying it and child streams
/// can be derived without touching the parent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t index = 0) noexcept
      : key_(detail::mix64(detail::mix64(seed ^ 0x6A09E667F3BCC909ULL) + detail::kGolden * (index + 1))) {}

  /// Independent stream for a sub-task (e.g. one example of a batch).
  RngStream child(std::uint64_t index) const noexcept {
    RngStream s(0);
    s.key_ = detail::mix64(key_ ^ detail::mix64(index + 0x3C6EF372FE94F82BULL));
    return s;
  }

  std::uint64_t next_u64() noexcept {
    return detail::mix64(key_ + detail::kGolden * ++counter_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] (inclusive), rejection-sampled so it is unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    if (hi < lo) throw ArgumentError("uniform_int: empty range");
    const std::uint64_t span = hi - lo;
    if (span == UINT64_MAX) return next_u64();
    const std::uint64_t n = span + 1;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return lo + v % n;
  }

  /// Standard normal via the Marsaglia polar method.
  double normal() noexcept {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    return u * m;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

}  // namespace daa

#endif  // DAATTACK_RNG_HPP
