#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, counter), so sequences are identical on every platform and
// independent of the order in which streams are consumed.

#include <cmath>
#include <cstdint>
#include <string_view>

#include "adinv/core.hpp"

namespace adinv {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

//! Child seed for a named purpose (and optional replicate index) of a root seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                                           std::uint64_t index = 0) {
  return splitmix64(splitmix64(root ^ fnv1a(purpose)) + splitmix64(index + 0x51ED27ULL));
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(splitmix64(seed) ^ splitmix64(stream * 0xD1B54A32D192ED03ULL + 1)) {}

  std::uint64_t at(std::uint64_t counter) const {
    return splitmix64(splitmix64(key_ + counter) ^ key_);
  }

  std::uint64_t next_u64() { return at(counter_++); }

  //! Uniform in the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  //! Standard normal via Box-Muller; both variates of each pair are used.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace adinv
