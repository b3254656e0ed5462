#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

namespace nltsa {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_pair(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s ^= b + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  return splitmix64(s);
}
}  // namespace detail

/// Seeded random generator. The same seed always yields the same draw sequence,
/// independent of platform: variates are produced by explicit transforms over
/// mt19937_64 output rather than by implementation-defined distributions.
/// Derived streams obtained via stream(id) are decorrelated from the parent and
/// from each other, and depend only on (seed, id).
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    engine_.seed(detail::splitmix64(s));
  }

  std::uint64_t seed() const { return seed_; }

  RandomSource stream(std::uint64_t id) const {
    return RandomSource(detail::mix_pair(seed_, id));
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller (pairs cached).
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RandomSource::below: n must be positive");
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  std::ptrdiff_t index(std::ptrdiff_t n) {
    return static_cast<std::ptrdiff_t>(below(static_cast<std::uint64_t>(n)));
  }

  template <typename It>
  void shuffle(It first, It last) {
    auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = static_cast<decltype(i)>(below(static_cast<std::uint64_t>(i + 1)));
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace nltsa
