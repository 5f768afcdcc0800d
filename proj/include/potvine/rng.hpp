#ifndef POTVINE_RNG_HPP
#define POTVINE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace potvine::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic substream of a master seed, addressed by (component, index).
// Uniform and normal draws are generated from raw mt19937_64 words so the
// output is identical on every platform and standard library.
class Stream {
 public:
  Stream(std::uint64_t seed, std::string_view component, std::uint64_t index = 0)
      : gen_(splitmix64(splitmix64(seed ^ fnv1a64(component)) ^ index)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Strictly inside (0,1).
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, pairs cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64.
    return gen_() % n;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace potvine::rng

#endif  // POTVINE_RNG_HPP
