#pragma once

#include <cstdint>

namespace bfopt {

// Counter-style deterministic RNG. Every random quantity in the solver is
// drawn from a stream keyed by (seed, purpose, iteration, sample), so results
// do not depend on evaluation order or thread scheduling.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [-scale, scale).
  double next_symmetric(double scale) { return (2.0 * next_double() - 1.0) * scale; }

  bool next_sign() { return (next() >> 63) != 0; }

 private:
  std::uint64_t state_;
};

/// Combines a base seed with a stream tag into a new well-dispersed seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  SplitMix64 g(base ^ (tag + 0x9e3779b97f4a7c15ULL + (base << 6) + (base >> 2)));
  return g.next();
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(base, a), b);
}

namespace seed_tag {
inline constexpr std::uint64_t kThetaInit = 0x7433be7a11c0ffeeULL;
inline constexpr std::uint64_t kPerturbation = 0x9e2b7a5fd1e57a1eULL;
}  // namespace seed_tag

}  // namespace bfopt
