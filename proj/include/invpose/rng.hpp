// Deterministic random number generation. All randomness in the project
// flows through this generator so that runs are reproducible bit-for-bit
// for a given seed, independent of platform library implementations and
// of how work is split across threads.

#ifndef INVPOSE_RNG_HPP
#define INVPOSE_RNG_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace invpose {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Derives an independent stream seed from a base seed and stream ids.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> streams) {
  std::uint64_t s = base;
  std::uint64_t h = detail::splitmix64(s);
  for (std::uint64_t id : streams) {
    s = h ^ (id + 0x9e3779b97f4a7c15ULL);
    h = detail::splitmix64(s);
  }
  return h;
}

/// xoshiro256++ seeded via splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = detail::splitmix64(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>(uniform01() * static_cast<double>(n)) % n;
  }

  /// Uniform direction on the unit 2-sphere.
  Eigen::Vector3d unit_sphere() {
    const double z = uniform(-1.0, 1.0);
    const double a = uniform01() * 2.0 * M_PI;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    Eigen::Vector3d v(r * std::cos(a), r * std::sin(a), z);
    return v.normalized();
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

}  // namespace invpose

#endif  // INVPOSE_RNG_HPP
