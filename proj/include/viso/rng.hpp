#pragma once
// Seeded random streams with bit-stable output: the transforms below are
// hand-rolled (no std distributions, whose sequences are implementation
// defined), so a (seed, replica) pair produces identical draws on every
// platform and under any thread scheduling.
#include <cmath>
#include <cstdint>
#include <random>

#include "viso/constants.hpp"

namespace viso {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Decorrelated engine seed for replica r of a master seed.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t replica) {
  std::uint64_t s = master;
  std::uint64_t a = splitmix64(s);
  s = a + replica;
  std::uint64_t b = splitmix64(s);
  return splitmix64(s) ^ b;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  Rng(std::uint64_t master, std::uint64_t replica) : eng_(stream_seed(master, replica)) {}

  // [0, 1), 53 random bits
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // (0, 1)
  double u01_open() {
    double u = u01();
    while (u == 0.0) u = u01();
    return u;
  }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // open interval (0, 2pi); the endpoints carry zero probability and the
  // angle containers exclude them
  double angle() { return two_pi * u01_open(); }

  // half-open (-pi, pi]
  double signed_angle() { return pi - two_pi * u01(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double r = std::sqrt(-2.0 * std::log(u01_open()));
    double t = two_pi * u01();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  // Exp(1)
  double exponential() { return -std::log1p(-u01()); }

  std::uint64_t bits() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0;
};

}  // namespace viso
