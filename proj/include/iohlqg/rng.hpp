#pragma once

// Seedable random number generation with fully specified transforms, so that
// traces and Monte-Carlo estimates reproduce across platforms. The core
// generator is std::mt19937_64 (bit-exact by the standard); uniforms are
// (x >> 11) * 2^-53 and normals come from Box-Muller. Substreams are derived
// with a SplitMix64 finalizer so rollouts and seeds stay independent.

#include <cmath>
#include <cstdint>
#include <random>

namespace iohlqg {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Independent substream id for (seed, stream).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed + splitmix64(stream + 1));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on [-1, 1).
  double uniform_pm1() { return 2.0 * uniform() - 1.0; }

  // Standard normal via Box-Muller; one spare value cached per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace iohlqg
