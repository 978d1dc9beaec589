#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stormlens {

/// Deterministic random stream. Wraps mt19937_64 but derives uniform and
/// normal variates explicitly from the raw 64-bit output, so sequences are
/// identical across standard library implementations (std::*_distribution
/// sequences are not pinned by the standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream identified by (seed, stream). SplitMix64 mixing keeps
  /// nearby ids decorrelated.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe to pass to log().
  double uniform01_pos() { return (static_cast<double>(bits() >> 11) + 1.0) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool coin() { return (bits() & 1ULL) != 0; }

  /// Standard normal via Box-Muller (polar form avoided to keep consumption
  /// of the underlying stream fixed at two draws per pair).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01_pos();
    double u2 = uniform01();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 6.283185307179586477 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace stormlens
