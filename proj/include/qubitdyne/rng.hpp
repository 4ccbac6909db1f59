#pragma once

#include <cmath>
#include <cstdint>

namespace qubitdyne {

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, step, draw), so trajectories are reproducible regardless of
// scheduling or worker count.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t bits(std::uint64_t step, std::uint64_t draw) const {
    std::uint64_t h = mix(key_ ^ (step * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
    return mix(h ^ (draw * 0xaef17502108ef2d9ULL + 0x2545f4914f6cdd1dULL));
  }

  /// Uniform double in [0, 1).
  double uniform(std::uint64_t step, std::uint64_t draw) const {
    return static_cast<double>(bits(step, draw) >> 11) * 0x1.0p-53;
  }

  /// Standard normal variate (Box-Muller over two consecutive draws).
  double normal(std::uint64_t step, std::uint64_t draw) const {
    const double u1 = 1.0 - uniform(step, 2 * draw);
    const double u2 = uniform(step, 2 * draw + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

 private:
  std::uint64_t key_;
};

}  // namespace qubitdyne
