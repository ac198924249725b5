#pragma once

#include <cstdint>

namespace tstab {

// Deterministic random stream: xoshiro256++ seeded through the splitmix64
// finalizer. Streams derived from (master_seed, run_index) are stable across
// versions and platforms; this keying is a compatibility promise relied on
// by the frozen regression constants in the test suite.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : RngStream(seed, 0) {}

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
    // Distinct (seed, index) pairs map to distinct splitmix starting points.
    std::uint64_t key = mix64(master_seed) ^ mix64(stream_index + 0x9E3779B97F4A7C15ULL);
    for (auto& word : state_) {
      key += 0x9E3779B97F4A7C15ULL;
      word = mix64(key);
    }
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

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller. The sine partner is discarded so every
  // call consumes exactly two uniforms, keeping stream positions easy to
  // reason about.
  double normal();

  double normal(double stddev) { return stddev * normal(); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  // splitmix64 output function (Stafford mix13).
  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_[4];
};

}  // namespace tstab
