#pragma once

#include <cstdint>

namespace ssrqd {

// Xoshiro256++ (Blackman & Vigna, 2019) seeded through SplitMix64, per the
// authors' recommendation.  We carry our own generator instead of <random>
// engines so that streams are bit-identical across standard libraries, and we
// derive one independent stream per Monte Carlo trial from (master seed,
// trial index) so results do not depend on how trials are scheduled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& word : state_) {
      z += 0x9e3779b97f4a7c15ull;
      word = scramble(z);
    }
  }

  // Independent stream for one trial.  Mixing both inputs through the full
  // SplitMix64 finalizer keeps streams decorrelated even for adjacent trial
  // indices and related master seeds.
  static Rng for_trial(std::uint64_t master_seed, std::uint64_t trial) {
    return Rng(scramble(master_seed) ^ scramble(trial + 0x9e3779b97f4a7c15ull));
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

  // Uniform draw strictly inside (0,1): top 53 bits, offset by half an ulp so
  // 0 and 1 are unreachable and quantile transforms never see an endpoint.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  // SplitMix64 output function (Vigna), used purely as a bit mixer.
  static constexpr std::uint64_t scramble(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
};

}  // namespace ssrqd
