#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace rggfpp {

/// Purpose tags separate the random streams of one replica. Point positions
/// and edge weights never share a stream.
enum class Purpose : std::uint64_t {
  kPoints = 0x706f696e74,
  kWeights = 0x776569676874,
  kDirections = 0x646972,
  kBootstrap = 0x626f6f74,
  kAuxiliary = 0x617578,
};

/// SplitMix64 finalizer. Used to hash stream keys into generator seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a key tuple into a single 64-bit seed. Order matters.
constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

/// xoshiro256++ engine. Satisfies UniformRandomBitGenerator, so it plugs into
/// the <random> distributions.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s += 0x9e3779b97f4a7c15ULL;
      word = splitmix64(s);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
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

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Child stream keyed by `tag`. Consumes one draw from this stream.
  RandomStream split(std::uint64_t tag) { return RandomStream(mix_seed({(*this)(), tag})); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

/// The normative stream schema: (master seed, replica id, purpose tag).
inline RandomStream make_stream(std::uint64_t master_seed, std::uint64_t replica, Purpose purpose) {
  return RandomStream(mix_seed({master_seed, replica, static_cast<std::uint64_t>(purpose)}));
}

}  // namespace rggfpp
