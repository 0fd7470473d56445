#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace noisefair {

// Philox4x32-10 counter-based generator. A draw is a pure function of
// (key, counter), so per-example streams stay independent of evaluation
// order and of how many draws other examples consumed.
class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox(std::uint64_t seed) : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block block(std::uint64_t stream, std::uint64_t counter) const {
    Block ctr{static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
              static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform(std::uint64_t stream, std::uint64_t counter) const {
    const Block b = block(stream, counter);
    const std::uint64_t bits = (static_cast<std::uint64_t>(b[0]) << 32 | b[1]) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound) by rejection on the 64-bit draw; the
  // retry count advances a sub-counter so the result stays deterministic.
  std::uint64_t below(std::uint64_t bound, std::uint64_t stream, std::uint64_t counter) const {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (std::uint64_t attempt = 0;; ++attempt) {
      const Block b = block(stream ^ (attempt << 48), counter);
      const std::uint64_t x = static_cast<std::uint64_t>(b[2]) << 32 | b[3];
      if (x < limit) return x % bound;
    }
  }

  // Standard normal via Box-Muller on two uniforms from one block.
  double normal(std::uint64_t stream, std::uint64_t counter) const {
    const Block b = block(stream, counter);
    const double u1 = (static_cast<double>((static_cast<std::uint64_t>(b[0]) << 32 | b[1]) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>((static_cast<std::uint64_t>(b[2]) << 32 | b[3]) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  std::array<std::uint32_t, 2> key_;
};

// Stream ids partition the counter space by purpose.
namespace streams {
inline constexpr std::uint64_t kNoise = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kPeer = 4;
inline constexpr std::uint64_t kSynth = 5;
inline constexpr std::uint64_t kFolds = 6;
inline constexpr std::uint64_t kTheory = 7;
}  // namespace streams

// Deterministic Fisher-Yates shuffle drawing from (stream, salt).
template <typename Vec>
void shuffle(Vec& v, const Philox& rng, std::uint64_t stream, std::uint64_t salt) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::uint64_t j = rng.below(i, stream, (salt << 32) ^ i);
    std::swap(v[i - 1], v[j]);
  }
}

// Derive an independent seed from a parent seed and a tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace noisefair
