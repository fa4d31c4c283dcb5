#pragma once

#include <cstdint>

#include "bkaudit/parallel.hpp"

namespace bkaudit::detail {

// xoshiro256**, seeded through SplitMix64 so nearby seeds decorrelate.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& s : s_) {
      z = parallel::splitmix64(z);
      s = z;
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0,1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

inline std::uint64_t block_seed(std::uint64_t seed, std::int64_t block) {
  return parallel::splitmix64(seed ^ parallel::splitmix64(static_cast<std::uint64_t>(block) + 1));
}

}  // namespace bkaudit::detail
