#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

// Counter-keyed RNG streams. Every consumer derives its own stream from
// (master seed, r, b, stage), so results do not depend on execution order
// and parallel runs reproduce serial runs exactly.

namespace crf {

enum class RngStage : std::uint64_t {
  kSubsetDraw = 1,
  kSplitNoise = 2,
  kDgp = 3,
  kMonteCarlo = 4,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// xoshiro256++ seeded through splitmix64 over the stream key.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t r, std::uint64_t b,
            RngStage stage) {
    std::uint64_t key = seed;
    key ^= 0x6a09e667f3bcc909ULL + detail::splitmix64(key) + (r << 1);
    key ^= detail::splitmix64(key) + (b << 2);
    key ^= detail::splitmix64(key) + static_cast<std::uint64_t>(stage);
    for (auto& word : state_) word = detail::splitmix64(key);
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

  // Uniform on [0,1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double mul = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * mul;
    have_spare_ = true;
    return u * mul;
  }

  // Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = -bound % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// First `take` entries of a partial Fisher-Yates shuffle of `pool`.
inline std::vector<std::size_t> sample_without_replacement(
    std::vector<std::size_t> pool, std::size_t take, RngStream& rng) {
  for (std::size_t i = 0; i < take && i + 1 < pool.size(); ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

inline std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace crf
