#pragma once

#include <cmath>
#include <cstdint>

namespace crs {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Derives an independent stream key from a base key and a salt. Used to give
// every (replication, cell) pair its own stream so that results do not depend
// on thread scheduling or on the order in which cells are simulated.
inline constexpr std::uint64_t derive_stream_key(std::uint64_t base, std::uint64_t salt) {
  return detail::splitmix64(base ^ detail::splitmix64(salt + 0x632BE59BD9B4E019ULL));
}

// Counter-based generator (Philox4x32-10 round structure). The state is a
// 128-bit counter plus a 64-bit key; each block is a pure function of both,
// so a stream can be reproduced from (key, draw index) alone.
class RngStream {
public:
  explicit RngStream(std::uint64_t key, std::uint64_t stream = 0)
      : key_(key), stream_(stream) {}

  std::uint64_t next_u64() {
    if (buffered_ == 0) refill();
    --buffered_;
    return block_[buffered_];
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Box-Muller; always consumes exactly two uniforms.
  double normal(double mean, double stddev) {
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * radius * std::cos(6.283185307179586476925286766559 * u2);
  }

  double exponential(double rate) {
    double u = uniform();
    return -std::log1p(-u) / rate;
  }

  double bernoulli(double success_prob) {
    return uniform() < success_prob ? 1.0 : 0.0;
  }

  std::uint64_t key() const { return key_; }

private:
  void refill() {
    std::uint32_t c[4] = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32),
    };
    std::uint32_t k[2] = {
        static_cast<std::uint32_t>(key_),
        static_cast<std::uint32_t>(key_ >> 32),
    };
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = 0xD2511F53ULL * c[0];
      std::uint64_t p1 = 0xCD9E8D57ULL * c[2];
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      std::uint32_t t1 = c[1];
      std::uint32_t t3 = c[3];
      c[0] = hi1 ^ t1 ^ k[0];
      c[1] = lo1;
      c[2] = hi0 ^ t3 ^ k[1];
      c[3] = lo0;
      k[0] += 0x9E3779B9U;
      k[1] += 0xBB67AE85U;
    }
    block_[0] = (static_cast<std::uint64_t>(c[0]) << 32) | c[1];
    block_[1] = (static_cast<std::uint64_t>(c[2]) << 32) | c[3];
    buffered_ = 2;
    ++counter_;
  }

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t block_[2] = {0, 0};
  int buffered_ = 0;
};

}  // namespace crs
