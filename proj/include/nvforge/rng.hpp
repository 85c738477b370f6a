#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "nvforge/units.hpp"

namespace nvforge {

// One splitmix64 step; doubles as a general 64-bit mixer for seeding/hashing.
inline std::uint64_t mix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-keyed random stream (xoshiro256** seeded from (seed, stream_key)).
// The draw sequence depends only on (seed, stream_key), never on scheduling
// or worker count, so parallel batches stay reproducible.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_key)
      : seed_(seed), stream_key_(stream_key) {
    std::uint64_t s = seed ^ (0xA0761D6478BD642FULL * (stream_key + 1));
    for (auto& w : state_) w = mix64(s);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0)
      state_[0] = 0x853C49E6748FEA9BULL;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_key() const { return stream_key_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }  // [0,1)

  double uniform_open() {  // (0,1)
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = uniform_open();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * units::kPi * v);
    have_spare_ = true;
    return r * std::cos(2.0 * units::kPi * v);
  }

  // Knuth product method below mean 30, rounded normal approximation above.
  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
      const double limit = std::exp(-mean);
      double p = 1.0;
      long k = 0;
      do {
        ++k;
        p *= uniform_open();
      } while (p > limit);
      return k - 1;
    }
    const double x = mean + std::sqrt(mean) * normal();
    return x < 0.0 ? 0 : static_cast<long>(std::llround(x));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
  std::uint64_t stream_key_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nvforge
