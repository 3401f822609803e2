#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace dao {

/// Seeded 64-bit random stream. Distribution math is done here rather than
/// with <random> distributions so sequences do not depend on the standard
/// library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 42) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::string state() const;
  void set_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

/// Mixes a seed with a stream index so derived streams are decorrelated.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dao
