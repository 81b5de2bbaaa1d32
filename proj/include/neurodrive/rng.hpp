#pragma once

#include <cstdint>
#include <random>

namespace neurodrive {

/// Seeded generator whose draws are identical on every platform.
/// std::uniform_real_distribution and friends are implementation-defined,
/// so the value mapping is done here on top of the (standardized) engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  /// Derives an independent stream, e.g. one per trial.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace neurodrive
