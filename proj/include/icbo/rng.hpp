#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace icbo {

/// Seeded generator with platform-independent distributions.
///
/// std::uniform_real_distribution and friends are implementation-defined, so
/// every variate here is derived directly from mt19937_64 output. Logs from a
/// seeded run are therefore identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniformly random permutation of {0, .., n-1} (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);

  /// Independent generator for a named purpose. Depends only on this
  /// generator's seed and the name, never on how many draws were made.
  Rng substream(std::string_view name) const;
  Rng substream(std::uint64_t index) const;

private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

} // namespace icbo
