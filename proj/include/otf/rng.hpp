#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace otf {

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// Seed for a derived stream: FNV-1a over "<master>:<tag>" with the master seed
// in decimal.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

// Seeded random source. The engine is std::mt19937_64; uniform and normal
// variates are produced by fixed formulas (53-bit mantissa fill, Box-Muller)
// so that a given seed yields the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace otf
