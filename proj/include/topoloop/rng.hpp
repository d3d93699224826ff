#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace topoloop {

// Derives an independent stream seed for a named purpose from a root seed
// (FNV-1a over the name, mixed through SplitMix64).
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose);
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t index);

// mt19937_64 with hand-written distributions: the standard engines are fully
// specified, the standard distributions are not, so this keeps draws identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t index(std::uint64_t n);

  // Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace topoloop
