#pragma once

#include <cstdint>
#include <random>

namespace kspec {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t x);

/// Child stream seed for (parent, index). Streams are independent of the order
/// in which they are requested, so trials and columns can be drawn in parallel.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// mt19937_64 with portable uniform and normal transforms (the standard
/// distributions are implementation-defined, these are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kspec
