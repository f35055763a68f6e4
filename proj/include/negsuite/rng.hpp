#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace negsuite {

// 64-bit FNV-1a over the bytes of `text`, finished with a splitmix64 round.
std::uint64_t hash_string(std::string_view text);

// Derives an independent stream seed from a global seed and a label
// (scene id, purpose tag, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// Seeded random source. Draws are built directly on mt19937_64 output so
// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n);
  bool coin(double p = 0.5) { return uniform() < p; }
  // Standard normal (Box-Muller, one value per call).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& values) {
    return values[index(values.size())];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace negsuite
