#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace npt {

// Deterministic random stream. All variates are derived from raw 64-bit
// draws through fixed arithmetic (inverse-CDF sampling for continuous
// distributions), so results are reproducible bit-for-bit for a given seed
// regardless of platform or standard-library version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  // Independent substream `index` of a master seed. Used so parallel workers
  // (replicates, permutations) draw from streams that do not depend on
  // execution order.
  static Rng substream(std::uint64_t master, std::uint64_t index) {
    return Rng(mix(master) ^ mix(0x9E3779B97F4A7C15ull * (index + 1)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via the inverse CDF (see phi_inv in nonparanormal.hpp).
  double normal();

  // Fisher-Yates shuffle of 0..n-1.
  std::vector<int> permutation(int n) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(idx[i], idx[j]);
    }
    return idx;
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer.
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace npt
