#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace dualmem {

// Seeded generator with platform-independent derived distributions.
// std::mt19937_64 output is fully specified by the standard; the std
// distributions and std::shuffle are not, so index draws and shuffles are
// done here with rejection sampling on the raw engine output.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform double in [0, 1) with 53 bits of randomness.
  double uniform01();

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

// Mixes a base seed with stream coordinates (round, rollout, ...) into an
// independent seed. splitmix64 finalizer.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace dualmem
