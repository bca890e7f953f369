#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace veb {

// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// Derives an independent child seed from a parent seed and a stage tag, so
// each pipeline stage owns a stream that does not shift when another stage
// draws more numbers.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

// Seeded source of randomness shared by every stochastic operation.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Uniform in [0, 1).
  double uniform();
  double normal();
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  // Samples an index from an unnormalized discrete distribution.
  std::size_t categorical(const double* probs, std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace veb
