#include "veb/random.hpp"

#include "veb/error.hpp"

namespace veb {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) {
  // FNV-1a over the tag, then mixed with the parent.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(parent ^ mix64(h));
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(parent ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double RandomSource::uniform() { return unit_(engine_); }

double RandomSource::normal() { return gauss_(engine_); }

std::size_t RandomSource::index(std::size_t n) {
  if (n == 0) throw DegenerateDistributionError("index(): empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::size_t RandomSource::categorical(const double* probs, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += probs[i];
  if (!(total > 0.0)) {
    throw DegenerateDistributionError("categorical(): all weights are zero");
  }
  const double threshold = uniform() * total;
  double cumulative = 0.0;
  std::size_t last_positive = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last_positive = i;
    if (threshold < cumulative) return i;
  }
  return last_positive;
}

}  // namespace veb
