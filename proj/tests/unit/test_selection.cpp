#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "veb/error.hpp"
#include "veb/selection.hpp"

using namespace veb;

namespace {

std::vector<PolicyTree> candidates(std::size_t n, std::uint64_t seed, int depth = 2) {
  RandomSource rng(seed);
  std::vector<PolicyTree> out;
  for (std::size_t i = 0; i < n; ++i) {
    PolicyTree t = oracle::random_tree(depth, 2, 3, rng);
    std::vector<double> p(t.size());
    for (double& v : p) v = 0.34 + 0.66 * rng.uniform();
    t.set_node_probs(p);
    out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_CASE("mdf of a single tiger tree") {
  const std::vector<PolicyTree> one{PolicyTree(2, 2, {0, 1, 2})};
  CHECK(mdf(one) == doctest::Approx(4.0));
}

TEST_CASE("mdf ignores duplicates and is monotone") {
  const auto c = candidates(6, 3);
  std::vector<PolicyTree> dup = c;
  dup.push_back(c[2]);
  CHECK(mdf(dup) == mdf(c));
  for (std::size_t n = 1; n < c.size(); ++n) {
    const std::span<const PolicyTree> s(c.data(), n), s1(c.data(), n + 1);
    CHECK(mdf(s1) >= mdf(s));
    CHECK(mdf(s) >= 2.0);
  }
  CHECK_THROWS_AS(mdf(std::vector<PolicyTree>{}), MetricError);
  CHECK_THROWS_AS(mdf(std::vector{PolicyTree(2, 2, {0, kEmpty, 1})}), MetricError);
}

TEST_CASE("mdf counter matches batch computation") {
  const auto c = candidates(5, 8, 3);
  MdfCounter counter;
  for (const auto& t : c) {
    const double with = counter.value_with(t);
    counter.add(t);
    CHECK(with == doctest::Approx(counter.value()));
  }
  CHECK(counter.value() == doctest::Approx(mdf(c)));
}

TEST_CASE("icd examples") {
  PolicyTree ones(2, 2, {0, 1, 2}, std::vector<double>{1, 1, 1});
  CHECK(icd(ones) == 0.0);
  PolicyTree half(1, 2, {0}, std::vector<double>{0.5});
  CHECK(icd(half) == doctest::Approx(0.5 * std::log(2.0) * std::log(2.0)));
  PolicyTree root(2, 2, {0, 1, 2}, std::vector<double>{0.9, 1, 1});
  CHECK(icd(root) == doctest::Approx(-std::log(3.0) * 0.9 * std::log(0.9)));
  CHECK_THROWS_AS(icd(PolicyTree(2, 2, {0, 1, 2})), MetricError);
}

TEST_CASE("metrics are permutation invariant") {
  auto c = candidates(5, 11);
  const double m = mdf(c), i = icd(c);
  std::reverse(c.begin(), c.end());
  CHECK(mdf(c) == doctest::Approx(m));
  CHECK(icd(c) == doctest::Approx(i));
}

TEST_CASE("top_k edge cases") {
  const auto c = candidates(6, 5);
  for (auto mode : {SelectMode::kGreedy, SelectMode::kExhaustive}) {
    const auto all = top_k(c, 6, MetricKind::kMdf, mode);
    CHECK(all.indices == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  }
  CHECK_THROWS_AS(top_k(c, 0, MetricKind::kMdf), ConfigError);
  CHECK_THROWS_AS(top_k(c, 7, MetricKind::kMdf), ConfigError);
  const auto big = candidates(60, 2);
  CHECK_THROWS_AS(top_k(big, 10, MetricKind::kMdf, SelectMode::kExhaustive), SizeError);
}

TEST_CASE("K=1 by ICD picks the highest own score") {
  const auto c = candidates(8, 13);
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (icd(c[i]) > icd(c[best])) best = i;
  }
  for (auto mode : {SelectMode::kGreedy, SelectMode::kExhaustive}) {
    CHECK(top_k(c, 1, MetricKind::kIcd, mode).indices == std::vector<std::size_t>{best});
  }
}

TEST_CASE("greedy is within 1 - 1/e of exhaustive on small instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = candidates(8, seed);
    const double g = top_k(c, 3, MetricKind::kMdf, SelectMode::kGreedy).score;
    const double e = top_k(c, 3, MetricKind::kMdf, SelectMode::kExhaustive).score;
    CHECK(g <= e + 1e-12);
    CHECK(g >= 0.63 * e);
  }
}

TEST_CASE("greedy order prefixes are the greedy sets") {
  const auto c = candidates(10, 4);
  const auto order = greedy_order(c, 10, MetricKind::kMdf);
  for (std::size_t k = 1; k <= 10; ++k) {
    std::vector<std::size_t> prefix(order.begin(), order.begin() + static_cast<long>(k));
    std::sort(prefix.begin(), prefix.end());
    CHECK(top_k(c, k, MetricKind::kMdf).indices == prefix);
  }
}

TEST_CASE("binomial") {
  CHECK(binomial(8, 3) == 56);
  CHECK(binomial(100, 10) == 17310309456440ULL);
  CHECK(binomial(100, 50, 1000) == 1000);
  CHECK(binomial(3, 4) == 0);
}
