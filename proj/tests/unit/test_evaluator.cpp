#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "veb/error.hpp"
#include "veb/evaluator.hpp"

using namespace veb;

namespace {

// Every complete i plan of the given depth over |Omega_i| branches.
template <class Fn>
void for_each_plan(int depth, int branching, int actions, Fn&& fn) {
  PolicyTree plan(depth, branching);
  for (std::size_t n = 0; n < plan.size(); ++n) plan.set(n, 0);
  while (true) {
    fn(plan);
    std::size_t n = 0;
    while (n < plan.size() && plan.at(n) == actions - 1) plan.set(n++, 0);
    if (n == plan.size()) return;
    plan.set(n, plan.at(n) + 1);
  }
}

}  // namespace

TEST_CASE("one step against a listening opponent") {
  const DomainSpec d = tiger_spec();
  const auto prior = ModelNodePrior::uniform({PolicyTree(1, 2, {tiger::kListen})});
  const auto br = best_response(d, prior, 1);
  CHECK(br.plan.at(0) == tiger::kListen);
  CHECK(br.value == doctest::Approx(-1.0));
}

TEST_CASE("best response equals brute force over all plans at T <= 2") {
  const DomainSpec d = tiger_spec();
  RandomSource rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<PolicyTree> trees;
    for (int k = 0; k < 2; ++k) trees.push_back(oracle::random_tree(2, 2, 3, rng));
    const std::vector<double> w{0.4, 0.6};
    const auto br = best_response(d, {trees, w}, 2);
    double best = -1e300;
    for_each_plan(2, 6, 3, [&](const PolicyTree& plan) {
      best = std::max(best, oracle::plan_value(d, plan, trees, w, 2));
    });
    CHECK(br.value == doctest::Approx(best).epsilon(1e-12));
    CHECK(oracle::plan_value(d, br.plan, trees, w, 2) ==
          doctest::Approx(br.value).epsilon(1e-12));
  }
}

TEST_CASE("best response equals trajectory enumeration on tiger T=3") {
  const DomainSpec d = tiger_spec();
  RandomSource rng(7);
  std::vector<PolicyTree> trees;
  for (int k = 0; k < 3; ++k) trees.push_back(oracle::random_tree(3, 2, 3, rng));
  const std::vector<double> w{0.2, 0.5, 0.3};
  const auto br = best_response(d, {trees, w}, 3);
  CHECK(std::abs(br.value - oracle::enumerated_optimum(d, trees, w, 3)) < 1e-9);
  CHECK(std::abs(oracle::plan_value(d, br.plan, trees, w, 3) - br.value) < 1e-9);
}

TEST_CASE("splitting weight over duplicates changes nothing") {
  const DomainSpec d = tiger_spec();
  const PolicyTree t(2, 2, {2, 0, 1});
  const auto single = best_response(d, ModelNodePrior::uniform({t}), 2);
  const auto split = best_response(d, {{t, t}, {0.3, 0.7}}, 2);
  CHECK(single.plan == split.plan);
  CHECK(single.value == doctest::Approx(split.value).epsilon(1e-12));
}

TEST_CASE("prior validation and budget") {
  const DomainSpec d = tiger_spec();
  CHECK_THROWS_AS(best_response(d, {{PolicyTree(2, 2, {0, kEmpty, 1})}, {1.0}}, 2),
                  ConfigError);
  CHECK_THROWS_AS(best_response(d, {{PolicyTree(2, 2, {0, 1, 1})}, {0.5}}, 2), ConfigError);
  CHECK_THROWS_AS(best_response(d, {{PolicyTree(2, 2, {0, 1, 1})}, {1.0}}, 3), ConfigError);
  PolicyTree deep(7, 2);
  for (std::size_t n = 0; n < deep.size(); ++n) deep.set(n, 0);
  CHECK_THROWS_AS(best_response(d, ModelNodePrior::uniform({deep}), 7), SizeError);
}

TEST_CASE("uav best response is exact at T=2") {
  const DomainSpec d = uav_spec();
  RandomSource rng(3);
  std::vector<PolicyTree> trees{oracle::random_tree(2, 4, 5, rng), oracle::random_tree(2, 4, 5, rng)};
  const std::vector<double> w{0.5, 0.5};
  const auto br = best_response(d, {trees, w}, 2);
  CHECK(std::abs(br.value - oracle::enumerated_optimum(d, trees, w, 2)) < 1e-9);
}

TEST_CASE("episodes are deterministic and single-step rewards are table entries") {
  TigerParams p;
  p.listen_accuracy = 1.0;
  const DomainSpec d = tiger_spec(p);
  const PolicyTree j(1, 2, {tiger::kListen});
  const auto br = best_response(d, ModelNodePrior::uniform({j}), 1);
  RandomSource a(5), b(5);
  const double r1 = simulate_episode(d, br, j, 1, a);
  CHECK(r1 == simulate_episode(d, br, j, 1, b));
  CHECK(r1 == -1.0);
}

TEST_CASE("average reward edge cases") {
  const DomainSpec d = tiger_spec();
  const PolicyTree j(2, 2, {2, 2, 2});
  const auto br = best_response(d, ModelNodePrior::uniform({j}), 2);
  RandomSource a(1);
  const auto one = average_reward(d, br, j, 1, 2, a);
  CHECK(one.std_error == 0.0);
  RandomSource c(1);
  CHECK(one.mean == simulate_episode(d, br, j, 2, c));
  RandomSource e(9), f(9);
  const auto s1 = average_reward(d, br, j, 50, 2, e);
  const auto s2 = average_reward(d, br, j, 50, 2, f);
  CHECK(s1.runs == 50);
  CHECK(s1.mean == s2.mean);
  CHECK(s1.std_error == s2.std_error);
  CHECK_THROWS_AS(average_reward(d, br, j, 0, 2, a), ConfigError);
}

TEST_CASE("constant rewards give r * T with zero spread") {
  TigerParams p;
  p.listen_reward = p.gold_reward = p.tiger_penalty = p.shared_gold_reward = 2.0;
  const DomainSpec d = tiger_spec(p);
  const PolicyTree j(3, 2, {0, 1, 2, 0, 1, 2, 0});
  const auto br = best_response(d, ModelNodePrior::uniform({j}), 3);
  RandomSource rng(4);
  const auto s = average_reward(d, br, j, 30, 3, rng);
  CHECK(s.mean == doctest::Approx(6.0));
  CHECK(s.std_error == doctest::Approx(0.0));
}

TEST_CASE("monte carlo mean agrees with the analytic value") {
  const DomainSpec d = tiger_spec();
  const PolicyTree j(3, 2, {2, 2, 2, 0, 1, 2, 2});
  const auto br = best_response(d, ModelNodePrior::uniform({j}), 3);
  RandomSource rng(77);
  const auto s = average_reward(d, br, j, 20000, 3, rng);
  CHECK(std::abs(s.mean - br.value) < 3 * s.std_error);
}

TEST_CASE("pipeline report rows and identical priors") {
  const DomainSpec d = tiger_spec();
  const PolicyTree j(2, 2, {2, 0, 1});
  const auto prior = ModelNodePrior::uniform({j, PolicyTree(2, 2, {2, 2, 2})});
  const std::vector<MethodPrior> methods{{"a", 2, "none", prior}, {"b", 2, "none", prior}};
  const auto rows = evaluate_pipeline(d, methods, j, 2, 40, 3);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mean_reward == rows[1].mean_reward);
  CHECK(rows[0].value == rows[1].value);
}

TEST_CASE("knowing the true model is never worse beyond noise") {
  const DomainSpec d = tiger_spec();
  RandomSource rng(12);
  const PolicyTree truth = oracle::random_tree(3, 2, 3, rng);
  std::vector<PolicyTree> others;
  for (int k = 0; k < 4; ++k) others.push_back(oracle::random_tree(3, 2, 3, rng));
  const std::vector<MethodPrior> methods{
      {"truth", 1, "none", ModelNodePrior::uniform({truth})},
      {"others", 4, "none", ModelNodePrior::uniform(others)}};
  const auto rows = evaluate_pipeline(d, methods, truth, 3, 2000, 8);
  CHECK(rows[0].mean_reward >= rows[1].mean_reward - 2 * rows[0].std_error);
}
