#include <benchmark/benchmark.h>

#include <vector>

#include "veb/codec.hpp"
#include "veb/evaluator.hpp"
#include "veb/selection.hpp"
#include "veb/vae.hpp"

using namespace veb;

namespace {

PolicyTree filled_tree(int depth, int branching, int actions, RandomSource& rng) {
  PolicyTree t(depth, branching);
  for (std::size_t n = 0; n < t.size(); ++n) {
    t.set(n, static_cast<int>(rng.index(static_cast<std::size_t>(actions))));
  }
  return t;
}

std::vector<PolicyTree> candidate_set(std::size_t n, int depth) {
  RandomSource rng(11);
  std::vector<PolicyTree> out;
  for (std::size_t i = 0; i < n; ++i) {
    PolicyTree t = filled_tree(depth, 2, 3, rng);
    std::vector<double> p(t.size());
    for (double& v : p) v = 0.34 + 0.66 * rng.uniform();
    t.set_node_probs(p);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

static void BM_ZzohRoundTrip(benchmark::State& state) {
  const int depth = static_cast<int>(state.range(0));
  RandomSource rng(3);
  const ActionAlphabet alphabet(5);
  const PolicyTree t = filled_tree(depth, 4, 5, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(zzoh_decode(zzoh_encode(t, alphabet), alphabet));
  }
}
BENCHMARK(BM_ZzohRoundTrip)->Arg(3)->Arg(4);

static void BM_ObjectiveGradient(benchmark::State& state) {
  RandomSource rng(5);
  const ActionAlphabet alphabet(3);
  const auto x = zzoh_encode(filled_tree(4, 2, 3, rng), alphabet).values;
  const auto dim = static_cast<long>(x.size());
  const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), dim);
  const VaeNetwork net = VaeNetwork::glorot(x.size(), 64, 8, rng);
  std::vector<Eigen::VectorXd> eps(2, Eigen::VectorXd::Zero(8));
  const auto w = loss_weights(TreeShape{3, 2, 4}, LossKind::kTree);
  VaeParameters grad = VaeParameters::zeros(x.size(), 64, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective(net, xv, eps, w, 1e-6, &grad));
  }
}
BENCHMARK(BM_ObjectiveGradient);

static void BM_GreedySelection(benchmark::State& state) {
  const auto c = candidate_set(100, 3);
  const auto metric = state.range(0) == 0 ? MetricKind::kMdf : MetricKind::kIcd;
  for (auto _ : state) benchmark::DoNotOptimize(top_k(c, 10, metric));
}
BENCHMARK(BM_GreedySelection)->Arg(0)->Arg(1);

static void BM_BestResponse(benchmark::State& state) {
  const int depth = static_cast<int>(state.range(0));
  const DomainSpec d = tiger_spec();
  RandomSource rng(7);
  std::vector<PolicyTree> trees;
  for (int i = 0; i < 10; ++i) trees.push_back(filled_tree(depth, 2, 3, rng));
  const auto prior = ModelNodePrior::uniform(trees);
  for (auto _ : state) benchmark::DoNotOptimize(best_response(d, prior, depth));
}
BENCHMARK(BM_BestResponse)->Arg(3)->Arg(4);
BENCHMARK_MAIN();
