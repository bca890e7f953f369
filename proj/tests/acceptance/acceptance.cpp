// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "veb/codec.hpp"
#include "veb/config.hpp"
#include "veb/evaluator.hpp"
#include "veb/pipeline.hpp"
#include "veb/reconstruct.hpp"
#include "veb/selection.hpp"
#include "veb/vae.hpp"

using namespace veb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome codec_roundtrip() {
  const auto t0 = Clock::now();
  RandomSource rng(derive_seed(1, "acceptance-codec"));
  std::size_t failures = 0, total = 0;
  for (auto [A, b, T] : {std::array{3, 2, 3}, std::array{5, 4, 3}}) {
    const ActionAlphabet alphabet(A);
    for (int i = 0; i < 10000; ++i) {
      const PolicyTree t = oracle::random_tree(T, b, A, rng);
      failures += !(zzoh_decode(zzoh_encode(t, alphabet), alphabet) == t);
      ++total;
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 5.0,
          format("%zu/%zu exact round trips in %.2fs", total - failures, total, secs)};
}

Outcome mass_conservation() {
  RandomSource rng(derive_seed(2, "acceptance-mass"));
  const DomainSpec d = tiger_spec();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t L = 4 + rng.index(10000 - 4 + 1);
    const int T = 2 + static_cast<int>(rng.index(3));
    const auto h = simulate_history(d, UniformRandomPolicy{}, L, rng);
    const double expected = static_cast<double>(L / static_cast<std::size_t>(T)) * T /
                            static_cast<double>(L);
    const PathSet paths = split(h, T);
    const GroupedPaths groups = union_paths(paths, d);
    double outer = 0.0, inner = 0.0;
    for (const auto& a : groups.by_action) {
      outer += a.mass;
      for (const auto& o : a.by_obs) inner += o.mass;
    }
    for (double v : {paths.total_mass(), outer, inner}) {
      worst = std::max(worst, std::abs(v - expected));
    }
  }
  return {worst <= 1e-9, format("max |mass - floor(L/T)T/L| = %.2e over 100 histories", worst)};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  RandomSource rng(derive_seed(3, "acceptance-gradient"));
  VaeNetwork net = VaeNetwork::glorot(12, 5, 2, rng);
  std::vector<double> flat = net.params().flatten();
  for (double& v : flat) v += 0.1 * rng.normal();
  net.params().assign(flat);
  const auto x = zzoh_encode(PolicyTree(2, 2, {1, 2, 0}), ActionAlphabet(3)).values;
  const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), 12);
  std::vector<Eigen::VectorXd> eps(2, Eigen::VectorXd(2));
  for (auto& e : eps) e << rng.normal(), rng.normal();
  const auto w = loss_weights(TreeShape{3, 2, 2}, LossKind::kTree);
  VaeParameters grad = VaeParameters::zeros(12, 5, 2);
  objective(net, xv, eps, w, 1e-6, &grad);
  const auto analytic = grad.flatten();
  const auto numeric = oracle::numeric_gradient(net, xv, eps, w, 1e-6, 1e-4);
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-3});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 10.0,
          format("max relative error %.2e over %zu parameters in %.2fs", worst,
                 analytic.size(), secs)};
}

Outcome kl_closed_form() {
  Eigen::VectorXd mu(1), sigma(1);
  mu << 0;
  sigma << 1;
  const double a = kl_loss(mu, sigma);
  mu << 1;
  const double b = kl_loss(mu, sigma);
  mu << 0;
  sigma << 2;
  const double c = kl_loss(mu, sigma);
  const bool ok = std::abs(a) < 1e-12 && std::abs(b - 0.5) < 1e-12 && std::abs(c - 0.8069) < 1e-4;
  return {ok, format("KL = %.6f, %.6f, %.6f", a, b, c)};
}

Outcome loss_ablation() {
  RandomSource rng(derive_seed(5, "acceptance-bce"));
  const TreeShape shape{3, 2, 3};
  const auto ones = loss_weights(shape, LossKind::kBce);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto x =
        zzoh_encode(oracle::random_tree(3, 2, 3, rng, 0.2), ActionAlphabet(3)).values;
    std::vector<double> p(x.size());
    for (double& v : p) v = rng.uniform();
    worst = std::max(worst, std::abs(tree_loss(x, p, ones) + oracle::plain_bce(x, p, 1e-6)));
  }
  return {worst <= 1e-9, format("max |tree_loss(w=1) + BCE| = %.2e", worst)};
}

Outcome training_sanity() {
  const auto t0 = Clock::now();
  const PolicyTree tree(3, 2, {2, 2, 0, 1, 2, 2, 0});
  const ActionAlphabet alphabet(3);
  const std::vector<EncodedTree> data{zzoh_encode(tree, alphabet)};
  TrainConfig cfg;
  cfg.seed = 7;
  const TrainResult result = train(data, cfg);
  const double initial = result.log.front().recon;
  const double final = result.log.back().recon;
  RandomSource rng(derive_seed(7, "acceptance-generate"));
  const auto generated = generate(result.net, data, 100, rng);
  int same = 0;
  for (const auto& t : generated) same += t == tree;
  const double secs = seconds_since(t0);
  return {std::abs(final) < 0.1 * std::abs(initial) && same >= 90 && secs < 60.0,
          format("recon %.4f -> %.4f (%.1f%%) after %zu epochs, %d/100 trees match, %.1fs",
                 initial, final, 100.0 * std::abs(final) / std::abs(initial),
                 result.epochs, same, secs)};
}

Outcome best_response_oracle() {
  const DomainSpec d = tiger_spec();
  RandomSource rng(derive_seed(8, "acceptance-br"));
  double worst = 0.0;
  int cases = 0;
  for (int T = 1; T <= 3; ++T) {
    for (std::size_t k = 1; k <= 3; ++k) {
      std::vector<PolicyTree> trees;
      std::vector<double> w;
      double total = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        trees.push_back(oracle::random_tree(T, 2, 3, rng));
        w.push_back(0.1 + rng.uniform());
        total += w.back();
      }
      for (double& v : w) v /= total;
      const auto br = best_response(d, {trees, w}, T);
      worst = std::max(worst, std::abs(br.value - oracle::enumerated_optimum(d, trees, w, T)));
      worst = std::max(worst, std::abs(br.value - oracle::plan_value(d, br.plan, trees, w, T)));
      ++cases;
    }
  }
  // The analytic value is an expectation under the prior, so episodes draw
  // j's tree from the prior as well.
  const std::vector<PolicyTree> trees{PolicyTree(3, 2, {2, 2, 2, 0, 1, 2, 2}),
                                      oracle::random_tree(3, 2, 3, rng),
                                      oracle::random_tree(3, 2, 3, rng)};
  const auto br = best_response(d, ModelNodePrior::uniform(trees), 3);
  RandomSource episodes(derive_seed(8, "acceptance-mc"));
  double sum = 0.0, sq = 0.0;
  const int runs = 100000;
  for (int r = 0; r < runs; ++r) {
    const double v = simulate_episode(d, br, trees[episodes.index(trees.size())], 3, episodes);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / runs;
  const double se = std::sqrt(std::max(0.0, sq / runs - mean * mean) / (runs - 1));
  const double gap = std::abs(mean - br.value);
  const bool mc_ok = se > 0.0 ? gap < 3.0 * se : gap < 1e-9;
  const double z = se > 0.0 ? gap / se : 0.0;
  return {worst < 1e-9 && mc_ok,
          format("%d priors: max |value - enumeration| = %.2e; MC %.4f vs %.4f (%.2f SE)",
                 cases, worst, mean, br.value, z)};
}

Outcome metric_monotonicity() {
  RandomSource rng(derive_seed(9, "acceptance-monotone"));
  bool ok = true;
  int checks = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.index(7);  // 2..8 candidates
    std::vector<PolicyTree> cands;
    for (std::size_t i = 0; i < n; ++i) {
      PolicyTree t = oracle::random_tree(3, 2, 3, rng);
      std::vector<double> p(t.size());
      for (double& v : p) v = 0.34 + 0.66 * rng.uniform();
      t.set_node_probs(p);
      cands.push_back(t);
    }
    for (MetricKind m : {MetricKind::kMdf, MetricKind::kIcd}) {
      double last = -1.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double s = top_k(cands, k, m, SelectMode::kExhaustive).score;
        ok = ok && s >= last;
        last = s;
        ++checks;
      }
      const double g = top_k(cands, 1, m, SelectMode::kGreedy).score;
      const double e = top_k(cands, 1, m, SelectMode::kExhaustive).score;
      ok = ok && g >= e;
      ++checks;
    }
  }
  return {ok, format("%d exhaustive/greedy comparisons on sets of 2..8", checks)};
}

ExperimentConfig experiment(const std::string& name, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.domain = "tiger";
  cfg.horizon = 3;
  cfg.generated = 100;
  cfg.k = 10;
  cfg.runs = 50;
  cfg.truth_in_set = false;
  cfg.seed = seed;
  cfg.output_dir = fs::temp_directory_path() / ("veb-acceptance-" + name);
  fs::remove_all(cfg.output_dir);
  return cfg;
}

Outcome qualitative_ordering() {
  const auto t0 = Clock::now();
  double icd_sum = 0.0, rnd_sum = 0.0, icd_var = 0.0, rnd_var = 0.0;
  int icd_wins = 0;
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    ExperimentConfig cfg = experiment("ordering", static_cast<std::uint64_t>(s));
    cfg.methods = {"vae-icd", "random"};
    const auto rows = cmd_run(cfg);
    icd_sum += rows[0].mean_reward;
    rnd_sum += rows[1].mean_reward;
    icd_var += rows[0].std_error * rows[0].std_error;
    rnd_var += rows[1].std_error * rows[1].std_error;
    icd_wins += rows[0].mean_reward > rows[1].mean_reward;
    fs::remove_all(cfg.output_dir);
  }
  const double icd = icd_sum / seeds, rnd = rnd_sum / seeds;
  // Standard error of the difference of the two grand means.
  const double pooled = std::sqrt(icd_var + rnd_var) / seeds;
  const double secs = seconds_since(t0);
  return {icd >= rnd - 2.0 * pooled && secs < 900.0,
          format("vae-icd %.3f vs random %.3f (pooled SE %.3f, icd ahead on %d/%d seeds), %.1fs",
                 icd, rnd, pooled, icd_wins, seeds, secs)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  ExperimentConfig a = experiment("determinism-a", 42);
  ExperimentConfig b = experiment("determinism-b", 42);
  cmd_run(a);
  cmd_run(b);
  const bool csv = slurp(a.output_dir / "report.csv") == slurp(b.output_dir / "report.csv");
  const bool json = slurp(a.output_dir / "report.json") == slurp(b.output_dir / "report.json");
  const bool nonempty = !slurp(a.output_dir / "report.csv").empty();
  fs::remove_all(a.output_dir);
  fs::remove_all(b.output_dir);
  return {csv && json && nonempty,
          format("report.csv %s, report.json %s", csv ? "identical" : "DIFFERS",
                 json ? "identical" : "DIFFERS")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"codec round trip", codec_roundtrip},
      {"mass conservation", mass_conservation},
      {"gradient check", gradient_check},
      {"KL closed forms", kl_closed_form},
      {"loss ablation equivalence", loss_ablation},
      {"training sanity", training_sanity},
      {"best-response oracle equivalence", best_response_oracle},
      {"metric monotonicity", metric_monotonicity},
      {"qualitative ordering", qualitative_ordering},
      {"determinism closure", determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", index - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
