#include "veb/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "veb/error.hpp"

namespace veb {

ModelNodePrior ModelNodePrior::uniform(std::vector<PolicyTree> trees) {
  ModelNodePrior prior;
  const double w = trees.empty() ? 0.0 : 1.0 / static_cast<double>(trees.size());
  prior.weights.assign(trees.size(), w);
  prior.trees = std::move(trees);
  return prior;
}

void ModelNodePrior::validate(const DomainSpec& spec, int depth) const {
  if (trees.empty()) throw ConfigError("prior has no trees");
  if (weights.size() != trees.size()) {
    throw ConfigError("prior weights do not match the tree count");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("prior weight is negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("prior weights sum to " + std::to_string(total));
  }
  for (const auto& t : trees) {
    if (!t.complete()) throw ConfigError("prior tree is incomplete");
    if (t.depth() != depth || t.branching() != spec.num_obs_j()) {
      throw ConfigError("prior tree shape does not match the horizon/domain");
    }
    for (Action a : t.nodes()) {
      if (a < 0 || a >= spec.num_actions_j()) {
        throw ConfigError("prior tree uses an unknown action");
      }
    }
  }
}

namespace {

struct Successor {
  int state;
  double prob;
};

// Belief entry over (state, tree, node), packed into one key.
struct Entry {
  std::uint64_t key;
  double prob;
};

class BestResponseSolver {
 public:
  BestResponseSolver(const DomainSpec& spec, const ModelNodePrior& prior,
                     int depth)
      : spec_(spec),
        prior_(prior),
        depth_(depth),
        num_trees_(prior.trees.size()),
        j_nodes_(tree_node_count(spec.num_obs_j(), depth)),
        plan_(depth, spec.num_obs_i()) {
    const int S = spec.num_states(), Ai = spec.num_actions_i(),
              Aj = spec.num_actions_j();
    successors_.resize(static_cast<std::size_t>(S * Ai * Aj));
    for (int s = 0; s < S; ++s) {
      for (int ai = 0; ai < Ai; ++ai) {
        for (int aj = 0; aj < Aj; ++aj) {
          auto& list = successors_[index(s, ai, aj)];
          for (int s2 = 0; s2 < S; ++s2) {
            const double p = spec.T(s, ai, aj, s2);
            if (p > 0.0) list.push_back({s2, p});
          }
        }
      }
    }
  }

  BestResponsePolicy solve() {
    std::vector<Entry> belief;
    for (std::size_t k = 0; k < num_trees_; ++k) {
      if (prior_.weights[k] == 0.0) continue;
      for (int s = 0; s < spec_.num_states(); ++s) {
        const double p = spec_.initial_belief[static_cast<std::size_t>(s)] *
                         prior_.weights[k];
        if (p > 0.0) belief.push_back({pack(s, k, 0), p});
      }
    }
    std::sort(belief.begin(), belief.end(),
              [](const Entry& a, const Entry& b) { return a.key < b.key; });
    const double value = solve_node(belief, 1, 0);
    return {plan_, value};
  }

 private:
  std::size_t index(int s, int ai, int aj) const {
    return (static_cast<std::size_t>(s) * spec_.actions_i.size() +
            static_cast<std::size_t>(ai)) * spec_.actions_j.size() +
           static_cast<std::size_t>(aj);
  }
  std::uint64_t pack(int s, std::size_t k, std::size_t n) const {
    return (static_cast<std::uint64_t>(s) * num_trees_ + k) * j_nodes_ + n;
  }
  void unpack(std::uint64_t key, int& s, std::size_t& k, std::size_t& n) const {
    n = key % j_nodes_;
    key /= j_nodes_;
    k = key % num_trees_;
    s = static_cast<int>(key / num_trees_);
  }

  std::vector<std::size_t> subtree_nodes(std::size_t node) const {
    std::vector<std::size_t> out{node};
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (plan_.is_leaf(out[i])) continue;
      for (int o = 0; o < plan_.branching(); ++o) {
        out.push_back(plan_.child(out[i], o));
      }
    }
    return out;
  }

  void clear_subtree(std::size_t node) {
    for (std::size_t n : subtree_nodes(node)) plan_.set(n, 0);
  }

  // Value of acting optimally for steps t..T from `belief` (sorted by key);
  // writes the chosen actions into the plan below `plan_node`.
  double solve_node(const std::vector<Entry>& belief, int t,
                    std::size_t plan_node) {
    const int Ai = spec_.num_actions_i();
    const int Oi = spec_.num_obs_i();
    const int Oj = spec_.num_obs_j();
    const bool last = t == depth_;
    const std::vector<std::size_t> region =
        last ? std::vector<std::size_t>{} : subtree_nodes(plan_node);
    std::vector<Action> best_region;
    double best_value = -std::numeric_limits<double>::infinity();
    Action best_action = 0;

    for (Action ai = 0; ai < Ai; ++ai) {
      double value = 0.0;
      for (const Entry& e : belief) {
        int s;
        std::size_t k, n;
        unpack(e.key, s, k, n);
        value += e.prob * spec_.R(s, ai, prior_.trees[k].at(n));
      }
      if (!last) {
        std::vector<std::vector<Entry>> next(static_cast<std::size_t>(Oi));
        for (const Entry& e : belief) {
          int s;
          std::size_t k, n;
          unpack(e.key, s, k, n);
          const PolicyTree& tree = prior_.trees[k];
          const Action aj = tree.at(n);
          for (const Successor& succ : successors_[index(s, ai, aj)]) {
            const double p_move = e.prob * succ.prob;
            for (int oj = 0; oj < Oj; ++oj) {
              const double p_oj = spec_.Oj(succ.state, aj, oj);
              if (p_oj == 0.0) continue;
              const std::uint64_t key = pack(succ.state, k, tree.child(n, oj));
              for (int oi = 0; oi < Oi; ++oi) {
                const double p_oi = spec_.Oi(succ.state, ai, aj, oi);
                if (p_oi == 0.0) continue;
                next[static_cast<std::size_t>(oi)].push_back(
                    {key, p_move * p_oj * p_oi});
              }
            }
          }
        }
        for (int oi = 0; oi < Oi; ++oi) {
          auto& b = next[static_cast<std::size_t>(oi)];
          const std::size_t child = plan_.child(plan_node, oi);
          const double mass = compact(b);
          if (mass <= 0.0) {
            // Unreachable observation: contributes nothing.
            clear_subtree(child);
            continue;
          }
          for (auto& e : b) e.prob /= mass;
          value += mass * solve_node(b, t + 1, child);
        }
      }
      if (value > best_value) {
        best_value = value;
        best_action = ai;
        if (!last) {
          best_region.clear();
          for (std::size_t n : region) best_region.push_back(plan_.at(n));
        }
      }
    }
    for (std::size_t i = 0; i < region.size(); ++i) {
      plan_.set(region[i], best_region[i]);
    }
    plan_.set(plan_node, best_action);
    return best_value;
  }

  // Sorts by key, merges duplicates, returns the total mass.
  static double compact(std::vector<Entry>& b) {
    std::stable_sort(b.begin(), b.end(),
                     [](const Entry& x, const Entry& y) { return x.key < y.key; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (out > 0 && b[out - 1].key == b[i].key) {
        b[out - 1].prob += b[i].prob;
      } else {
        b[out++] = b[i];
      }
    }
    b.resize(out);
    double total = 0.0;
    for (const auto& e : b) total += e.prob;
    return total;
  }

  const DomainSpec& spec_;
  const ModelNodePrior& prior_;
  int depth_;
  std::size_t num_trees_;
  std::size_t j_nodes_;
  PolicyTree plan_;
  std::vector<std::vector<Successor>> successors_;
};

}  // namespace

BestResponsePolicy best_response(const DomainSpec& spec,
                                 const ModelNodePrior& prior, int depth) {
  if (depth < 1) throw ConfigError("best_response: T must be >= 1");
  prior.validate(spec, depth);
  const double branching =
      static_cast<double>(spec.num_actions_i()) * spec.num_obs_i();
  if (std::pow(branching, depth - 1) > kBestResponseBudget) {
    throw SizeError("best_response: (|A_i||Omega_i|)^(T-1) exceeds 1e7");
  }
  BestResponseSolver solver(spec, prior, depth);
  return solver.solve();
}

double simulate_episode(const DomainSpec& spec, const BestResponsePolicy& policy,
                        const PolicyTree& j_tree, int depth, RandomSource& rng) {
  if (!j_tree.complete()) throw ConfigError("simulate_episode: j tree incomplete");
  if (j_tree.depth() < depth || policy.plan.depth() < depth) {
    throw ConfigError("simulate_episode: a policy is shallower than T");
  }
  const auto S = static_cast<std::size_t>(spec.num_states());
  const auto Oi = static_cast<std::size_t>(spec.num_obs_i());
  const auto Oj = static_cast<std::size_t>(spec.num_obs_j());
  int s = static_cast<int>(rng.categorical(spec.initial_belief.data(), S));
  std::size_t i_node = 0, j_node = 0;
  double total = 0.0;
  for (int t = 1; t <= depth; ++t) {
    const Action ai = policy.plan.at(i_node);
    const Action aj = j_tree.at(j_node);
    total += spec.R(s, ai, aj);
    const int s2 = static_cast<int>(
        rng.categorical(&spec.transition[spec.transition_index(s, ai, aj, 0)], S));
    const int oi = static_cast<int>(
        rng.categorical(&spec.observation_i[spec.obs_i_index(s2, ai, aj, 0)], Oi));
    const int oj = static_cast<int>(
        rng.categorical(&spec.observation_j[spec.obs_j_index(s2, aj, 0)], Oj));
    if (t < depth) {
      i_node = policy.plan.child(i_node, oi);
      j_node = j_tree.child(j_node, oj);
    }
    s = s2;
  }
  return total;
}

RewardStats average_reward(const DomainSpec& spec,
                           const BestResponsePolicy& policy,
                           const PolicyTree& j_true, std::size_t runs,
                           int depth, RandomSource& rng) {
  if (runs < 1) throw ConfigError("average_reward: runs must be >= 1");
  std::vector<double> returns(runs);
  for (auto& r : returns) r = simulate_episode(spec, policy, j_true, depth, rng);
  RewardStats stats;
  stats.runs = runs;
  double sum = 0.0;
  for (double r : returns) sum += r;
  stats.mean = sum / static_cast<double>(runs);
  if (runs > 1) {
    double sq = 0.0;
    for (double r : returns) sq += (r - stats.mean) * (r - stats.mean);
    stats.std_error = std::sqrt(sq / static_cast<double>(runs - 1) /
                                static_cast<double>(runs));
  }
  return stats;
}

std::vector<ReportRow> evaluate_pipeline(const DomainSpec& spec,
                                         std::span<const MethodPrior> methods,
                                         const PolicyTree& j_true, int depth,
                                         std::size_t runs, std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  std::vector<ReportRow> rows;
  rows.reserve(methods.size());
  for (const auto& m : methods) {
    const auto t0 = Clock::now();
    const BestResponsePolicy policy = best_response(spec, m.prior, depth);
    const auto t1 = Clock::now();
    RandomSource rng(seed);
    const RewardStats stats = average_reward(spec, policy, j_true, runs, depth, rng);
    const auto t2 = Clock::now();
    ReportRow row;
    row.method = m.method;
    row.k = m.k;
    row.metric = m.metric;
    row.mean_reward = stats.mean;
    row.std_error = stats.std_error;
    row.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
    row.eval_seconds = std::chrono::duration<double>(t2 - t1).count();
    row.value = policy.value;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace veb
