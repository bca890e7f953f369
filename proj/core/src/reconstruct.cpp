#include "veb/reconstruct.hpp"

#include <algorithm>
#include <map>

#include "veb/error.hpp"

namespace veb {

std::vector<int> PolicyPath::branch_observations() const {
  std::vector<int> obs;
  obs.reserve(steps.size() - 1);
  for (std::size_t t = 0; t + 1 < steps.size(); ++t) {
    obs.push_back(steps[t].observation);
  }
  return obs;
}

double PathSet::total_mass() const {
  double total = 0.0;
  for (const auto& p : entries) total += p.weight;
  return total;
}

double GroupedPaths::total_mass() const {
  double total = 0.0;
  for (const auto& g : by_action) total += g.mass;
  return total;
}

const ActionGroup* GroupedPaths::find(Action a) const {
  for (const auto& g : by_action) {
    if (g.action == a) return &g;
  }
  return nullptr;
}

PathSet split(const InteractionHistory& history, int depth) {
  if (depth < 1) throw ConfigError("split: T must be >= 1");
  const std::size_t L = history.length();
  const auto T = static_cast<std::size_t>(depth);
  if (L < T) {
    throw EmptyInputError("split: history length " + std::to_string(L) +
                          " is shorter than T=" + std::to_string(depth));
  }
  PathSet set;
  set.depth = depth;
  set.history_length = L;
  std::map<std::vector<std::pair<Action, int>>, std::size_t> seen;
  for (std::size_t l = 0; l < L / T; ++l) {
    std::vector<HistoryStep> segment(history.steps.begin() + l * T,
                                     history.steps.begin() + (l + 1) * T);
    std::vector<std::pair<Action, int>> key;
    key.reserve(T);
    for (const auto& s : segment) key.emplace_back(s.action, s.observation);
    auto [it, inserted] = seen.try_emplace(std::move(key), set.entries.size());
    if (inserted) set.entries.push_back({std::move(segment), 0, 0.0});
    ++set.entries[it->second].count;
  }
  for (auto& e : set.entries) {
    e.weight = static_cast<double>(e.count * T) / static_cast<double>(L);
  }
  return set;
}

GroupedPaths union_paths(const PathSet& paths, const DomainSpec& spec) {
  GroupedPaths grouped;
  grouped.depth = paths.depth;
  grouped.branching = spec.num_obs_j();
  std::map<Action, std::map<std::vector<int>, ObservationGroup>> buckets;
  for (const auto& path : paths.entries) {
    if (path.steps.size() != static_cast<std::size_t>(paths.depth)) {
      throw ConfigError("union: path length differs from T");
    }
    for (const auto& s : path.steps) {
      if (s.action < 0 || s.action >= spec.num_actions_j() ||
          s.observation < 0 || s.observation >= spec.num_obs_j()) {
        throw ConfigError("union: path uses a symbol outside the domain");
      }
    }
    auto obs = path.branch_observations();
    auto& group = buckets[path.root_action()][obs];
    group.observations = std::move(obs);
    group.mass += path.weight;
    group.paths.push_back(path);
  }
  for (auto& [action, by_obs] : buckets) {
    ActionGroup ag;
    ag.action = action;
    for (auto& [obs, group] : by_obs) {
      ag.mass += group.mass;
      ag.by_obs.push_back(std::move(group));
    }
    grouped.by_action.push_back(std::move(ag));
  }
  return grouped;
}

std::size_t roulette_index(std::span<const double> weights, double draw) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw DegenerateDistributionError("roulette: negative weight");
    total += w;
  }
  if (!(total > 0.0)) {
    throw DegenerateDistributionError("roulette: all weights are zero");
  }
  const double target = draw * total;
  double cumulative = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    cumulative += weights[i];
    last = i;
    if (target <= cumulative) return i;
  }
  // Rounding left the running sum just short of the target.
  return last;
}

std::size_t roulette_index(std::span<const double> weights, RandomSource& rng) {
  return roulette_index(weights, rng.uniform());
}

namespace {

// Walks the branch of `path` and calls visit(node, action) for each level.
template <class Visit>
void walk_branch(const PolicyPath& path, int branching, Visit&& visit) {
  std::size_t node = 0;
  for (std::size_t t = 0; t < path.steps.size(); ++t) {
    if (t > 0) node = child_of(node, branching, path.steps[t - 1].observation);
    visit(node, path.steps[t].action);
  }
}

bool consistent_with(const PolicyTree& tree, const PolicyPath& path) {
  bool ok = true;
  walk_branch(path, tree.branching(), [&](std::size_t node, Action a) {
    if (tree.at(node) != kEmpty && tree.at(node) != a) ok = false;
  });
  return ok;
}

}  // namespace

PolicyTree graphing(std::span<const PolicyPath> paths, int depth,
                    int branching) {
  PolicyTree tree(depth, branching);
  for (const auto& path : paths) {
    if (path.steps.size() != static_cast<std::size_t>(depth)) {
      throw InconsistentPathsError("graphing: path length differs from T");
    }
    walk_branch(path, branching, [&](std::size_t node, Action a) {
      if (tree.at(node) != kEmpty && tree.at(node) != a) {
        throw InconsistentPathsError(
            "graphing: paths assign actions " + std::to_string(tree.at(node)) +
            " and " + std::to_string(a) + " to node " + std::to_string(node));
      }
      tree.set(node, a);
    });
  }
  return tree;
}

PolicyTree sample_incomplete_tree(const GroupedPaths& groups,
                                  RandomSource& rng) {
  if (groups.by_action.empty()) {
    throw EmptyInputError("sample_incomplete_tree: no paths");
  }
  std::vector<double> masses;
  masses.reserve(groups.by_action.size());
  for (const auto& g : groups.by_action) masses.push_back(g.mass);
  const ActionGroup& root = groups.by_action[roulette_index(masses, rng)];

  // Branches sharing a prefix may disagree when j's behaviour is not a
  // single deterministic tree; each branch draw is restricted to paths that
  // agree with the branches already placed.
  PolicyTree partial(groups.depth, groups.branching);
  std::vector<PolicyPath> chosen;
  for (const auto& group : root.by_obs) {
    std::vector<const PolicyPath*> candidates;
    std::vector<double> weights;
    for (const auto& p : group.paths) {
      if (consistent_with(partial, p)) {
        candidates.push_back(&p);
        weights.push_back(p.weight);
      }
    }
    if (candidates.empty()) continue;
    const PolicyPath& pick = *candidates[roulette_index(weights, rng)];
    walk_branch(pick, groups.branching,
                [&](std::size_t node, Action a) { partial.set(node, a); });
    chosen.push_back(pick);
  }
  return graphing(chosen, groups.depth, groups.branching);
}

std::vector<PolicyTree> reconstruct_trees(const InteractionHistory& history,
                                          int depth, std::size_t count,
                                          const DomainSpec& spec,
                                          RandomSource& rng) {
  if (count < 1) throw ConfigError("reconstruct_trees: m must be >= 1");
  const GroupedPaths groups = union_paths(split(history, depth), spec);
  std::vector<PolicyTree> trees;
  trees.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    trees.push_back(sample_incomplete_tree(groups, rng));
  }
  return trees;
}

std::vector<PolicyPath> paths_of(const PolicyTree& tree) {
  if (!tree.complete()) {
    throw ConfigError("paths_of: tree must be complete");
  }
  const int b = tree.branching();
  const std::size_t leaves_begin = level_begin(b, tree.depth());
  const std::size_t leaves = tree.size() - leaves_begin;
  std::vector<PolicyPath> paths;
  paths.reserve(leaves);
  for (std::size_t leaf = leaves_begin; leaf < tree.size(); ++leaf) {
    std::vector<std::size_t> chain{leaf};
    while (chain.back() != 0) chain.push_back(parent_of(chain.back(), b));
    std::reverse(chain.begin(), chain.end());
    PolicyPath path;
    for (std::size_t t = 0; t < chain.size(); ++t) {
      const int obs =
          t + 1 < chain.size() ? edge_observation(chain[t + 1], b) : 0;
      path.steps.push_back({tree.at(chain[t]), obs});
    }
    path.count = 1;
    path.weight = 1.0 / static_cast<double>(leaves);
    paths.push_back(std::move(path));
  }
  return paths;
}

}  // namespace veb
