#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "veb/domain.hpp"
#include "veb/policy_tree.hpp"
#include "veb/random.hpp"

namespace veb {

// One length-T segment of the history together with its probability mass
// count * T / L.
struct PolicyPath {
  std::vector<HistoryStep> steps;
  std::size_t count = 0;
  double weight = 0.0;

  Action root_action() const { return steps.front().action; }
  // The T-1 observations that select the tree branch.
  std::vector<int> branch_observations() const;
};

// Distinct segments in order of first appearance.
struct PathSet {
  int depth = 0;
  std::size_t history_length = 0;
  std::vector<PolicyPath> entries;

  double total_mass() const;
};

struct ObservationGroup {
  std::vector<int> observations;
  double mass = 0.0;
  std::vector<PolicyPath> paths;
};

struct ActionGroup {
  Action action = 0;
  double mass = 0.0;
  std::vector<ObservationGroup> by_obs;  // sorted by observation sequence
};

struct GroupedPaths {
  int depth = 0;
  int branching = 0;
  std::vector<ActionGroup> by_action;  // sorted by action

  double total_mass() const;
  const ActionGroup* find(Action a) const;
};

// Cuts the history into floor(L/T) consecutive non-overlapping segments
// starting at step 1 and merges duplicates. Trailing L mod T steps are
// dropped.
PathSet split(const InteractionHistory& history, int depth);

// Groups paths by root action, then by the branch observation sequence.
GroupedPaths union_paths(const PathSet& paths, const DomainSpec& spec);

// Cumulative-sum roulette wheel with an inclusive boundary: returns the
// first index whose running weight reaches draw * sum(weights). Items with
// zero weight are never returned.
std::size_t roulette_index(std::span<const double> weights, double draw);
std::size_t roulette_index(std::span<const double> weights, RandomSource& rng);

template <class Item>
const Item& roulette(std::span<const Item> items,
                     std::span<const double> weights, RandomSource& rng) {
  return items[roulette_index(weights, rng)];
}

// Places every path on its branch of one tree. Paths must share their root
// action; two paths that disagree about a node raise InconsistentPathsError.
PolicyTree graphing(std::span<const PolicyPath> paths, int depth,
                    int branching);

// Draws one possibly-incomplete tree: a root action by roulette over the
// action masses, then one path per observed branch by roulette over path
// masses.
PolicyTree sample_incomplete_tree(const GroupedPaths& groups,
                                  RandomSource& rng);

std::vector<PolicyTree> reconstruct_trees(const InteractionHistory& history,
                                          int depth, std::size_t count,
                                          const DomainSpec& spec,
                                          RandomSource& rng);

// Root-to-leaf decomposition of a complete tree. The final observation of
// each path is 0 and weights are uniform.
std::vector<PolicyPath> paths_of(const PolicyTree& tree);

}  // namespace veb
