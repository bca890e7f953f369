#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "veb/domain.hpp"
#include "veb/policy_tree.hpp"
#include "veb/random.hpp"

namespace veb {

// Explicit weighted set of opponent models.
struct ModelNodePrior {
  std::vector<PolicyTree> trees;
  std::vector<double> weights;

  static ModelNodePrior uniform(std::vector<PolicyTree> trees);
  // Throws ConfigError unless weights sum to 1 and every tree is complete,
  // has depth `depth` and uses j's actions and observations.
  void validate(const DomainSpec& spec, int depth) const;
};

// Agent i's plan: a tree over i's own observations (its actions along any
// history are fixed by the plan itself). Unreachable branches hold action 0.
struct BestResponsePolicy {
  PolicyTree plan;
  double value = 0.0;
};

inline constexpr double kBestResponseBudget = 1e7;

// Exact finite-horizon best response by backward induction over i's
// action-observation histories. The interactive belief over
// (state, opponent tree, node in that tree) is filtered by Bayes' rule;
// j's node advances on j's own observation, which i marginalizes out.
// Ties go to the lowest action index.
BestResponsePolicy best_response(const DomainSpec& spec,
                                 const ModelNodePrior& prior, int depth);

// One simultaneous-move episode of `depth` steps; returns i's summed reward.
double simulate_episode(const DomainSpec& spec, const BestResponsePolicy& policy,
                        const PolicyTree& j_tree, int depth, RandomSource& rng);

struct RewardStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t runs = 0;
};

RewardStats average_reward(const DomainSpec& spec,
                           const BestResponsePolicy& policy,
                           const PolicyTree& j_true, std::size_t runs,
                           int depth, RandomSource& rng);

struct MethodPrior {
  std::string method;
  std::size_t k = 0;
  std::string metric;  // "mdf", "icd" or "none"
  ModelNodePrior prior;
};

struct ReportRow {
  std::string method;
  std::size_t k = 0;
  std::string metric;
  double mean_reward = 0.0;
  double std_error = 0.0;
  double solve_seconds = 0.0;
  double eval_seconds = 0.0;
  double value = 0.0;  // best-response value against the method's own prior
};

// For each method: best response to its prior, then `runs` episodes against
// j_true. Every method replays the same episode seed.
std::vector<ReportRow> evaluate_pipeline(const DomainSpec& spec,
                                         std::span<const MethodPrior> methods,
                                         const PolicyTree& j_true, int depth,
                                         std::size_t runs, std::uint64_t seed);

}  // namespace veb
