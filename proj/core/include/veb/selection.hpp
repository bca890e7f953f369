#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veb/policy_tree.hpp"

namespace veb {

enum class MetricKind { kMdf, kIcd };
enum class SelectMode { kExhaustive, kGreedy };

std::string_view to_string(MetricKind kind);
MetricKind parse_metric(std::string_view name);

struct Provenance {
  std::uint64_t seed = 0;
  std::size_t source_index = 0;
};

// Generated trees eligible for top-K selection.
struct CandidateSet {
  std::vector<PolicyTree> trees;
  std::vector<Provenance> provenance;

  // Throws MetricError unless all trees share one shape and are complete.
  void validate() const;
};

// Incremental MDF: per depth t, the distinct root prefixes
// (a1, o1, ..., a_t) and the distinct frames (complete sub-trees rooted at a
// depth-t node) seen so far.
class MdfCounter {
 public:
  void add(const PolicyTree& tree);
  // MDF of the accumulated set plus `tree`, without modifying the counter.
  double value_with(const PolicyTree& tree) const;
  double value() const;

 private:
  int depth_ = 0;
  int branching_ = 0;
  std::vector<std::set<std::vector<int>>> prefixes_;
  std::vector<std::set<std::vector<int>>> frames_;
};

// sum_t (Diff(h_t) + Diff(H_t)) / |Omega|^(t-1).
double mdf(std::span<const PolicyTree> trees);

// -sum_trees sum_n log(1 + h(n)) p_n log p_n over node probabilities.
double icd(std::span<const PolicyTree> trees);
double icd(const PolicyTree& tree);

double score(std::span<const PolicyTree> trees, MetricKind kind);

struct Selection {
  std::vector<std::size_t> indices;  // ascending
  double score = 0.0;
};

inline constexpr std::uint64_t kExhaustiveBudget = 1000000;

// Exhaustive mode returns a true argmax over all size-K subsets (the first
// in lexicographic order among ties) and needs C(n, K) <= 10^6. Greedy mode
// adds the candidate with the largest marginal gain, lowest index on ties.
Selection top_k(std::span<const PolicyTree> candidates, std::size_t k,
                MetricKind metric, SelectMode mode = SelectMode::kGreedy);

// Candidate indices in greedy pick order; the first K entries are the greedy
// top-K set for every K <= count.
std::vector<std::size_t> greedy_order(std::span<const PolicyTree> candidates,
                                      std::size_t count, MetricKind metric);

std::uint64_t binomial(std::uint64_t n, std::uint64_t k,
                       std::uint64_t cap = UINT64_MAX);

}  // namespace veb
