#include "veb/selection.hpp"

#include <algorithm>
#include <cmath>

#include "veb/error.hpp"
#include "veb/vae.hpp"

namespace veb {

std::string_view to_string(MetricKind kind) {
  return kind == MetricKind::kMdf ? "mdf" : "icd";
}

MetricKind parse_metric(std::string_view name) {
  if (name == "mdf" || name == "MDF") return MetricKind::kMdf;
  if (name == "icd" || name == "ICD") return MetricKind::kIcd;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

void CandidateSet::validate() const {
  if (!provenance.empty() && provenance.size() != trees.size()) {
    throw MetricError("candidate provenance does not match the tree count");
  }
  for (const auto& t : trees) {
    if (t.depth() != trees.front().depth() ||
        t.branching() != trees.front().branching()) {
      throw MetricError("candidate trees do not share one shape");
    }
    if (!t.complete()) throw MetricError("candidate tree is incomplete");
  }
}

// ------------------------------------------------------------------- MDF ---

namespace {

// Root prefix (a1, o1, ..., a_t) of `node`.
std::vector<int> prefix_of(const PolicyTree& tree, std::size_t node) {
  std::vector<int> reversed;
  const int b = tree.branching();
  std::size_t n = node;
  reversed.push_back(tree.at(n));
  while (n != 0) {
    reversed.push_back(edge_observation(n, b));
    n = parent_of(n, b);
    reversed.push_back(tree.at(n));
  }
  return {reversed.rbegin(), reversed.rend()};
}

template <class Fn>
void for_each_item(const PolicyTree& tree, Fn&& fn) {
  const int b = tree.branching();
  for (int t = 1; t <= tree.depth(); ++t) {
    const std::size_t begin = level_begin(b, t);
    const std::size_t end = level_begin(b, t + 1);
    for (std::size_t n = begin; n < end; ++n) {
      fn(t - 1, prefix_of(tree, n), tree.subtree(n));
    }
  }
}

void check_tree(const PolicyTree& tree, int depth, int branching) {
  if (!tree.complete()) throw MetricError("MDF needs complete trees");
  if (depth && (tree.depth() != depth || tree.branching() != branching)) {
    throw MetricError("MDF trees do not share one shape");
  }
}

}  // namespace

void MdfCounter::add(const PolicyTree& tree) {
  check_tree(tree, depth_, branching_);
  if (!depth_) {
    depth_ = tree.depth();
    branching_ = tree.branching();
    prefixes_.resize(static_cast<std::size_t>(depth_));
    frames_.resize(static_cast<std::size_t>(depth_));
  }
  for_each_item(tree, [&](int level, std::vector<int> prefix, std::vector<int> frame) {
    prefixes_[static_cast<std::size_t>(level)].insert(std::move(prefix));
    frames_[static_cast<std::size_t>(level)].insert(std::move(frame));
  });
}

double MdfCounter::value() const {
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t t = 0; t < prefixes_.size(); ++t) {
    total += static_cast<double>(prefixes_[t].size() + frames_[t].size()) / discount;
    discount *= branching_;
  }
  return total;
}

double MdfCounter::value_with(const PolicyTree& tree) const {
  check_tree(tree, depth_, branching_);
  if (!depth_) {
    MdfCounter fresh;
    fresh.add(tree);
    return fresh.value();
  }
  std::vector<std::size_t> extra(static_cast<std::size_t>(depth_), 0);
  std::vector<std::set<std::vector<int>>> new_prefixes(extra.size());
  std::vector<std::set<std::vector<int>>> new_frames(extra.size());
  for_each_item(tree, [&](int level, std::vector<int> prefix, std::vector<int> frame) {
    const auto l = static_cast<std::size_t>(level);
    if (!prefixes_[l].count(prefix) && new_prefixes[l].insert(std::move(prefix)).second) {
      ++extra[l];
    }
    if (!frames_[l].count(frame) && new_frames[l].insert(std::move(frame)).second) {
      ++extra[l];
    }
  });
  double total = value();
  double discount = 1.0;
  for (std::size_t t = 0; t < extra.size(); ++t) {
    total += static_cast<double>(extra[t]) / discount;
    discount *= branching_;
  }
  return total;
}

double mdf(std::span<const PolicyTree> trees) {
  if (trees.empty()) throw MetricError("MDF of an empty set");
  MdfCounter counter;
  for (const auto& t : trees) counter.add(t);
  return counter.value();
}

// ------------------------------------------------------------------- ICD ---

double icd(const PolicyTree& tree) {
  const auto& probs = tree.node_probs();
  if (!probs) throw MetricError("ICD needs node probabilities");
  double total = 0.0;
  for (std::size_t n = 0; n < tree.size(); ++n) {
    const double p = (*probs)[n];
    if (!(p > 0.0 && p <= 1.0)) {
      throw MetricError("node probability outside (0, 1]");
    }
    const int h = node_height(n + 1, tree.depth(), tree.branching());
    total -= std::log(1.0 + h) * p * std::log(p);
  }
  return total;
}

double icd(std::span<const PolicyTree> trees) {
  double total = 0.0;
  for (const auto& t : trees) total += icd(t);
  return total;
}

double score(std::span<const PolicyTree> trees, MetricKind kind) {
  return kind == MetricKind::kMdf ? mdf(trees) : icd(trees);
}

// ------------------------------------------------------------- selection ---

std::uint64_t binomial(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // Exact: each partial product C(n - k + i, i) is an integer.
  __extension__ using u128 = unsigned __int128;
  u128 value = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    value = value * (n - k + i) / i;
    if (value > cap) return cap;
  }
  return static_cast<std::uint64_t>(value);
}

std::vector<std::size_t> greedy_order(std::span<const PolicyTree> candidates,
                                      std::size_t count, MetricKind metric) {
  if (count > candidates.size()) throw ConfigError("greedy_order: count > n");
  std::vector<bool> taken(candidates.size(), false);
  std::vector<std::size_t> order;
  order.reserve(count);

  if (metric == MetricKind::kIcd) {
    // Additive score: the marginal gain of a tree is its own ICD.
    std::vector<double> own(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) own[i] = icd(candidates[i]);
    while (order.size() < count) {
      std::size_t best = candidates.size();
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!taken[i] && (best == candidates.size() || own[i] > own[best])) best = i;
      }
      taken[best] = true;
      order.push_back(best);
    }
    return order;
  }

  MdfCounter counter;
  while (order.size() < count) {
    std::size_t best = candidates.size();
    double best_value = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (taken[i]) continue;
      const double v = counter.value_with(candidates[i]);
      if (best == candidates.size() || v > best_value) {
        best = i;
        best_value = v;
      }
    }
    taken[best] = true;
    counter.add(candidates[best]);
    order.push_back(best);
  }
  return order;
}

Selection top_k(std::span<const PolicyTree> candidates, std::size_t k,
                MetricKind metric, SelectMode mode) {
  if (k < 1 || k > candidates.size()) {
    throw ConfigError("top_k: K=" + std::to_string(k) + " outside [1, " +
                      std::to_string(candidates.size()) + "]");
  }
  Selection out;
  if (mode == SelectMode::kGreedy) {
    out.indices = greedy_order(candidates, k, metric);
    std::sort(out.indices.begin(), out.indices.end());
  } else {
    if (binomial(candidates.size(), k, kExhaustiveBudget + 1) > kExhaustiveBudget) {
      throw SizeError("top_k: exhaustive search over C(" +
                      std::to_string(candidates.size()) + ", " +
                      std::to_string(k) + ") subsets exceeds the budget");
    }
    std::vector<std::size_t> combo(k);
    for (std::size_t i = 0; i < k; ++i) combo[i] = i;
    std::vector<PolicyTree> subset;
    bool first = true;
    while (true) {
      subset.clear();
      for (std::size_t i : combo) subset.push_back(candidates[i]);
      const double s = score(subset, metric);
      if (first || s > out.score) {
        out.indices = combo;
        out.score = s;
        first = false;
      }
      // Next combination in lexicographic order.
      std::size_t i = k;
      while (i > 0 && combo[i - 1] == candidates.size() - k + i - 1) --i;
      if (i == 0) break;
      ++combo[i - 1];
      for (std::size_t j = i; j < k; ++j) combo[j] = combo[j - 1] + 1;
    }
    return out;
  }
  std::vector<PolicyTree> chosen;
  for (std::size_t i : out.indices) chosen.push_back(candidates[i]);
  out.score = score(chosen, metric);
  return out;
}

}  // namespace veb
