#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace veb {

// Agent actions are 0-based indices into the domain's action list. kEmpty is
// the "no action observed" marker used by incomplete trees.
using Action = int;
inline constexpr Action kEmpty = -1;

// Geometry of a full `branching`-ary tree of `depth` levels stored in level
// order. Node indices are 0-based; depths are 1-based (root has depth 1).
std::size_t tree_node_count(int branching, int depth);
std::size_t level_begin(int branching, int depth);
int node_depth(std::size_t node, int branching);
std::size_t child_of(std::size_t node, int branching, int observation);
std::size_t parent_of(std::size_t node, int branching);
// Observation on the edge entering `node` (node must not be the root).
int edge_observation(std::size_t node, int branching);

// A policy tree of one agent: actions on nodes, observations on edges. Node
// probabilities are carried only by trees decoded from a generative model.
class PolicyTree {
 public:
  PolicyTree(int depth, int branching);
  PolicyTree(int depth, int branching, std::vector<Action> nodes,
             std::optional<std::vector<double>> node_probs = std::nullopt);

  int depth() const { return depth_; }
  int branching() const { return branching_; }
  std::size_t size() const { return nodes_.size(); }

  Action at(std::size_t node) const { return nodes_.at(node); }
  void set(std::size_t node, Action action) { nodes_.at(node) = action; }
  const std::vector<Action>& nodes() const { return nodes_; }

  std::size_t child(std::size_t node, int observation) const {
    return child_of(node, branching_, observation);
  }
  bool is_leaf(std::size_t node) const {
    return node >= level_begin(branching_, depth_);
  }

  // True iff no node is EMPTY.
  bool complete() const;
  // True iff no EMPTY node has a non-EMPTY descendant.
  bool well_formed() const;

  const std::optional<std::vector<double>>& node_probs() const {
    return node_probs_;
  }
  void set_node_probs(std::vector<double> probs);
  void clear_node_probs() { node_probs_.reset(); }

  // Structural equality: shape and node actions. Node probabilities are
  // annotations and do not participate.
  friend bool operator==(const PolicyTree& a, const PolicyTree& b) {
    return a.depth_ == b.depth_ && a.branching_ == b.branching_ &&
           a.nodes_ == b.nodes_;
  }

  // The complete sub-tree rooted at `node`, in level order.
  std::vector<Action> subtree(std::size_t node) const;

 private:
  int depth_;
  int branching_;
  std::vector<Action> nodes_;
  std::optional<std::vector<double>> node_probs_;
};

// Plain-text tree format:
//   T=<depth> branch=<branching>
//   <level-order actions, "-" for EMPTY>
//   [p <per-node probabilities>]
// Trees in a set file are separated by blank lines; lines starting with '#'
// are comments.
void write_tree(std::ostream& out, const PolicyTree& tree);
PolicyTree read_tree(std::istream& in);
void write_trees(std::ostream& out, std::span<const PolicyTree> trees);
std::vector<PolicyTree> read_trees(std::istream& in);
std::string to_string(const PolicyTree& tree);

// Edge list for graph tools: one "parent obs child action" line per edge
// into a non-EMPTY node, preceded by a "# root 0 <action>" comment.
void write_tree_graph(std::ostream& out, const PolicyTree& tree,
                      std::span<const std::string> action_names = {},
                      std::span<const std::string> observation_names = {});

}  // namespace veb
