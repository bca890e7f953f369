#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "veb/policy_tree.hpp"

namespace veb {

struct TreeShape {
  int num_actions = 0;  // |A_j|, not counting EMPTY
  int branching = 0;    // |Omega_j|
  int depth = 0;        // T

  std::size_t nodes() const { return tree_node_count(branching, depth); }
  std::size_t block() const { return static_cast<std::size_t>(num_actions) + 1; }
  // (|A_j| + 1) * (|Omega|^T - 1) / (|Omega| - 1)
  std::size_t dim() const { return block() * nodes(); }

  friend bool operator==(const TreeShape&, const TreeShape&) = default;
};

enum class EncodingKind { kBinary, kProb };

struct EncodedTree {
  TreeShape shape;
  EncodingKind kind = EncodingKind::kBinary;
  std::vector<double> values;
};

// The EMPTY-augmented action alphabet {a0, a1, ..., a_|A|}; slot 0 is EMPTY
// and action k occupies slot k + 1.
class ActionAlphabet {
 public:
  explicit ActionAlphabet(int num_actions);

  int num_actions() const { return num_actions_; }
  std::size_t size() const { return static_cast<std::size_t>(num_actions_) + 1; }
  std::size_t slot(Action a) const;
  Action action_at(std::size_t slot) const;
  // Unit vector of length size() for action `a`.
  std::vector<double> row(Action a) const;

 private:
  int num_actions_;
};

// Level-order node n occupies block n of the vector; EMPTY encodes as a0.
EncodedTree zzoh_encode(const PolicyTree& tree, const ActionAlphabet& alphabet);

// Exact inverse of zzoh_encode. Throws CodecError unless every block holds a
// single 1 and zeros elsewhere.
PolicyTree zzoh_decode(const EncodedTree& x, const ActionAlphabet& alphabet);

bool is_valid_binary(const EncodedTree& x);

// Whether projection may pick the EMPTY slot.
enum class EmptySlot { kPermit, kForbid };

struct Projection {
  EncodedTree binary;
  // Per node: winning entry divided by the sum of the competing entries.
  std::vector<double> node_probs;
};

// Per block, the largest entry becomes 1 and the rest 0; ties go to the
// lowest slot. A block whose competing entries sum to zero raises
// CodecError.
Projection onehot_project(const EncodedTree& x, const ActionAlphabet& alphabet,
                          EmptySlot empty = EmptySlot::kPermit);

// Matrix file: a "ZZOH actions=<A> branch=<O> depth=<T> kind=<binary|prob>"
// header then one whitespace-separated row per tree. '#' lines are comments.
void write_encoded(std::ostream& out, std::span<const EncodedTree> rows);
std::vector<EncodedTree> read_encoded(std::istream& in);

}  // namespace veb
