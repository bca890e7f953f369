#include "veb/codec.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "veb/error.hpp"

namespace veb {

ActionAlphabet::ActionAlphabet(int num_actions) : num_actions_(num_actions) {
  if (num_actions < 1) throw ConfigError("alphabet needs at least one action");
}

std::size_t ActionAlphabet::slot(Action a) const {
  if (a == kEmpty) return 0;
  if (a < 0 || a >= num_actions_) {
    throw CodecError("action " + std::to_string(a) + " outside the alphabet");
  }
  return static_cast<std::size_t>(a) + 1;
}

Action ActionAlphabet::action_at(std::size_t slot) const {
  if (slot >= size()) throw CodecError("slot outside the alphabet");
  return slot == 0 ? kEmpty : static_cast<Action>(slot - 1);
}

std::vector<double> ActionAlphabet::row(Action a) const {
  std::vector<double> r(size(), 0.0);
  r[slot(a)] = 1.0;
  return r;
}

EncodedTree zzoh_encode(const PolicyTree& tree, const ActionAlphabet& alphabet) {
  EncodedTree x;
  x.shape = {alphabet.num_actions(), tree.branching(), tree.depth()};
  x.kind = EncodingKind::kBinary;
  x.values.assign(x.shape.dim(), 0.0);
  const std::size_t block = x.shape.block();
  for (std::size_t n = 0; n < tree.size(); ++n) {
    x.values[n * block + alphabet.slot(tree.at(n))] = 1.0;
  }
  return x;
}

bool is_valid_binary(const EncodedTree& x) {
  const std::size_t block = x.shape.block();
  if (x.values.size() != x.shape.dim()) return false;
  for (std::size_t n = 0; n < x.shape.nodes(); ++n) {
    int ones = 0;
    for (std::size_t k = 0; k < block; ++k) {
      const double v = x.values[n * block + k];
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

PolicyTree zzoh_decode(const EncodedTree& x, const ActionAlphabet& alphabet) {
  if (x.shape.num_actions != alphabet.num_actions()) {
    throw CodecError("encoded tree was built for a different action set");
  }
  if (x.values.size() != x.shape.dim()) {
    throw CodecError("encoded length " + std::to_string(x.values.size()) +
                     " does not match D=" + std::to_string(x.shape.dim()));
  }
  const std::size_t block = x.shape.block();
  std::vector<Action> nodes(x.shape.nodes(), kEmpty);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    std::size_t hot = block;
    for (std::size_t k = 0; k < block; ++k) {
      const double v = x.values[n * block + k];
      if (v == 1.0) {
        if (hot != block) {
          throw CodecError("block " + std::to_string(n) + " has several 1s");
        }
        hot = k;
      } else if (v != 0.0) {
        throw CodecError("block " + std::to_string(n) + " is not binary");
      }
    }
    if (hot == block) {
      throw CodecError("block " + std::to_string(n) + " has no 1");
    }
    nodes[n] = alphabet.action_at(hot);
  }
  return PolicyTree(x.shape.depth, x.shape.branching, std::move(nodes));
}

Projection onehot_project(const EncodedTree& x, const ActionAlphabet& alphabet,
                          EmptySlot empty) {
  if (x.values.size() != x.shape.dim()) {
    throw CodecError("projection input has the wrong length");
  }
  if (x.shape.num_actions != alphabet.num_actions()) {
    throw CodecError("projection input was built for a different action set");
  }
  const std::size_t block = x.shape.block();
  const std::size_t first = empty == EmptySlot::kForbid ? 1 : 0;
  Projection out;
  out.binary.shape = x.shape;
  out.binary.kind = EncodingKind::kBinary;
  out.binary.values.assign(x.values.size(), 0.0);
  out.node_probs.resize(x.shape.nodes());
  for (std::size_t n = 0; n < x.shape.nodes(); ++n) {
    const double* v = &x.values[n * block];
    std::size_t best = first;
    double sum = 0.0;
    for (std::size_t k = first; k < block; ++k) {
      sum += v[k];
      if (v[k] > v[best]) best = k;
    }
    if (!(sum > 0.0)) {
      throw CodecError("projection block " + std::to_string(n) +
                       " sums to zero");
    }
    out.binary.values[n * block + best] = 1.0;
    out.node_probs[n] = v[best] / sum;
  }
  return out;
}

void write_encoded(std::ostream& out, std::span<const EncodedTree> rows) {
  if (rows.empty()) return;
  const TreeShape& shape = rows.front().shape;
  out << "ZZOH actions=" << shape.num_actions << " branch=" << shape.branching
      << " depth=" << shape.depth << " kind="
      << (rows.front().kind == EncodingKind::kBinary ? "binary" : "prob")
      << '\n';
  std::ostringstream line;
  line.precision(17);
  for (const auto& row : rows) {
    if (!(row.shape == shape)) {
      throw CodecError("all rows of a matrix file must share one shape");
    }
    line.str("");
    for (std::size_t k = 0; k < row.values.size(); ++k) {
      if (k) line << ' ';
      line << row.values[k];
    }
    out << line.str() << '\n';
  }
}

std::vector<EncodedTree> read_encoded(std::istream& in) {
  std::vector<EncodedTree> rows;
  std::string line;
  TreeShape shape;
  EncodingKind kind = EncodingKind::kBinary;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      char kind_name[16] = {0};
      if (std::sscanf(line.c_str(), "ZZOH actions=%d branch=%d depth=%d kind=%15s",
                      &shape.num_actions, &shape.branching, &shape.depth,
                      kind_name) != 4) {
        throw IoError("bad encoded-matrix header: '" + line + "'");
      }
      kind = std::string(kind_name) == "prob" ? EncodingKind::kProb
                                              : EncodingKind::kBinary;
      header = true;
      continue;
    }
    EncodedTree row{shape, kind, {}};
    std::istringstream values(line);
    double v = 0.0;
    while (values >> v) row.values.push_back(v);
    if (row.values.size() != shape.dim()) {
      throw IoError("encoded row has " + std::to_string(row.values.size()) +
                    " entries, expected " + std::to_string(shape.dim()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace veb
