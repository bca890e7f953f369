#include "veb/policy_tree.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "veb/error.hpp"

namespace veb {

namespace {

void check_shape(int depth, int branching) {
  if (depth < 1) throw ConfigError("policy tree depth must be >= 1");
  if (branching < 1) throw ConfigError("policy tree branching must be >= 1");
}

bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

std::size_t level_begin(int branching, int depth) {
  std::size_t begin = 0;
  std::size_t width = 1;
  for (int c = 1; c < depth; ++c) {
    begin += width;
    width *= static_cast<std::size_t>(branching);
  }
  return begin;
}

std::size_t tree_node_count(int branching, int depth) {
  return level_begin(branching, depth + 1);
}

int node_depth(std::size_t node, int branching) {
  int depth = 1;
  std::size_t begin = 0;
  std::size_t width = 1;
  while (node >= begin + width) {
    begin += width;
    width *= static_cast<std::size_t>(branching);
    ++depth;
  }
  return depth;
}

std::size_t child_of(std::size_t node, int branching, int observation) {
  return node * static_cast<std::size_t>(branching) + 1 +
         static_cast<std::size_t>(observation);
}

std::size_t parent_of(std::size_t node, int branching) {
  return (node - 1) / static_cast<std::size_t>(branching);
}

int edge_observation(std::size_t node, int branching) {
  return static_cast<int>((node - 1) % static_cast<std::size_t>(branching));
}

PolicyTree::PolicyTree(int depth, int branching)
    : depth_(depth), branching_(branching) {
  check_shape(depth, branching);
  nodes_.assign(tree_node_count(branching, depth), kEmpty);
}

PolicyTree::PolicyTree(int depth, int branching, std::vector<Action> nodes,
                       std::optional<std::vector<double>> node_probs)
    : depth_(depth), branching_(branching), nodes_(std::move(nodes)) {
  check_shape(depth, branching);
  if (nodes_.size() != tree_node_count(branching, depth)) {
    throw ConfigError("policy tree node count " +
                      std::to_string(nodes_.size()) + " does not match T=" +
                      std::to_string(depth) +
                      " branch=" + std::to_string(branching));
  }
  if (node_probs) set_node_probs(std::move(*node_probs));
}

bool PolicyTree::complete() const {
  for (Action a : nodes_) {
    if (a == kEmpty) return false;
  }
  return true;
}

bool PolicyTree::well_formed() const {
  for (std::size_t n = 1; n < nodes_.size(); ++n) {
    if (nodes_[n] != kEmpty && nodes_[parent_of(n, branching_)] == kEmpty) {
      return false;
    }
  }
  return true;
}

void PolicyTree::set_node_probs(std::vector<double> probs) {
  if (probs.size() != nodes_.size()) {
    throw ConfigError("node_probs length does not match node count");
  }
  node_probs_ = std::move(probs);
}

std::vector<Action> PolicyTree::subtree(std::size_t node) const {
  std::vector<Action> out;
  std::vector<std::size_t> level{node};
  const int levels = depth_ - node_depth(node, branching_) + 1;
  for (int l = 0; l < levels; ++l) {
    std::vector<std::size_t> next;
    next.reserve(level.size() * static_cast<std::size_t>(branching_));
    for (std::size_t n : level) {
      out.push_back(nodes_[n]);
      if (l + 1 < levels) {
        for (int o = 0; o < branching_; ++o) next.push_back(child(n, o));
      }
    }
    level = std::move(next);
  }
  return out;
}

void write_tree(std::ostream& out, const PolicyTree& tree) {
  out << "T=" << tree.depth() << " branch=" << tree.branching() << '\n';
  for (std::size_t n = 0; n < tree.size(); ++n) {
    if (n) out << ' ';
    if (tree.at(n) == kEmpty) {
      out << '-';
    } else {
      out << tree.at(n);
    }
  }
  out << '\n';
  if (const auto& probs = tree.node_probs()) {
    std::ostringstream line;
    line.precision(17);
    line << 'p';
    for (double p : *probs) line << ' ' << p;
    out << line.str() << '\n';
  }
}

namespace {

std::vector<std::string> content_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (next_content_line(in, line)) lines.push_back(line);
  return lines;
}

PolicyTree parse_tree(const std::vector<std::string>& lines, std::size_t& pos) {
  int depth = 0;
  int branching = 0;
  const std::string& header = lines[pos++];
  if (std::sscanf(header.c_str(), "T=%d branch=%d", &depth, &branching) != 2) {
    throw IoError("bad tree header: '" + header + "'");
  }
  if (pos >= lines.size()) throw IoError("tree header without nodes");
  std::vector<Action> nodes;
  std::istringstream tokens(lines[pos++]);
  std::string tok;
  while (tokens >> tok) {
    if (tok == "-") {
      nodes.push_back(kEmpty);
      continue;
    }
    try {
      nodes.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw IoError("bad tree node token '" + tok + "'");
    }
  }
  std::optional<std::vector<double>> probs;
  if (pos < lines.size() && lines[pos].rfind("p ", 0) == 0) {
    std::istringstream ps(lines[pos++].substr(2));
    std::vector<double> values;
    double v = 0.0;
    while (ps >> v) values.push_back(v);
    probs = std::move(values);
  }
  try {
    return PolicyTree(depth, branching, std::move(nodes), std::move(probs));
  } catch (const ConfigError& e) {
    throw IoError(std::string("malformed tree: ") + e.what());
  }
}

}  // namespace

PolicyTree read_tree(std::istream& in) {
  const auto lines = content_lines(in);
  if (lines.empty()) throw IoError("no tree in input");
  std::size_t pos = 0;
  return parse_tree(lines, pos);
}

void write_trees(std::ostream& out, std::span<const PolicyTree> trees) {
  for (std::size_t i = 0; i < trees.size(); ++i) {
    if (i) out << '\n';
    write_tree(out, trees[i]);
  }
}

std::vector<PolicyTree> read_trees(std::istream& in) {
  const auto lines = content_lines(in);
  std::vector<PolicyTree> trees;
  std::size_t pos = 0;
  while (pos < lines.size()) trees.push_back(parse_tree(lines, pos));
  return trees;
}

std::string to_string(const PolicyTree& tree) {
  std::ostringstream out;
  write_tree(out, tree);
  return out.str();
}

void write_tree_graph(std::ostream& out, const PolicyTree& tree,
                      std::span<const std::string> action_names,
                      std::span<const std::string> observation_names) {
  auto action_label = [&](Action a) -> std::string {
    if (a == kEmpty) return "-";
    if (static_cast<std::size_t>(a) < action_names.size()) {
      return action_names[static_cast<std::size_t>(a)];
    }
    return std::to_string(a);
  };
  auto obs_label = [&](int o) -> std::string {
    if (static_cast<std::size_t>(o) < observation_names.size()) {
      return observation_names[static_cast<std::size_t>(o)];
    }
    return std::to_string(o);
  };
  out << "# root 0 " << action_label(tree.at(0)) << '\n';
  for (std::size_t n = 1; n < tree.size(); ++n) {
    if (tree.at(n) == kEmpty) continue;
    const int b = tree.branching();
    out << parent_of(n, b) << ' ' << obs_label(edge_observation(n, b)) << ' '
        << n << ' ' << action_label(tree.at(n)) << '\n';
  }
}

}  // namespace veb
