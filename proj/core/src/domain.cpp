#include "veb/domain.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "veb/error.hpp"

namespace veb {

namespace {

void check_distribution(const std::vector<double>& table, std::size_t rows,
                        std::size_t width, const char* what, double tol) {
  if (table.size() != rows * width) {
    throw ConfigError(std::string(what) + " table has wrong size");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      const double p = table[r * width + c];
      if (!(p >= 0.0) || p > 1.0 + tol) {
        throw ConfigError(std::string(what) + " entry outside [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw ConfigError(std::string(what) + " row " + std::to_string(r) +
                        " sums to " + std::to_string(sum));
    }
  }
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string(name) + " must be a probability in [0,1]");
  }
}

void check_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw ConfigError(std::string(name) + " must be finite");
  }
}

}  // namespace

void DomainSpec::validate(double tol) const {
  const std::size_t S = states.size();
  const std::size_t Ai = actions_i.size();
  const std::size_t Aj = actions_j.size();
  if (S == 0 || Ai == 0 || Aj == 0 || observations_i.empty() ||
      observations_j.empty()) {
    throw ConfigError("domain '" + name + "' has an empty set");
  }
  check_distribution(transition, S * Ai * Aj, S, "transition", tol);
  check_distribution(observation_i, S * Ai * Aj, observations_i.size(),
                     "observation_i", tol);
  check_distribution(observation_j, S * Aj, observations_j.size(),
                     "observation_j", tol);
  check_distribution(initial_belief, 1, S, "initial_belief", tol);
  if (reward_i.size() != S * Ai * Aj) {
    throw ConfigError("reward table has wrong size");
  }
  for (double r : reward_i) check_finite(r, "reward");
}

// ---------------------------------------------------------------- Tiger ---

DomainSpec tiger_spec(const TigerParams& params) {
  using namespace tiger;
  check_probability(params.listen_accuracy, "listen_accuracy");
  check_probability(params.creak_accuracy, "creak_accuracy");
  check_finite(params.listen_reward, "listen_reward");
  check_finite(params.gold_reward, "gold_reward");
  check_finite(params.tiger_penalty, "tiger_penalty");
  check_finite(params.shared_gold_reward, "shared_gold_reward");

  DomainSpec d;
  d.name = "tiger";
  d.states = {"tiger-left", "tiger-right"};
  d.actions_i = {"OL", "OR", "L"};
  d.actions_j = d.actions_i;
  d.observations_j = {"GL", "GR"};
  const std::vector<std::string> creaks = {"CL", "CR", "S"};
  for (const auto& g : d.observations_j) {
    for (const auto& c : creaks) d.observations_i.push_back(g + "-" + c);
  }

  const int S = 2, A = 3, Oj = 2, Oi = 6;
  d.transition.assign(static_cast<std::size_t>(S * A * A * S), 0.0);
  d.observation_i.assign(static_cast<std::size_t>(S * A * A * Oi), 0.0);
  d.observation_j.assign(static_cast<std::size_t>(S * A * Oj), 0.0);
  d.reward_i.assign(static_cast<std::size_t>(S * A * A), 0.0);
  d.initial_belief = {0.5, 0.5};

  auto growl = [&](int s_next, Action a, int o) {
    if (a != kListen) return 0.5;
    const int correct = s_next == kTigerLeft ? kGrowlLeft : kGrowlRight;
    return o == correct ? params.listen_accuracy : 1.0 - params.listen_accuracy;
  };
  auto creak = [&](Action aj, int c) {
    const int expected = aj == kOpenLeft ? 0 : aj == kOpenRight ? 1 : 2;
    return c == expected ? params.creak_accuracy
                         : 0.5 * (1.0 - params.creak_accuracy);
  };

  for (int s = 0; s < S; ++s) {
    for (int ai = 0; ai < A; ++ai) {
      for (int aj = 0; aj < A; ++aj) {
        const bool opened = ai != kListen || aj != kListen;
        for (int s2 = 0; s2 < S; ++s2) {
          d.transition[d.transition_index(s, ai, aj, s2)] =
              opened ? 0.5 : (s2 == s ? 1.0 : 0.0);
        }
        double r = params.listen_reward;
        if (ai != kListen) {
          const bool tiger_behind =
              (ai == kOpenLeft && s == kTigerLeft) ||
              (ai == kOpenRight && s == kTigerRight);
          if (tiger_behind) {
            r = params.tiger_penalty;
          } else {
            r = aj == ai ? params.shared_gold_reward : params.gold_reward;
          }
        }
        d.reward_i[d.reward_index(s, ai, aj)] = r;
      }
    }
  }
  for (int s2 = 0; s2 < S; ++s2) {
    for (int aj = 0; aj < A; ++aj) {
      for (int o = 0; o < Oj; ++o) {
        d.observation_j[d.obs_j_index(s2, aj, o)] = growl(s2, aj, o);
      }
      for (int ai = 0; ai < A; ++ai) {
        for (int g = 0; g < 2; ++g) {
          for (int c = 0; c < 3; ++c) {
            d.observation_i[d.obs_i_index(s2, ai, aj, g * 3 + c)] =
                growl(s2, ai, g) * creak(aj, c);
          }
        }
      }
    }
  }
  d.validate();
  return d;
}

// ------------------------------------------------------------------ UAV ---

namespace uav {

int state_of(GridCell i, GridCell j) {
  return (i.row * kGridSize + i.col) * kGridSize * kGridSize +
         j.row * kGridSize + j.col;
}

GridCell cell_i(int state) {
  const int c = state / (kGridSize * kGridSize);
  return {c / kGridSize, c % kGridSize};
}

GridCell cell_j(int state) {
  const int c = state % (kGridSize * kGridSize);
  return {c / kGridSize, c % kGridSize};
}

}  // namespace uav

namespace {

bool in_grid(GridCell c) {
  return c.row >= 0 && c.row < uav::kGridSize && c.col >= 0 &&
         c.col < uav::kGridSize;
}

GridCell moved(GridCell c, Action a) {
  GridCell n = c;
  switch (a) {
    case uav::kNorth: --n.row; break;
    case uav::kSouth: ++n.row; break;
    case uav::kEast: ++n.col; break;
    case uav::kWest: --n.col; break;
    default: break;
  }
  return in_grid(n) ? n : c;
}

// Quadrant of `other` as seen from `self`: bit 0 = east, bit 1 = south.
int bearing(GridCell self, GridCell other) {
  return (other.col > self.col ? 1 : 0) + (other.row > self.row ? 2 : 0);
}

}  // namespace

DomainSpec uav_spec(const UavParams& params) {
  using namespace uav;
  for (auto [cell, name] : {std::pair{params.safe_house, "safe_house"},
                            std::pair{params.start_i, "start_i"},
                            std::pair{params.start_j, "start_j"}}) {
    if (!in_grid(cell)) {
      throw ConfigError(std::string(name) + " lies outside the 3x3 grid");
    }
  }
  check_probability(params.observation_accuracy, "observation_accuracy");
  check_probability(params.move_success, "move_success");
  check_finite(params.capture_reward, "capture_reward");
  check_finite(params.escape_penalty, "escape_penalty");
  check_finite(params.step_reward, "step_reward");

  DomainSpec d;
  d.name = "uav";
  const int cells = kGridSize * kGridSize;
  const int S = cells * cells;
  for (int s = 0; s < S; ++s) {
    const GridCell ci = cell_i(s), cj = cell_j(s);
    std::ostringstream nm;
    nm << "i" << ci.row << ci.col << "-j" << cj.row << cj.col;
    d.states.push_back(nm.str());
  }
  d.actions_i = {"north", "south", "east", "west", "stay"};
  d.actions_j = d.actions_i;
  d.observations_i = {"NW", "NE", "SW", "SE"};
  d.observations_j = d.observations_i;
  const int A = 5, O = 4;

  auto escaped = [&](int s) { return cell_j(s) == params.safe_house; };
  auto captured = [&](int s) { return !escaped(s) && cell_i(s) == cell_j(s); };
  auto entry_reward = [&](int s) {
    if (escaped(s)) return params.escape_penalty;
    if (captured(s)) return params.capture_reward;
    return params.step_reward;
  };

  d.transition.assign(static_cast<std::size_t>(S) * A * A * S, 0.0);
  d.reward_i.assign(static_cast<std::size_t>(S) * A * A, 0.0);
  for (int s = 0; s < S; ++s) {
    const bool terminal = escaped(s) || captured(s);
    for (int ai = 0; ai < A; ++ai) {
      for (int aj = 0; aj < A; ++aj) {
        if (terminal) {
          d.transition[d.transition_index(s, ai, aj, s)] = 1.0;
          d.reward_i[d.reward_index(s, ai, aj)] = entry_reward(s);
          continue;
        }
        const GridCell stay_i = cell_i(s), stay_j = cell_j(s);
        const std::pair<GridCell, double> outcomes_i[2] = {
            {moved(stay_i, ai), params.move_success},
            {stay_i, 1.0 - params.move_success}};
        const std::pair<GridCell, double> outcomes_j[2] = {
            {moved(stay_j, aj), params.move_success},
            {stay_j, 1.0 - params.move_success}};
        double expected = 0.0;
        for (const auto& [ni, pi] : outcomes_i) {
          for (const auto& [nj, pj] : outcomes_j) {
            const double p = pi * pj;
            if (p == 0.0) continue;
            const int s2 = state_of(ni, nj);
            d.transition[d.transition_index(s, ai, aj, s2)] += p;
            expected += p * entry_reward(s2);
          }
        }
        d.reward_i[d.reward_index(s, ai, aj)] = expected;
      }
    }
  }

  const double hit = params.observation_accuracy;
  const double miss = (1.0 - hit) / (O - 1);
  d.observation_i.assign(static_cast<std::size_t>(S) * A * A * O, 0.0);
  d.observation_j.assign(static_cast<std::size_t>(S) * A * O, 0.0);
  for (int s2 = 0; s2 < S; ++s2) {
    const int seen_by_i = bearing(cell_i(s2), cell_j(s2));
    const int seen_by_j = bearing(cell_j(s2), cell_i(s2));
    for (int aj = 0; aj < A; ++aj) {
      for (int o = 0; o < O; ++o) {
        d.observation_j[d.obs_j_index(s2, aj, o)] = o == seen_by_j ? hit : miss;
        for (int ai = 0; ai < A; ++ai) {
          d.observation_i[d.obs_i_index(s2, ai, aj, o)] =
              o == seen_by_i ? hit : miss;
        }
      }
    }
  }

  d.initial_belief.assign(static_cast<std::size_t>(S), 0.0);
  d.initial_belief[static_cast<std::size_t>(
      state_of(params.start_i, params.start_j))] = 1.0;
  d.validate();
  return d;
}

// -------------------------------------------------------------- history ---

namespace {

struct PolicyCursor {
  const DomainSpec& spec;
  RandomSource& rng;
  std::size_t node = 0;

  const PolicyTree* tree(const GroundTruthPolicy& p) const {
    if (auto* t = std::get_if<PolicyTree>(&p)) return t;
    if (auto* n = std::get_if<NoisyTreePolicy>(&p)) return &n->tree;
    return nullptr;
  }

  Action act(const GroundTruthPolicy& p) {
    const int A = spec.num_actions_j();
    if (std::holds_alternative<UniformRandomPolicy>(p)) {
      return static_cast<Action>(rng.index(static_cast<std::size_t>(A)));
    }
    if (auto* noisy = std::get_if<NoisyTreePolicy>(&p)) {
      if (rng.uniform() < noisy->epsilon) {
        return static_cast<Action>(rng.index(static_cast<std::size_t>(A)));
      }
    }
    return tree(p)->at(node);
  }
};

}  // namespace

InteractionHistory simulate_history(const DomainSpec& spec,
                                    const GroundTruthPolicy& policy,
                                    std::size_t length, RandomSource& rng,
                                    const HistoryOptions& options) {
  if (length < 1) throw EmptyInputError("history length must be >= 1");
  PolicyCursor cursor{spec, rng};
  const PolicyTree* tree = cursor.tree(policy);
  if (tree) {
    if (!tree->complete()) {
      throw ConfigError("ground-truth policy tree must be complete");
    }
    if (tree->branching() != spec.num_obs_j()) {
      throw ConfigError("ground-truth tree branching does not match |Omega_j|");
    }
    for (Action a : tree->nodes()) {
      if (a < 0 || a >= spec.num_actions_j()) {
        throw ConfigError("ground-truth tree uses an unknown action");
      }
    }
  }
  if (options.subject_action >= spec.num_actions_i()) {
    throw ConfigError("subject_action out of range");
  }

  const auto S = static_cast<std::size_t>(spec.num_states());
  const auto Oj = static_cast<std::size_t>(spec.num_obs_j());
  int s = static_cast<int>(rng.categorical(spec.initial_belief.data(), S));
  InteractionHistory history;
  history.steps.reserve(length);
  std::vector<double> row;
  for (std::size_t t = 0; t < length; ++t) {
    if (tree && t % static_cast<std::size_t>(tree->depth()) == 0) {
      cursor.node = 0;
    }
    const Action aj = cursor.act(policy);
    const Action ai =
        options.subject_action >= 0
            ? options.subject_action
            : static_cast<Action>(
                  rng.index(static_cast<std::size_t>(spec.num_actions_i())));
    const double* trow = &spec.transition[spec.transition_index(s, ai, aj, 0)];
    const int s2 = static_cast<int>(rng.categorical(trow, S));
    const double* orow = &spec.observation_j[spec.obs_j_index(s2, aj, 0)];
    const int oj = static_cast<int>(rng.categorical(orow, Oj));
    history.steps.push_back({aj, oj});
    if (tree && !tree->is_leaf(cursor.node)) {
      cursor.node = tree->child(cursor.node, oj);
    }
    s = s2;
  }
  return history;
}

void write_history(std::ostream& out, const InteractionHistory& history) {
  out << "L=" << history.length() << '\n';
  for (const auto& step : history.steps) {
    out << step.action << ' ' << step.observation << '\n';
  }
}

InteractionHistory read_history(std::istream& in) {
  InteractionHistory history;
  std::string line;
  std::size_t expected = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (std::sscanf(line.c_str(), "L=%zu", &expected) != 1) {
        throw IoError("bad history header: '" + line + "'");
      }
      header = true;
      continue;
    }
    std::istringstream fields(line);
    HistoryStep step;
    if (!(fields >> step.action >> step.observation)) {
      throw IoError("bad history line: '" + line + "'");
    }
    history.steps.push_back(step);
  }
  if (!header) throw IoError("history file has no header");
  if (history.length() != expected) {
    throw IoError("history declares L=" + std::to_string(expected) +
                  " but has " + std::to_string(history.length()) + " steps");
  }
  return history;
}

}  // namespace veb
