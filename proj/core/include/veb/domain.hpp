#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "veb/policy_tree.hpp"
#include "veb/random.hpp"

namespace veb {

// A two-agent decision problem seen from the subject agent i, with the
// opponent j's own observation model. All tables are dense and row-major:
//   transition  [s][a_i][a_j][s']
//   observation_i [s'][a_i][a_j][o_i]
//   observation_j [s'][a_j][o_j]
//   reward_i    [s][a_i][a_j]
struct DomainSpec {
  std::string name;
  std::vector<std::string> states;
  std::vector<std::string> actions_i;
  std::vector<std::string> actions_j;
  std::vector<std::string> observations_i;
  std::vector<std::string> observations_j;
  std::vector<double> transition;
  std::vector<double> observation_i;
  std::vector<double> observation_j;
  std::vector<double> reward_i;
  std::vector<double> initial_belief;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_actions_i() const { return static_cast<int>(actions_i.size()); }
  int num_actions_j() const { return static_cast<int>(actions_j.size()); }
  int num_obs_i() const { return static_cast<int>(observations_i.size()); }
  int num_obs_j() const { return static_cast<int>(observations_j.size()); }

  std::size_t transition_index(int s, int ai, int aj, int s_next) const {
    return ((static_cast<std::size_t>(s) * actions_i.size() + ai) *
                actions_j.size() + aj) * states.size() + s_next;
  }
  std::size_t obs_i_index(int s_next, int ai, int aj, int oi) const {
    return ((static_cast<std::size_t>(s_next) * actions_i.size() + ai) *
                actions_j.size() + aj) * observations_i.size() + oi;
  }
  std::size_t obs_j_index(int s_next, int aj, int oj) const {
    return (static_cast<std::size_t>(s_next) * actions_j.size() + aj) *
               observations_j.size() + oj;
  }
  std::size_t reward_index(int s, int ai, int aj) const {
    return (static_cast<std::size_t>(s) * actions_i.size() + ai) *
               actions_j.size() + aj;
  }

  double T(int s, int ai, int aj, int s_next) const {
    return transition[transition_index(s, ai, aj, s_next)];
  }
  double Oi(int s_next, int ai, int aj, int oi) const {
    return observation_i[obs_i_index(s_next, ai, aj, oi)];
  }
  double Oj(int s_next, int aj, int oj) const {
    return observation_j[obs_j_index(s_next, aj, oj)];
  }
  double R(int s, int ai, int aj) const {
    return reward_i[reward_index(s, ai, aj)];
  }

  // Throws ConfigError unless every table has the right size and every
  // distribution sums to 1 within `tol`.
  void validate(double tol = 1e-9) const;
};

struct TigerParams {
  double listen_reward = -1.0;
  double gold_reward = 10.0;
  double tiger_penalty = -100.0;
  // Paid to i when both agents open the gold door.
  double shared_gold_reward = 5.0;
  double listen_accuracy = 0.85;
  // Probability that i hears the creak matching j's action.
  double creak_accuracy = 0.9;
};

// States: tiger-left, tiger-right. Actions (both agents): OL, OR, L.
// j observes {GL, GR}; i observes {GL, GR} x {CL, CR, S}.
DomainSpec tiger_spec(const TigerParams& params = {});

namespace tiger {
inline constexpr int kTigerLeft = 0;
inline constexpr int kTigerRight = 1;
inline constexpr Action kOpenLeft = 0;
inline constexpr Action kOpenRight = 1;
inline constexpr Action kListen = 2;
inline constexpr int kGrowlLeft = 0;
inline constexpr int kGrowlRight = 1;
}  // namespace tiger

struct GridCell {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct UavParams {
  GridCell safe_house{2, 2};
  GridCell start_i{2, 0};
  GridCell start_j{0, 2};
  double observation_accuracy = 0.9;
  // Probability that a move succeeds; otherwise the agent stays put.
  double move_success = 1.0;
  double capture_reward = 50.0;
  double escape_penalty = -50.0;
  double step_reward = -1.0;
};

// 3x3 pursuit-evasion grid. State = (cell_i, cell_j), 81 states. Actions
// (both agents): north, south, east, west, stay. Observations are the
// noisy quadrant bearing {NW, NE, SW, SE} of the other agent. Capture and
// escape states are absorbing and keep paying their reward.
DomainSpec uav_spec(const UavParams& params = {});

namespace uav {
inline constexpr int kGridSize = 3;
inline constexpr Action kNorth = 0;
inline constexpr Action kSouth = 1;
inline constexpr Action kEast = 2;
inline constexpr Action kWest = 3;
inline constexpr Action kStay = 4;
int state_of(GridCell i, GridCell j);
GridCell cell_i(int state);
GridCell cell_j(int state);
}  // namespace uav

struct HistoryStep {
  Action action = 0;
  int observation = 0;
  friend bool operator==(const HistoryStep&, const HistoryStep&) = default;
};

// The opponent's long action-observation sequence.
struct InteractionHistory {
  std::vector<HistoryStep> steps;
  std::size_t length() const { return steps.size(); }
  friend bool operator==(const InteractionHistory&,
                         const InteractionHistory&) = default;
};

void write_history(std::ostream& out, const InteractionHistory& history);
InteractionHistory read_history(std::istream& in);

// j picks uniformly among its actions at every step.
struct UniformRandomPolicy {};

// j follows `tree` but with probability `epsilon` substitutes a uniformly
// random action at a node.
struct NoisyTreePolicy {
  PolicyTree tree;
  double epsilon = 0.0;
};

// Ground-truth behaviour used to produce histories. Tree-based policies are
// restarted at the root every depth() steps.
using GroundTruthPolicy =
    std::variant<PolicyTree, NoisyTreePolicy, UniformRandomPolicy>;

struct HistoryOptions {
  // Fixed action for the subject agent during data collection; a negative
  // value means i acts uniformly at random.
  Action subject_action = -1;
};

InteractionHistory simulate_history(const DomainSpec& spec,
                                    const GroundTruthPolicy& policy,
                                    std::size_t length, RandomSource& rng,
                                    const HistoryOptions& options = {});

}  // namespace veb
