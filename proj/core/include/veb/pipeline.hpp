#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "veb/codec.hpp"
#include "veb/config.hpp"
#include "veb/domain.hpp"
#include "veb/error.hpp"
#include "veb/evaluator.hpp"
#include "veb/policy_tree.hpp"
#include "veb/vae.hpp"

namespace veb {

// Failure inside a named stage; the message carries the stage and seed.
class StageError : public Error {
 public:
  StageError(std::string stage, std::uint64_t seed, const std::string& what);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Exclusive ownership of an output directory via a lock file.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct SelectedSet {
  std::string method;
  std::string metric;  // "mdf", "icd" or "none"
  std::vector<PolicyTree> trees;
};

// Stage runner over one output directory, which it locks for its lifetime.
// Every stage reads its inputs from disk; an upstream artifact is reused when
// its recorded stage key matches the current config and rebuilt otherwise.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig cfg);

  const ExperimentConfig& config() const { return cfg_; }
  const DomainSpec& domain() const { return spec_; }
  std::filesystem::path path(std::string_view name) const;

  void simulate();
  void reconstruct();
  void train();
  void generate();
  void select();
  std::vector<ReportRow> evaluate();
  std::vector<ReportRow> run();
  void sweep();

  // Loaders that build the artifact first when it is missing or stale.
  PolicyTree truth();
  InteractionHistory history();
  std::vector<PolicyTree> reconstructed();
  std::vector<EncodedTree> encoded();
  VaeNetwork network(LossKind loss);
  std::vector<PolicyTree> candidates(LossKind loss);
  SelectedSet selected(const std::string& method);

 private:
  std::string header() const;
  std::string stage_key(std::string_view stage) const;
  bool current(const std::filesystem::path& file, std::string_view stage) const;
  void staged(std::string_view stage, const std::function<void()>& body);

  void build_history();
  void build_reconstructed();
  void build_network(LossKind loss);
  void build_candidates(LossKind loss);
  SelectedSet build_selected(const std::string& method);

  ExperimentConfig cfg_;
  DomainSpec spec_;
  std::filesystem::path dir_;
  OutputLock lock_;
  std::map<std::string, std::string> notes_;
};

void cmd_simulate(const ExperimentConfig& cfg);
void cmd_reconstruct(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg);
void cmd_generate(const ExperimentConfig& cfg);
void cmd_select(const ExperimentConfig& cfg);
std::vector<ReportRow> cmd_evaluate(const ExperimentConfig& cfg);
std::vector<ReportRow> cmd_run(const ExperimentConfig& cfg);
void cmd_sweep(const ExperimentConfig& cfg);

// (v - min) / (max - min); all zeros when the column is constant.
std::vector<double> min_max_normalize(const std::vector<double>& values);

// Completes EMPTY nodes of `tree` with `fallback`; returns the number filled.
std::size_t complete_tree(PolicyTree& tree, Action fallback);

// Most frequent action in the history, lowest index on ties.
Action most_frequent_action(const InteractionHistory& history, int num_actions);

}  // namespace veb
