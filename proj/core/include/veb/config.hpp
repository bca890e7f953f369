#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "veb/domain.hpp"
#include "veb/selection.hpp"
#include "veb/vae.hpp"

namespace veb {

// Opponent behaviour that produces the history and serves as j's true model
// during evaluation.
struct TruthConfig {
  std::string kind = "random";  // "random" or "tree"
  std::vector<Action> nodes;    // level order, used when kind == "tree"
  // Probability of a uniformly random deviation at each step of the history.
  double epsilon = 0.1;
};

struct SweepConfig {
  std::string kind = "k-range";  // "k-range" or "metric-vs-reward"
  std::size_t k_min = 1;
  std::size_t k_max = 0;  // 0 = M
};

struct ExperimentConfig {
  std::string domain = "tiger";
  TigerParams tiger;
  UavParams uav;

  std::size_t history_length = 60;
  Action subject_action = -1;
  TruthConfig truth;

  int horizon = 3;
  std::size_t reconstructed = 6;  // m
  std::size_t generated = 100;    // M
  std::size_t k = 10;
  MetricKind metric = MetricKind::kIcd;
  SelectMode select_mode = SelectMode::kGreedy;
  // When false, generated trees never project to EMPTY; when true, EMPTY may
  // win and incomplete trees are dropped from candidacy.
  bool allow_empty_projection = false;

  std::vector<std::string> methods = {"idid-known-models", "random", "vae-mdf",
                                      "vae-icd", "vae-bceloss"};
  TrainConfig train;

  std::size_t runs = 50;
  bool truth_in_set = false;
  bool report_timings = false;

  SweepConfig sweep;

  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "veb-out";

  // Throws ConfigError on an inconsistent configuration.
  void validate() const;
};

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names = {
      "idid-known-models", "random", "vae-mdf", "vae-icd", "vae-bceloss"};
  return names;
}

// Parses a JSON document; absent keys keep their defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// The fully resolved configuration as compact JSON (sorted keys).
std::string to_json(const ExperimentConfig& cfg);

DomainSpec make_domain(const ExperimentConfig& cfg);

}  // namespace veb
