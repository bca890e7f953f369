#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "veb/config.hpp"
#include "veb/error.hpp"
#include "veb/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> methods;
  std::optional<std::size_t> k;
  std::optional<std::string> metric;
  std::optional<std::string> sweep_kind;
  std::optional<std::size_t> k_min;
  std::optional<std::size_t> k_max;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--method", o.methods, "methods to run")
      ->check(CLI::IsMember(veb::known_methods()));
  cmd->add_option("--k", o.k, "selected set size K");
  cmd->add_option("--metric", o.metric, "selection metric")
      ->check(CLI::IsMember({"mdf", "icd"}));
}

veb::ExperimentConfig resolve(const Overrides& o) {
  veb::ExperimentConfig cfg = o.config.empty() ? veb::ExperimentConfig{}
                                               : veb::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  if (!o.methods.empty()) cfg.methods = o.methods;
  if (o.k) cfg.k = *o.k;
  if (o.metric) cfg.metric = veb::parse_metric(*o.metric);
  if (o.sweep_kind) cfg.sweep.kind = *o.sweep_kind;
  if (o.k_min) cfg.sweep.k_min = *o.k_min;
  if (o.k_max) cfg.sweep.k_max = *o.k_max;
  return cfg;
}

void print_rows(const std::vector<veb::ReportRow>& rows) {
  std::printf("%-18s %4s %-5s %12s %10s\n", "method", "K", "metric", "mean_reward",
              "std_error");
  for (const auto& r : rows) {
    std::printf("%-18s %4zu %-5s %12.4f %10.4f\n", r.method.c_str(), r.k,
                r.metric.c_str(), r.mean_reward, r.std_error);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diverse opponent models from limited interactions via a tree VAE"};
  app.require_subcommand(1);
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "simulate an interaction history");
  auto* reconstruct = app.add_subcommand("reconstruct", "rebuild policy trees from the history");
  auto* train = app.add_subcommand("train", "train the tree VAE(s)");
  auto* generate = app.add_subcommand("generate", "sample candidate trees");
  auto* select = app.add_subcommand("select", "pick the top-K set for each method");
  auto* evaluate = app.add_subcommand("evaluate", "best-respond and score each method");
  auto* run = app.add_subcommand("run", "run every stage end to end");
  auto* sweep = app.add_subcommand("sweep", "K-range or metric-vs-reward tables");
  for (auto* cmd : {simulate, reconstruct, train, generate, select, evaluate, run, sweep}) {
    add_common(cmd, o);
  }
  sweep->add_option("--kind", o.sweep_kind, "sweep kind")
      ->check(CLI::IsMember({"k-range", "metric-vs-reward"}));
  sweep->add_option("--k-min", o.k_min, "smallest K");
  sweep->add_option("--k-max", o.k_max, "largest K (default M)");

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const veb::ExperimentConfig cfg = resolve(o);
    if (simulate->parsed()) veb::cmd_simulate(cfg);
    if (reconstruct->parsed()) veb::cmd_reconstruct(cfg);
    if (train->parsed()) veb::cmd_train(cfg);
    if (generate->parsed()) veb::cmd_generate(cfg);
    if (select->parsed()) veb::cmd_select(cfg);
    if (evaluate->parsed()) print_rows(veb::cmd_evaluate(cfg));
    if (run->parsed()) print_rows(veb::cmd_run(cfg));
    if (sweep->parsed()) veb::cmd_sweep(cfg);
    std::cerr << "veb " << name << ": wrote " << cfg.output_dir.string() << "\n";
  } catch (const veb::StageError& e) {
    std::cerr << "veb " << name << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "veb " << name << ": [" << name << "] " << e.what() << "\n";
    return 1;
  }
  return 0;
}
