#include "veb/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "veb/reconstruct.hpp"
#include "veb/selection.hpp"

namespace veb {

namespace fs = std::filesystem;
using nlohmann::json;

StageError::StageError(std::string stage, std::uint64_t seed,
                       const std::string& what)
    : Error("[" + stage + "] seed=" + std::to_string(seed) + ": " + what),
      stage_(std::move(stage)) {}

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".veb.lock") {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw IoError("output directory " + dir.string() +
                    " is locked by another process (remove " + path_.string() +
                    " if stale)");
    }
    throw IoError("cannot create " + path_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::vector<double> min_max_normalize(const std::vector<double>& values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = (values[i] - *lo) / range;
  }
  return out;
}

std::size_t complete_tree(PolicyTree& tree, Action fallback) {
  std::size_t filled = 0;
  for (std::size_t n = 0; n < tree.size(); ++n) {
    if (tree.at(n) == kEmpty) {
      tree.set(n, fallback);
      ++filled;
    }
  }
  return filled;
}

Action most_frequent_action(const InteractionHistory& history, int num_actions) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_actions), 0);
  for (const auto& step : history.steps) {
    if (step.action >= 0 && step.action < num_actions) {
      ++counts[static_cast<std::size_t>(step.action)];
    }
  }
  return static_cast<Action>(std::max_element(counts.begin(), counts.end()) -
                             counts.begin());
}

namespace {

const char* loss_tag(LossKind loss) {
  return loss == LossKind::kTree ? "tree" : "bce";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const fs::path& file, bool binary = false) {
  std::ofstream out(file, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot write " + file.string());
  return out;
}

std::ifstream open_in(const fs::path& file, bool binary = false) {
  std::ifstream in(file, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot read " + file.string());
  return in;
}

std::string prefixed(const std::string& lines, const char* prefix) {
  std::string out;
  std::istringstream in(lines);
  for (std::string line; std::getline(in, line);) out += prefix + line + "\n";
  return out;
}

// Values of "# <key>: <value>" comment lines.
std::vector<std::string> comment_values(const fs::path& file,
                                        std::string_view key) {
  std::vector<std::string> out;
  std::ifstream in(file, std::ios::binary);
  const std::string tag = "# " + std::string(key) + ": ";
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(tag, 0) == 0) out.push_back(line.substr(tag.size()));
  }
  return out;
}

std::vector<std::string> methods_needing(LossKind loss,
                                         const std::vector<std::string>& methods) {
  std::vector<std::string> out;
  for (const auto& m : methods) {
    const bool bce = m == "vae-bceloss";
    const bool tree = m == "vae-mdf" || m == "vae-icd" || m == "random";
    if ((loss == LossKind::kBce && bce) || (loss == LossKind::kTree && tree)) {
      out.push_back(m);
    }
  }
  return out;
}

}  // namespace

Pipeline::Pipeline(ExperimentConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      spec_(make_domain(cfg_)),
      dir_((fs::create_directories(cfg_.output_dir), cfg_.output_dir)),
      lock_(dir_) {}

fs::path Pipeline::path(std::string_view name) const { return dir_ / name; }

std::string Pipeline::header() const {
  return "config: " + to_json(cfg_) + "\nseed: " + std::to_string(cfg_.seed) + "\n";
}

std::string Pipeline::stage_key(std::string_view stage) const {
  const json full = json::parse(to_json(cfg_));
  std::vector<std::string> keys = {"domain", "tiger",   "uav",
                                   "history", "truth", "horizon", "seed"};
  const auto add = [&](std::initializer_list<const char*> more) {
    keys.insert(keys.end(), more.begin(), more.end());
  };
  if (stage != "history") add({"reconstructed"});
  if (stage.rfind("train-", 0) == 0 || stage.rfind("generate-", 0) == 0 ||
      stage.rfind("select-", 0) == 0) {
    add({"train"});
  }
  if (stage.rfind("generate-", 0) == 0 || stage.rfind("select-", 0) == 0) {
    add({"generated", "allow_empty_projection"});
  }
  if (stage.rfind("select-", 0) == 0) add({"k", "metric", "select_mode"});
  json key = json::object();
  for (const auto& k : keys) key[k] = full.at(k);
  return std::string(stage) + " " + key.dump();
}

bool Pipeline::current(const fs::path& file, std::string_view stage) const {
  if (!fs::exists(file)) return false;
  const auto keys = comment_values(file, "stage");
  return keys.size() == 1 && keys.front() == stage_key(stage);
}

void Pipeline::staged(std::string_view stage,
                      const std::function<void()>& body) {
  try {
    body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), cfg_.seed, e.what());
  }
}

// ------------------------------------------------------------- simulate ---

void Pipeline::build_history() {
  RandomSource truth_rng(derive_seed(cfg_.seed, "truth"));
  const int b = spec_.num_obs_j();
  PolicyTree truth(cfg_.horizon, b);
  if (cfg_.truth.kind == "tree") {
    if (cfg_.truth.nodes.size() != truth.size()) {
      throw ConfigError("truth.nodes has " + std::to_string(cfg_.truth.nodes.size()) +
                        " entries, expected " + std::to_string(truth.size()));
    }
    truth = PolicyTree(cfg_.horizon, b, cfg_.truth.nodes);
  } else {
    const auto A = static_cast<std::size_t>(spec_.num_actions_j());
    for (std::size_t n = 0; n < truth.size(); ++n) {
      truth.set(n, static_cast<Action>(truth_rng.index(A)));
    }
  }
  for (Action a : truth.nodes()) {
    if (a < 0 || a >= spec_.num_actions_j()) {
      throw ConfigError("truth tree uses an unknown action");
    }
  }

  GroundTruthPolicy policy = truth;
  if (cfg_.truth.epsilon > 0.0) policy = NoisyTreePolicy{truth, cfg_.truth.epsilon};
  RandomSource rng(derive_seed(cfg_.seed, "history"));
  HistoryOptions options;
  options.subject_action = cfg_.subject_action;
  const InteractionHistory history =
      simulate_history(spec_, policy, cfg_.history_length, rng, options);

  const std::string head = prefixed(header() + "stage: " + stage_key("history"), "# ");
  {
    auto out = open_out(path("truth.tree"));
    out << head;
    write_tree(out, truth);
  }
  auto out = open_out(path("history.txt"));
  out << head;
  write_history(out, history);
}

void Pipeline::simulate() {
  staged("simulate", [&] { build_history(); });
}

PolicyTree Pipeline::truth() {
  if (!current(path("truth.tree"), "history")) simulate();
  auto in = open_in(path("truth.tree"));
  return read_tree(in);
}

InteractionHistory Pipeline::history() {
  if (!current(path("history.txt"), "history")) simulate();
  auto in = open_in(path("history.txt"));
  return read_history(in);
}

// ---------------------------------------------------------- reconstruct ---

void Pipeline::build_reconstructed() {
  const InteractionHistory h = history();
  RandomSource rng(derive_seed(cfg_.seed, "reconstruct"));
  const auto trees = reconstruct_trees(h, cfg_.horizon, cfg_.reconstructed, spec_, rng);
  const std::string head =
      prefixed(header() + "stage: " + stage_key("reconstruct"), "# ");
  {
    auto out = open_out(path("reconstructed.trees"));
    out << head;
    write_trees(out, trees);
  }
  const ActionAlphabet alphabet(spec_.num_actions_j());
  std::vector<EncodedTree> rows;
  for (const auto& t : trees) rows.push_back(zzoh_encode(t, alphabet));
  auto out = open_out(path("encoded.zzoh"));
  out << head;
  write_encoded(out, rows);
}

void Pipeline::reconstruct() {
  staged("reconstruct", [&] { build_reconstructed(); });
}

std::vector<PolicyTree> Pipeline::reconstructed() {
  if (!current(path("reconstructed.trees"), "reconstruct")) reconstruct();
  auto in = open_in(path("reconstructed.trees"));
  return read_trees(in);
}

std::vector<EncodedTree> Pipeline::encoded() {
  if (!current(path("encoded.zzoh"), "reconstruct")) reconstruct();
  auto in = open_in(path("encoded.zzoh"));
  return read_encoded(in);
}

// ---------------------------------------------------------------- train ---

void Pipeline::build_network(LossKind loss) {
  const auto data = encoded();
  TrainConfig tc = cfg_.train;
  tc.loss = loss;
  tc.seed = derive_seed(cfg_.seed, std::string("train-") + loss_tag(loss));
  const TrainResult result = veb::train(data, tc);
  const std::string stage = std::string("train-") + loss_tag(loss);
  const std::string head = header() + "stage: " + stage_key(stage);
  {
    auto out = open_out(path(std::string("train_log_") + loss_tag(loss) + ".csv"));
    out << prefixed(head, "# ");
    write_train_log(out, result.log);
  }
  auto out = open_out(path(std::string("network_") + loss_tag(loss) + ".bin"), true);
  save_network(out, result.net, {tc.seed, result.epochs, result.final_loss}, head);
}

void Pipeline::train() {
  staged("train", [&] {
    for (LossKind loss : {LossKind::kTree, LossKind::kBce}) {
      if (!methods_needing(loss, cfg_.methods).empty()) build_network(loss);
    }
  });
}

VaeNetwork Pipeline::network(LossKind loss) {
  const fs::path file = path(std::string("network_") + loss_tag(loss) + ".bin");
  if (!current(file, std::string("train-") + loss_tag(loss))) {
    staged("train", [&] { build_network(loss); });
  }
  auto in = open_in(file, true);
  return load_network(in);
}

// ------------------------------------------------------------- generate ---

void Pipeline::build_candidates(LossKind loss) {
  const VaeNetwork net = network(loss);
  const auto source = encoded();
  RandomSource rng(derive_seed(cfg_.seed, std::string("generate-") + loss_tag(loss)));
  const EmptySlot empty =
      cfg_.allow_empty_projection ? EmptySlot::kPermit : EmptySlot::kForbid;
  std::vector<PolicyTree> trees = veb::generate(net, source, cfg_.generated, rng, empty);
  const std::size_t before = trees.size();
  std::erase_if(trees, [](const PolicyTree& t) { return !t.complete(); });
  std::string head = header() + "stage: " +
                     stage_key(std::string("generate-") + loss_tag(loss));
  if (trees.size() != before) {
    head += "\nnote: dropped " + std::to_string(before - trees.size()) +
            " incomplete trees";
  }
  auto out = open_out(path(std::string("generated_") + loss_tag(loss) + ".trees"));
  out << prefixed(head, "# ");
  write_trees(out, trees);
}

void Pipeline::generate() {
  staged("generate", [&] {
    for (LossKind loss : {LossKind::kTree, LossKind::kBce}) {
      if (!methods_needing(loss, cfg_.methods).empty()) build_candidates(loss);
    }
  });
}

std::vector<PolicyTree> Pipeline::candidates(LossKind loss) {
  const fs::path file = path(std::string("generated_") + loss_tag(loss) + ".trees");
  if (!current(file, std::string("generate-") + loss_tag(loss))) {
    staged("generate", [&] { build_candidates(loss); });
  }
  auto in = open_in(file);
  return read_trees(in);
}

// --------------------------------------------------------------- select ---

SelectedSet Pipeline::build_selected(const std::string& method) {
  SelectedSet set;
  set.method = method;
  std::vector<std::size_t> indices;
  double score_value = 0.0;
  std::string note;

  if (method == "idid-known-models") {
    set.metric = "none";
    const Action fallback = most_frequent_action(history(), spec_.num_actions_j());
    std::size_t filled = 0;
    for (PolicyTree t : reconstructed()) {
      filled += complete_tree(t, fallback);
      set.trees.push_back(std::move(t));
    }
    if (filled) {
      note = "completed " + std::to_string(filled) + " empty nodes with action " +
             spec_.actions_j[static_cast<std::size_t>(fallback)];
    }
  } else {
    const LossKind loss = method == "vae-bceloss" ? LossKind::kBce : LossKind::kTree;
    const std::vector<PolicyTree> cands = candidates(loss);
    if (cands.size() < cfg_.k) {
      throw SizeError("only " + std::to_string(cands.size()) +
                      " complete candidates for K=" + std::to_string(cfg_.k));
    }
    if (method == "random") {
      set.metric = "none";
      RandomSource rng(derive_seed(cfg_.seed, "random-select"));
      std::vector<std::size_t> pool(cands.size());
      for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
      for (std::size_t i = 0; i < cfg_.k; ++i) {
        std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
      }
      indices.assign(pool.begin(), pool.begin() + static_cast<long>(cfg_.k));
      std::sort(indices.begin(), indices.end());
    } else {
      MetricKind metric = cfg_.metric;
      if (method == "vae-mdf") metric = MetricKind::kMdf;
      if (method == "vae-icd") metric = MetricKind::kIcd;
      set.metric = std::string(to_string(metric));
      const Selection sel = top_k(cands, cfg_.k, metric, cfg_.select_mode);
      indices = sel.indices;
      score_value = sel.score;
    }
    for (std::size_t i : indices) set.trees.push_back(cands[i]);
  }

  std::string head = header() + "stage: " + stage_key("select-" + method) +
                     "\nmethod: " + method + "\nmetric: " + set.metric;
  if (set.metric != "none") head += "\nscore: " + fmt(score_value);
  if (!indices.empty()) {
    head += "\nindices:";
    for (std::size_t i : indices) head += " " + std::to_string(i);
  }
  if (!note.empty()) {
    head += "\nnote: " + note;
    notes_[method] = note;
  }
  auto out = open_out(path("selected_" + method + ".trees"));
  out << prefixed(head, "# ");
  write_trees(out, set.trees);
  return set;
}

void Pipeline::select() {
  staged("select", [&] {
    for (const auto& m : cfg_.methods) build_selected(m);
  });
}

SelectedSet Pipeline::selected(const std::string& method) {
  const fs::path file = path("selected_" + method + ".trees");
  if (!current(file, "select-" + method)) {
    staged("select", [&] { build_selected(method); });
  }
  SelectedSet set;
  set.method = method;
  const auto metric = comment_values(file, "metric");
  set.metric = metric.empty() ? "none" : metric.front();
  const auto notes = comment_values(file, "note");
  if (!notes.empty()) notes_[method] = notes.front();
  auto in = open_in(file);
  set.trees = read_trees(in);
  return set;
}

// ------------------------------------------------------------- evaluate ---

std::vector<ReportRow> Pipeline::evaluate() {
  std::vector<ReportRow> rows;
  staged("evaluate", [&] {
    const PolicyTree j_true = truth();
    std::vector<MethodPrior> priors;
    for (const auto& m : cfg_.methods) {
      SelectedSet set = selected(m);
      MethodPrior p;
      p.method = m;
      p.k = set.trees.size();
      p.metric = set.metric;
      for (auto& t : set.trees) t.clear_node_probs();
      if (cfg_.truth_in_set) set.trees.push_back(j_true);
      p.prior = ModelNodePrior::uniform(std::move(set.trees));
      priors.push_back(std::move(p));
    }
    rows = evaluate_pipeline(spec_, priors, j_true, cfg_.horizon, cfg_.runs,
                             derive_seed(cfg_.seed, "evaluate"));

    {
      auto out = open_out(path("timings.csv"));
      out << prefixed(header(), "# ");
      out << "method,solve_seconds,eval_seconds\n";
      for (const auto& r : rows) {
        out << r.method << ',' << fmt(r.solve_seconds) << ',' << fmt(r.eval_seconds)
            << '\n';
      }
    }
    if (!cfg_.report_timings) {
      for (auto& r : rows) r.solve_seconds = r.eval_seconds = 0.0;
    }

    auto csv = open_out(path("report.csv"));
    csv << prefixed(header(), "# ");
    csv << "method,K,metric,mean_reward,stderr,solve_seconds,eval_seconds,value\n";
    for (const auto& r : rows) {
      csv << r.method << ',' << r.k << ',' << r.metric << ',' << fmt(r.mean_reward)
          << ',' << fmt(r.std_error) << ',' << fmt(r.solve_seconds) << ','
          << fmt(r.eval_seconds) << ',' << fmt(r.value) << '\n';
    }

    json report;
    report["config"] = json::parse(to_json(cfg_));
    report["seed"] = cfg_.seed;
    report["rows"] = json::array();
    for (const auto& r : rows) {
      json row = {{"method", r.method},
                  {"K", r.k},
                  {"metric", r.metric},
                  {"mean_reward", r.mean_reward},
                  {"stderr", r.std_error},
                  {"solve_seconds", r.solve_seconds},
                  {"eval_seconds", r.eval_seconds},
                  {"value", r.value}};
      if (auto it = notes_.find(r.method); it != notes_.end()) row["note"] = it->second;
      report["rows"].push_back(std::move(row));
    }
    auto js = open_out(path("report.json"));
    js << report.dump(2) << '\n';
  });
  return rows;
}

std::vector<ReportRow> Pipeline::run() {
  simulate();
  reconstruct();
  train();
  generate();
  select();
  return evaluate();
}

// ---------------------------------------------------------------- sweep ---

void Pipeline::sweep() {
  staged("sweep", [&] {
    const std::vector<PolicyTree> cands = candidates(LossKind::kTree);
    const std::size_t k_max = cfg_.sweep.k_max ? cfg_.sweep.k_max : cands.size();
    if (k_max > cands.size() || cfg_.sweep.k_min > k_max) {
      throw ConfigError("sweep range [" + std::to_string(cfg_.sweep.k_min) + ", " +
                        std::to_string(k_max) + "] exceeds the " +
                        std::to_string(cands.size()) + " candidates");
    }
    const bool rewards = cfg_.sweep.kind == "metric-vs-reward";
    const PolicyTree j_true = rewards ? truth() : PolicyTree(cfg_.horizon, spec_.num_obs_j());

    struct Row {
      MetricKind by;
      std::size_t k;
      double mdf, icd;
      RewardStats reward;
    };
    std::vector<Row> table;
    for (MetricKind by : {MetricKind::kMdf, MetricKind::kIcd}) {
      std::vector<std::size_t> order;
      if (cfg_.select_mode == SelectMode::kGreedy) order = greedy_order(cands, k_max, by);
      for (std::size_t k = cfg_.sweep.k_min; k <= k_max; ++k) {
        std::vector<std::size_t> idx;
        if (cfg_.select_mode == SelectMode::kGreedy) {
          idx.assign(order.begin(), order.begin() + static_cast<long>(k));
        } else {
          idx = top_k(cands, k, by, SelectMode::kExhaustive).indices;
        }
        std::vector<PolicyTree> subset;
        for (std::size_t i : idx) subset.push_back(cands[i]);
        Row row{by, k, mdf(subset), icd(subset), {}};
        if (rewards) {
          for (auto& t : subset) t.clear_node_probs();
          if (cfg_.truth_in_set) subset.push_back(j_true);
          const auto prior = ModelNodePrior::uniform(std::move(subset));
          const auto policy = best_response(spec_, prior, cfg_.horizon);
          RandomSource rng(derive_seed(cfg_.seed, "evaluate"));
          row.reward = average_reward(spec_, policy, j_true, cfg_.runs, cfg_.horizon, rng);
        }
        table.push_back(row);
      }
    }

    if (!rewards) {
      auto out = open_out(path("sweep_k.csv"));
      out << prefixed(header(), "# ");
      out << "selection_metric,k,mdf,icd\n";
      for (const auto& r : table) {
        out << to_string(r.by) << ',' << r.k << ',' << fmt(r.mdf) << ','
            << fmt(r.icd) << '\n';
      }
      return;
    }
    auto out = open_out(path("sweep_reward.csv"));
    out << prefixed(header(), "# ");
    out << "selection_metric,k,metric_value,d_bar,mean_reward,std_error\n";
    for (MetricKind by : {MetricKind::kMdf, MetricKind::kIcd}) {
      std::vector<const Row*> rows;
      std::vector<double> values;
      for (const auto& r : table) {
        if (r.by != by) continue;
        rows.push_back(&r);
        values.push_back(by == MetricKind::kMdf ? r.mdf : r.icd);
      }
      const auto d_bar = min_max_normalize(values);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out << to_string(by) << ',' << rows[i]->k << ',' << fmt(values[i]) << ','
            << fmt(d_bar[i]) << ',' << fmt(rows[i]->reward.mean) << ','
            << fmt(rows[i]->reward.std_error) << '\n';
      }
    }
  });
}

// ------------------------------------------------------------- commands ---

void cmd_simulate(const ExperimentConfig& cfg) { Pipeline(cfg).simulate(); }
void cmd_reconstruct(const ExperimentConfig& cfg) { Pipeline(cfg).reconstruct(); }
void cmd_train(const ExperimentConfig& cfg) { Pipeline(cfg).train(); }
void cmd_generate(const ExperimentConfig& cfg) { Pipeline(cfg).generate(); }
void cmd_select(const ExperimentConfig& cfg) { Pipeline(cfg).select(); }
std::vector<ReportRow> cmd_evaluate(const ExperimentConfig& cfg) {
  return Pipeline(cfg).evaluate();
}
std::vector<ReportRow> cmd_run(const ExperimentConfig& cfg) { return Pipeline(cfg).run(); }
void cmd_sweep(const ExperimentConfig& cfg) { Pipeline(cfg).sweep(); }

}  // namespace veb
