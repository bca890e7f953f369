#include "veb/config.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "veb/error.hpp"

namespace veb {

using nlohmann::json;

namespace {

template <class T>
void get(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) {
    throw ConfigError(std::string("config key '") + key + "' must be an object");
  }
  return j.at(key);
}

void read_cell(const json& j, const char* key, GridCell& cell) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2) {
    throw ConfigError(std::string("config key '") + key + "' must be [row, col]");
  }
  cell = {v[0].get<int>(), v[1].get<int>()};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (domain != "tiger" && domain != "uav") {
    throw ConfigError("unknown domain '" + domain + "'");
  }
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (history_length < static_cast<std::size_t>(horizon)) {
    throw ConfigError("history length must be >= horizon");
  }
  if (reconstructed < 1) throw ConfigError("reconstructed tree count must be >= 1");
  if (generated < 1) throw ConfigError("generated tree count must be >= 1");
  if (k < 1 || k > generated) {
    throw ConfigError("K must lie in [1, M]");
  }
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (truth.kind != "random" && truth.kind != "tree") {
    throw ConfigError("truth.kind must be 'random' or 'tree'");
  }
  if (truth.epsilon < 0.0 || truth.epsilon > 1.0) {
    throw ConfigError("truth.epsilon must lie in [0, 1]");
  }
  if (methods.empty()) throw ConfigError("no methods configured");
  for (const auto& m : methods) {
    const auto& known = known_methods();
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
  }
  if (sweep.kind != "k-range" && sweep.kind != "metric-vs-reward") {
    throw ConfigError("sweep.kind must be 'k-range' or 'metric-vs-reward'");
  }
  const std::size_t k_max = sweep.k_max ? sweep.k_max : generated;
  if (sweep.k_min < 1 || sweep.k_min > k_max || k_max > generated) {
    throw ConfigError("sweep range must satisfy 1 <= k_min <= k_max <= M");
  }
  train.validate();
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig cfg;
  get(root, "domain", cfg.domain);
  {
    const json& t = section(root, "tiger");
    get(t, "listen_reward", cfg.tiger.listen_reward);
    get(t, "gold_reward", cfg.tiger.gold_reward);
    get(t, "tiger_penalty", cfg.tiger.tiger_penalty);
    get(t, "shared_gold_reward", cfg.tiger.shared_gold_reward);
    get(t, "listen_accuracy", cfg.tiger.listen_accuracy);
    get(t, "creak_accuracy", cfg.tiger.creak_accuracy);
  }
  {
    const json& u = section(root, "uav");
    read_cell(u, "safe_house", cfg.uav.safe_house);
    read_cell(u, "start_i", cfg.uav.start_i);
    read_cell(u, "start_j", cfg.uav.start_j);
    get(u, "observation_accuracy", cfg.uav.observation_accuracy);
    get(u, "move_success", cfg.uav.move_success);
    get(u, "capture_reward", cfg.uav.capture_reward);
    get(u, "escape_penalty", cfg.uav.escape_penalty);
    get(u, "step_reward", cfg.uav.step_reward);
  }
  {
    const json& h = section(root, "history");
    get(h, "length", cfg.history_length);
    get(h, "subject_action", cfg.subject_action);
  }
  {
    const json& t = section(root, "truth");
    get(t, "kind", cfg.truth.kind);
    get(t, "nodes", cfg.truth.nodes);
    get(t, "epsilon", cfg.truth.epsilon);
  }
  get(root, "horizon", cfg.horizon);
  get(root, "reconstructed", cfg.reconstructed);
  get(root, "generated", cfg.generated);
  get(root, "k", cfg.k);
  if (root.contains("metric")) cfg.metric = parse_metric(root.at("metric").get<std::string>());
  if (root.contains("select_mode")) {
    const auto mode = root.at("select_mode").get<std::string>();
    if (mode == "greedy") {
      cfg.select_mode = SelectMode::kGreedy;
    } else if (mode == "exhaustive") {
      cfg.select_mode = SelectMode::kExhaustive;
    } else {
      throw ConfigError("select_mode must be 'greedy' or 'exhaustive'");
    }
  }
  get(root, "allow_empty_projection", cfg.allow_empty_projection);
  get(root, "methods", cfg.methods);
  {
    const json& t = section(root, "train");
    get(t, "learning_rate", cfg.train.learning_rate);
    get(t, "batch_size", cfg.train.batch_size);
    get(t, "samples", cfg.train.samples);
    get(t, "max_epochs", cfg.train.max_epochs);
    get(t, "convergence_tol", cfg.train.convergence_tol);
    get(t, "convergence_window", cfg.train.convergence_window);
    get(t, "clip", cfg.train.clip);
    get(t, "hidden_dim", cfg.train.hidden_dim);
    get(t, "latent_dim", cfg.train.latent_dim);
  }
  get(root, "runs", cfg.runs);
  get(root, "truth_in_set", cfg.truth_in_set);
  get(root, "report_timings", cfg.report_timings);
  {
    const json& s = section(root, "sweep");
    get(s, "kind", cfg.sweep.kind);
    get(s, "k_min", cfg.sweep.k_min);
    get(s, "k_max", cfg.sweep.k_max);
  }
  get(root, "seed", cfg.seed);
  if (root.contains("output_dir")) {
    cfg.output_dir = root.at("output_dir").get<std::string>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const ExperimentConfig& cfg) {
  json j;
  j["domain"] = cfg.domain;
  j["tiger"] = {{"listen_reward", cfg.tiger.listen_reward},
                {"gold_reward", cfg.tiger.gold_reward},
                {"tiger_penalty", cfg.tiger.tiger_penalty},
                {"shared_gold_reward", cfg.tiger.shared_gold_reward},
                {"listen_accuracy", cfg.tiger.listen_accuracy},
                {"creak_accuracy", cfg.tiger.creak_accuracy}};
  const auto cell = [](GridCell c) { return json::array({c.row, c.col}); };
  j["uav"] = {{"safe_house", cell(cfg.uav.safe_house)},
              {"start_i", cell(cfg.uav.start_i)},
              {"start_j", cell(cfg.uav.start_j)},
              {"observation_accuracy", cfg.uav.observation_accuracy},
              {"move_success", cfg.uav.move_success},
              {"capture_reward", cfg.uav.capture_reward},
              {"escape_penalty", cfg.uav.escape_penalty},
              {"step_reward", cfg.uav.step_reward}};
  j["history"] = {{"length", cfg.history_length},
                  {"subject_action", cfg.subject_action}};
  j["truth"] = {{"kind", cfg.truth.kind},
                {"nodes", cfg.truth.nodes},
                {"epsilon", cfg.truth.epsilon}};
  j["horizon"] = cfg.horizon;
  j["reconstructed"] = cfg.reconstructed;
  j["generated"] = cfg.generated;
  j["k"] = cfg.k;
  j["metric"] = std::string(to_string(cfg.metric));
  j["select_mode"] = cfg.select_mode == SelectMode::kGreedy ? "greedy" : "exhaustive";
  j["allow_empty_projection"] = cfg.allow_empty_projection;
  j["methods"] = cfg.methods;
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"batch_size", cfg.train.batch_size},
                {"samples", cfg.train.samples},
                {"max_epochs", cfg.train.max_epochs},
                {"convergence_tol", cfg.train.convergence_tol},
                {"convergence_window", cfg.train.convergence_window},
                {"clip", cfg.train.clip},
                {"hidden_dim", cfg.train.hidden_dim},
                {"latent_dim", cfg.train.latent_dim}};
  j["runs"] = cfg.runs;
  j["truth_in_set"] = cfg.truth_in_set;
  j["report_timings"] = cfg.report_timings;
  j["sweep"] = {{"kind", cfg.sweep.kind},
                {"k_min", cfg.sweep.k_min},
                {"k_max", cfg.sweep.k_max}};
  j["seed"] = cfg.seed;
  return j.dump();
}

DomainSpec make_domain(const ExperimentConfig& cfg) {
  return cfg.domain == "uav" ? uav_spec(cfg.uav) : tiger_spec(cfg.tiger);
}

}  // namespace veb
