#include "stablesqf/io/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace stablesqf::io {

using nlohmann::json;

void ExperimentConfig::validate() const {
  model.validate();
  train.validate(model);
  if (n_origins < 1) throw std::invalid_argument("need at least one evaluation origin");
  if (season < 1) throw std::invalid_argument("season must be >= 1");
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument("config section '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("unknown config key '" + where + "." + key + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + where + "." + key + "' has the wrong type");
  }
}

std::size_t read_size(const json& obj, const char* key, std::size_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw std::invalid_argument("config key '" + where + "." + key +
                                "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

KnotGridPtr parse_knots(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "default") return make_default_knots();
    if (s.rfind("uniform:", 0) == 0) return make_uniform_knots(std::stoul(s.substr(8)));
    throw std::invalid_argument("model.knots must be 'default', 'uniform:<L>' or an array");
  }
  if (v.is_array()) return std::make_shared<const KnotGrid>(v.get<std::vector<double>>());
  throw std::invalid_argument("model.knots must be 'default', 'uniform:<L>' or an array");
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, {"model", "train", "eval"}, "root");
  ExperimentConfig cfg;

  if (root.contains("model")) {
    const auto& m = root.at("model");
    reject_unknown(m, {"lookback", "horizon", "blocks", "width", "backcast_relu", "knots"}, "model");
    cfg.model.lookback = read_size(m, "lookback", cfg.model.lookback, "model");
    cfg.model.horizon = read_size(m, "horizon", cfg.model.horizon, "model");
    cfg.model.n_blocks = read_size(m, "blocks", cfg.model.n_blocks, "model");
    cfg.model.hidden_width = read_size(m, "width", cfg.model.hidden_width, "model");
    read(m, "backcast_relu", cfg.model.backcast_relu, "model");
    if (m.contains("knots")) cfg.model.knots = parse_knots(m.at("knots"));
  }
  if (root.contains("train")) {
    const auto& t = root.at("train");
    reject_unknown(t,
                   {"lambda", "p", "weight", "batch_size", "iterations", "learning_rate", "ema_phi",
                    "origin_range", "seed", "augment", "training_levels"},
                   "train");
    auto& tc = cfg.train;
    read(t, "lambda", tc.lambda, "train");
    read(t, "p", tc.wasserstein_order, "train");
    if (t.contains("weight")) {
      std::string w;
      read(t, "weight", w, "train");
      tc.instability_weight = parse_weight_kind(w);
    }
    tc.batch_size = read_size(t, "batch_size", tc.batch_size, "train");
    tc.iterations = read_size(t, "iterations", tc.iterations, "train");
    read(t, "learning_rate", tc.learning_rate, "train");
    read(t, "ema_phi", tc.ema_phi, "train");
    if (t.contains("origin_range")) {
      if (t.at("origin_range").is_null()) {
        tc.origin_range.reset();
      } else {
        tc.origin_range = read_size(t, "origin_range", 0, "train");
      }
    }
    read(t, "seed", tc.seed, "train");
    read(t, "augment", tc.augment, "train");
    if (t.contains("training_levels")) {
      const auto& v = t.at("training_levels");
      tc.training_grid = v.is_array() ? QuantileGrid(v.get<std::vector<double>>())
                                      : QuantileGrid::midpoints(read_size(t, "training_levels", 0, "train"));
    }
  }
  if (root.contains("eval")) {
    const auto& e = root.at("eval");
    reject_unknown(e, {"origins", "season"}, "eval");
    cfg.n_origins = read_size(e, "origins", cfg.n_origins, "eval");
    cfg.season = read_size(e, "season", cfg.season, "eval");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string to_json(const ExperimentConfig& cfg) {
  json root;
  const auto knots = cfg.model.knots->knots();
  root["model"] = {{"lookback", cfg.model.lookback},
                   {"horizon", cfg.model.horizon},
                   {"blocks", cfg.model.n_blocks},
                   {"width", cfg.model.hidden_width},
                   {"backcast_relu", cfg.model.backcast_relu},
                   {"knots", std::vector<double>(knots.begin(), knots.end())}};
  const auto& tc = cfg.train;
  const auto levels = tc.training_grid.levels();
  root["train"] = {{"lambda", tc.lambda},
                   {"p", tc.wasserstein_order},
                   {"weight", std::string(to_string(tc.instability_weight))},
                   {"batch_size", tc.batch_size},
                   {"iterations", tc.iterations},
                   {"learning_rate", tc.learning_rate},
                   {"ema_phi", tc.ema_phi},
                   {"origin_range", tc.origin_range ? json(*tc.origin_range) : json(nullptr)},
                   {"seed", tc.seed},
                   {"augment", tc.augment},
                   {"training_levels", std::vector<double>(levels.begin(), levels.end())}};
  root["eval"] = {{"origins", cfg.n_origins}, {"season", cfg.season}};
  return root.dump(2);
}

ExperimentConfig desk_preset() {
  ExperimentConfig cfg;
  cfg.model.lookback = 24;
  cfg.model.horizon = 6;
  cfg.model.n_blocks = 2;
  cfg.model.hidden_width = 64;
  cfg.train.batch_size = 128;
  cfg.train.iterations = 800;
  cfg.train.learning_rate = 1e-3;
  cfg.train.ema_phi = 0.99;
  cfg.train.origin_range = 60;
  return cfg;
}

}  // namespace stablesqf::io
