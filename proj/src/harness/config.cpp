#include "harness/config.hpp"

#include <fstream>
#include <set>

#include "common/error.hpp"

namespace pamela {
namespace {

const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + key, "required field is missing");
  return j.at(key);
}

std::int64_t as_int(const Json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field, "must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t as_seed(const Json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(field, "must be a non-negative integer");
}

double as_number(const Json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "must be a number");
  return v.get<double>();
}

std::string as_string(const Json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "must be a string");
  return v.get<std::string>();
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& path) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError(path + key, "unknown field");
}

}  // namespace

MlpSpec TrainConfig::model_spec() const {
  MlpSpec spec;
  spec.hidden_dims = hidden;
  if (task.type == TaskType::Sine) {
    spec.input_dim = 1;
    spec.output_dim = 1;
  } else {
    spec.input_dim = task.dim;
    spec.output_dim = task.ways;
  }
  return spec;
}

LossKind TrainConfig::loss_kind() const { return task.type == TaskType::Sine ? LossKind::Mse : LossKind::CrossEntropy; }

void TrainConfig::validate() const {
  if (n_inner < 1) throw ConfigError("n_inner", "must be >= 1");
  if (w < 1) throw ConfigError("w", "must be >= 1");
  if (!(inner_lr_init > 0.0)) throw ConfigError("inner_lr_init", "must be > 0");
  if (!(outer_lr >= 0.0)) throw ConfigError("outer_lr", "must be >= 0");
  if (phi_outer_lr && !(*phi_outer_lr >= 0.0)) throw ConfigError("phi_outer_lr", "must be >= 0");
  if (meta_batch < 1) throw ConfigError("meta_batch", "must be >= 1");
  if (iterations < 1) throw ConfigError("iterations", "must be >= 1");
  if (log_every < 1) throw ConfigError("log_every", "must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every", "must be >= 0");
  if (eval_tasks < 1) throw ConfigError("eval_tasks", "must be >= 1");
  if (eval_grid < 2) throw ConfigError("eval_grid", "must be >= 2");
  if (ablation_seeds < 1) throw ConfigError("ablation_seeds", "must be >= 1");
  for (auto h : hidden)
    if (h < 1) throw ConfigError("model.hidden", "layer widths must be >= 1");
  if (task.type == TaskType::Sine) {
    if (task.k < 1) throw ConfigError("task.K", "must be >= 1");
  } else {
    if (task.ways < 2) throw ConfigError("task.M", "must be >= 2");
    if (task.shots < 1) throw ConfigError("task.N", "must be >= 1");
    if (task.dim < 1) throw ConfigError("task.d", "must be >= 1");
    if (!(task.sigma > 0.0)) throw ConfigError("task.sigma", "must be > 0");
  }
}

TrainConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  reject_unknown(j,
                 {"algorithm", "n_inner", "w", "inner_lr_init", "outer_lr", "phi_outer_lr", "meta_batch", "iterations", "seed", "task",
                  "model", "log_every", "histograms", "q_granularity", "checkpoint_every", "eval_tasks", "eval_grid",
                  "eval_seed", "ablation_seeds"},
                 "");
  TrainConfig c;
  try {
    c.algorithm = parse_algorithm(as_string(require(j, "algorithm", ""), "algorithm"));
  } catch (const ValueError& e) {
    throw ConfigError("algorithm", e.what());
  }
  c.n_inner = static_cast<int>(as_int(require(j, "n_inner", ""), "n_inner"));
  c.w = static_cast<int>(as_int(require(j, "w", ""), "w"));
  c.inner_lr_init = as_number(require(j, "inner_lr_init", ""), "inner_lr_init");
  c.outer_lr = as_number(require(j, "outer_lr", ""), "outer_lr");
  if (j.contains("phi_outer_lr")) c.phi_outer_lr = as_number(j.at("phi_outer_lr"), "phi_outer_lr");
  c.meta_batch = static_cast<int>(as_int(require(j, "meta_batch", ""), "meta_batch"));
  c.iterations = as_int(require(j, "iterations", ""), "iterations");
  c.seed = as_seed(require(j, "seed", ""), "seed");

  const Json& task = require(j, "task", "");
  if (!task.is_object()) throw ConfigError("task", "must be an object");
  const std::string type = as_string(require(task, "type", "task."), "task.type");
  if (type == "sine") {
    reject_unknown(task, {"type", "K"}, "task.");
    c.task.type = TaskType::Sine;
    const auto k = as_int(require(task, "K", "task."), "task.K");
    if (k < 1) throw ConfigError("task.K", "must be >= 1");
    c.task.k = static_cast<std::size_t>(k);
  } else if (type == "synthetic" || type == "classification") {
    reject_unknown(task, {"type", "M", "N", "d", "sigma"}, "task.");
    c.task.type = TaskType::Synthetic;
    const auto m = as_int(require(task, "M", "task."), "task.M");
    const auto n = as_int(require(task, "N", "task."), "task.N");
    const auto d = as_int(require(task, "d", "task."), "task.d");
    if (m < 2) throw ConfigError("task.M", "must be >= 2");
    if (n < 1) throw ConfigError("task.N", "must be >= 1");
    if (d < 1) throw ConfigError("task.d", "must be >= 1");
    c.task.ways = static_cast<std::size_t>(m);
    c.task.shots = static_cast<std::size_t>(n);
    c.task.dim = static_cast<std::size_t>(d);
    c.task.sigma = as_number(require(task, "sigma", "task."), "task.sigma");
  } else {
    throw ConfigError("task.type", "must be 'sine' or 'synthetic', got '" + type + "'");
  }

  const Json& model = require(j, "model", "");
  if (!model.is_object()) throw ConfigError("model", "must be an object");
  reject_unknown(model, {"hidden"}, "model.");
  const Json& hidden = require(model, "hidden", "model.");
  if (!hidden.is_array()) throw ConfigError("model.hidden", "must be an array of layer widths");
  c.hidden.clear();
  for (const auto& h : hidden) {
    const auto width = as_int(h, "model.hidden");
    if (width < 1) throw ConfigError("model.hidden", "layer widths must be >= 1");
    c.hidden.push_back(static_cast<std::size_t>(width));
  }

  if (j.contains("log_every")) c.log_every = as_int(j.at("log_every"), "log_every");
  if (j.contains("histograms")) {
    if (!j.at("histograms").is_boolean()) throw ConfigError("histograms", "must be a boolean");
    c.histograms = j.at("histograms").get<bool>();
  }
  if (j.contains("q_granularity")) {
    try {
      c.q_granularity = parse_granularity(as_string(j.at("q_granularity"), "q_granularity"));
    } catch (const ValueError& e) {
      throw ConfigError("q_granularity", e.what());
    }
  }
  if (j.contains("checkpoint_every")) c.checkpoint_every = as_int(j.at("checkpoint_every"), "checkpoint_every");
  if (j.contains("eval_tasks")) c.eval_tasks = static_cast<int>(as_int(j.at("eval_tasks"), "eval_tasks"));
  if (j.contains("eval_grid")) c.eval_grid = static_cast<int>(as_int(j.at("eval_grid"), "eval_grid"));
  if (j.contains("eval_seed")) c.eval_seed = as_seed(j.at("eval_seed"), "eval_seed");
  if (j.contains("ablation_seeds")) c.ablation_seeds = static_cast<int>(as_int(j.at("ablation_seeds"), "ablation_seeds"));

  c.validate();
  return c;
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["n_inner"] = c.n_inner;
  j["w"] = c.w;
  j["inner_lr_init"] = c.inner_lr_init;
  j["outer_lr"] = c.outer_lr;
  if (c.phi_outer_lr) j["phi_outer_lr"] = *c.phi_outer_lr;
  j["meta_batch"] = c.meta_batch;
  j["iterations"] = c.iterations;
  j["seed"] = c.seed;
  Json task;
  if (c.task.type == TaskType::Sine) {
    task["type"] = "sine";
    task["K"] = c.task.k;
  } else {
    task["type"] = "synthetic";
    task["M"] = c.task.ways;
    task["N"] = c.task.shots;
    task["d"] = c.task.dim;
    task["sigma"] = c.task.sigma;
  }
  j["task"] = std::move(task);
  j["model"] = Json{{"hidden", c.hidden}};
  j["log_every"] = c.log_every;
  j["histograms"] = c.histograms;
  j["q_granularity"] = std::string(to_string(c.q_granularity));
  j["checkpoint_every"] = c.checkpoint_every;
  j["eval_tasks"] = c.eval_tasks;
  j["eval_grid"] = c.eval_grid;
  j["eval_seed"] = c.eval_seed;
  j["ablation_seeds"] = c.ablation_seeds;
  return j;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<root>", "config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

Task sample_task(const TaskConfig& task, Rng& rng) {
  if (task.type == TaskType::Sine) return sample_sine_task(rng, task.k).as_task();
  return sample_classification_episode(rng, task.ways, task.shots, task.dim, task.sigma).as_task();
}

}  // namespace pamela
