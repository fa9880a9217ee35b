#include "harness/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace pamela {

Checkpoint Checkpoint::initial(const TrainConfig& config) {
  config.validate();
  const MlpSpec spec = config.model_spec();
  Checkpoint c;
  c.config = config;
  c.theta = init_params(spec, derive_seed(config.seed, {kStreamInit}));
  c.phi = build_meta_params(spec, config.n_inner, config.w, config.algorithm, config.inner_lr_init, config.q_granularity);
  c.adam_theta = AdamState::zeros_like(c.theta);
  c.adam_phi = AdamState::zeros_like(c.phi.trainable());
  return c;
}

Json to_json(const Checkpoint& c) {
  Json j;
  j["config"] = to_json(c.config);
  j["iteration"] = c.iteration;
  j["theta"] = to_json(c.theta);
  j["phi"] = to_json(c.phi);
  j["adam_theta"] = to_json(c.adam_theta);
  j["adam_phi"] = to_json(c.adam_phi);
  return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
  Checkpoint c;
  try {
    c.config = config_from_json(j.at("config"));
    c.iteration = j.at("iteration").get<std::int64_t>();
    c.theta = paramset_from_json(j.at("theta"));
    c.phi = meta_params_from_json(j.at("phi"));
    c.adam_theta = adam_state_from_json(j.at("adam_theta"));
    c.adam_phi = adam_state_from_json(j.at("adam_phi"));
  } catch (const Json::exception& e) {
    throw ValueError(std::string("malformed checkpoint: ") + e.what());
  }
  check_params(c.config.model_spec(), c.theta);
  c.phi.validate(c.theta);
  c.theta.require_congruent(c.adam_theta.m, "checkpoint Adam state (theta)");
  c.phi.trainable().require_congruent(c.adam_phi.m, "checkpoint Adam state (phi)");
  return c;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, target);
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  write_text_atomic(path, to_json(checkpoint).dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValueError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace pamela
