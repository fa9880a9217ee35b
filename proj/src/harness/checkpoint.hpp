#pragma once

#include <cstdint>
#include <string>

#include "harness/config.hpp"
#include "metalearn/adam.hpp"
#include "metalearn/meta_params.hpp"
#include "models/param_set.hpp"

namespace pamela {

struct Checkpoint {
  TrainConfig config;
  ParamSet theta;
  MetaParams phi;
  AdamState adam_theta;
  AdamState adam_phi;
  std::int64_t iteration = 0;  // completed meta-iterations

  // Fresh state at iteration 0.
  static Checkpoint initial(const TrainConfig& config);
};

Json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const Json& j);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Writes `text` to `path` through a temporary file and rename.
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace pamela
