#pragma once

#include <cstdint>

#include "models/param_set.hpp"

namespace pamela {

struct AdamState {
  ParamSet m;
  ParamSet v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros_like(const ParamSet& params);
};

// One bias-corrected Adam step.  `params` and `grads` must be congruent with
// the state; returns the updated parameters as constants.
ParamSet adam_update(const ParamSet& params, const ParamSet& grads, AdamState& state, double lr);

// params - lr * grads
ParamSet sgd_update(const ParamSet& params, const ParamSet& grads, double lr);

Json to_json(const AdamState& state);
AdamState adam_state_from_json(const Json& j);

}  // namespace pamela
