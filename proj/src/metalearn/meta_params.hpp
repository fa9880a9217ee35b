#pragma once

#include <limits>
#include <map>
#include <vector>

#include "autodiff/graph.hpp"
#include "metalearn/variant.hpp"
#include "models/mlp.hpp"
#include "models/param_set.hpp"

namespace pamela {

// Interval value meaning "no gradient-skip connections" (w = infinity).
inline constexpr int kNoSkip = std::numeric_limits<int>::max();

// Step j mixes in theta_{j-w} iff j >= w and j is a multiple of w.
bool is_skip_step(int j, int w);
std::vector<int> skip_steps(int n, int w);

// Inner-loop meta-parameters: per-step preconditioners Q_0..Q_{n-1} and
// per-tensor skip coefficients P_j for every skip step j.
//
// `q` holds one ParamSet per step, except when `shared_q` is set, in which
// case a single ParamSet serves every step.  Q entries are either
// theta-shaped (per-parameter) or rank-0 (per-tensor).  P entries are always
// rank-0 and carry the name of the theta tensor they act on.
struct MetaParams {
  int steps = 0;
  int interval_w = kNoSkip;
  bool shared_q = false;
  bool q_trainable = false;
  bool p_trainable = false;
  std::vector<ParamSet> q;
  std::map<int, ParamSet> p;

  const ParamSet& q_at(int j) const;
  const ParamSet* p_at(int j) const;

  // Throws ShapeError/ValueError if the structure does not fit `theta`.
  void validate(const ParamSet& theta) const;

  // Trainable entries flattened into one set ("q{j}/<name>", "q/<name>" when
  // shared, "p{j}/<name>"), in a fixed order.
  ParamSet trainable() const;
  MetaParams with_trainable(const ParamSet& flat) const;
  // Trainable entries become leaves of `graph`; frozen ones stay constants.
  MetaParams bind(ad::Graph& graph) const;
  MetaParams detached() const;

  bool bit_equal(const MetaParams& other) const;
};

// Q_j = alpha0 everywhere and P = 0.  MetaSGD forces a single step; variants
// without skips ignore `w`.
MetaParams build_meta_params(const MlpSpec& spec, int n, int w, Algorithm variant, double alpha0,
                             QGranularity granularity = QGranularity::PerParameter);

// Step count a variant actually runs with.
int effective_steps(Algorithm variant, int n);
int effective_interval(Algorithm variant, int w);

Json to_json(const MetaParams& phi);
MetaParams meta_params_from_json(const Json& j);

}  // namespace pamela
