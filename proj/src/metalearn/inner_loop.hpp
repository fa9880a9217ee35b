#pragma once

#include <optional>
#include <span>
#include <vector>

#include "autodiff/graph.hpp"
#include "metalearn/meta_params.hpp"
#include "models/mlp.hpp"
#include "tasks/tasks.hpp"

namespace pamela {

ad::Tensor task_loss(const MlpSpec& spec, const ParamSet& params, const Dataset& data, LossKind kind);

struct SkipInput {
  const ParamSet& coupling;       // P_j, one rank-0 tensor per theta tensor
  const ParamSet& theta_j_minus_w;
};

// theta_{j+1} = theta_j - Q_j * g_j, or on a skip step
// theta_{j+1} = (1 - P_j) (theta_j - Q_j * g_j) + P_j theta_{j-w}.
// The skip input must be present exactly on skip steps of interval w.
ParamSet inner_update_step(int j, int w, const ParamSet& theta_j, const ParamSet& grad_j, const ParamSet& q_j,
                           std::optional<SkipInput> skip);

struct AdaptOptions {
  LossKind loss = LossKind::Mse;
  // When set, every step is recorded in this graph with differentiable
  // gradients so the result can be backpropagated to theta and phi.  When
  // null, adaptation is first-order and returns constants.
  ad::Graph* graph = nullptr;
  bool record_gradients = false;
};

struct AdaptResult {
  ParamSet theta_n;
  std::vector<ParamSet> trajectory;  // theta_0 .. theta_n
  std::vector<double> inner_losses;  // L_tr(theta_0) .. L_tr(theta_n)
  std::vector<ParamSet> gradients;   // g_0 .. g_{n-1}, when recorded
};

AdaptResult adapt(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi, const Dataset& d_tr, int n,
                  const AdaptOptions& options);

// Sum over tasks of the validation loss after adaptation.  `theta` and `phi`
// should already be bound into `graph` for the result to be differentiable.
ad::Tensor meta_loss(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi, std::span<const Task> tasks,
                     LossKind kind, ad::Graph& graph);

}  // namespace pamela
