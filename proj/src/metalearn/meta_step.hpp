#pragma once

#include <optional>
#include <span>
#include <vector>

#include "metalearn/adam.hpp"
#include "metalearn/inner_loop.hpp"
#include "metalearn/meta_params.hpp"
#include "metalearn/variant.hpp"

namespace pamela {

struct MetaGradient {
  double meta_loss = 0.0;    // sum over tasks of L_val(theta_n)
  ParamSet theta_grad;
  ParamSet phi_grad;         // congruent with phi.trainable()
  std::vector<double> mean_inner_losses;       // per step, averaged over tasks
  std::vector<ParamSet> probe_inner_gradients;  // task 0's g_0..g_{n-1}, if requested
};

struct MetaGradientOptions {
  LossKind loss = LossKind::Mse;
  MetaGradientStyle style = MetaGradientStyle::SecondOrder;
  int threads = 1;
  bool probe = false;
};

// Each task runs on its own graph; per-task results are reduced in task order.
MetaGradient compute_meta_gradient(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi,
                                   std::span<const Task> tasks, const MetaGradientOptions& options);

struct MetaStepResult {
  ParamSet theta;
  MetaParams phi;
  MetaGradient gradient;
};

// One outer-loop update.  Second- and first-order styles drive Adam on theta
// (and on the trainable part of phi); Reptile moves theta by
// beta * mean(theta_n - theta) without Adam.  Throws NumericalError on a
// non-finite meta-gradient, leaving the Adam states untouched.  `phi_beta`
// is the Adam rate for phi; it defaults to `beta`.
MetaStepResult meta_step(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi,
                         std::span<const Task> tasks, AdamState& adam_theta, AdamState& adam_phi, double beta,
                         const MetaGradientOptions& options, std::optional<double> phi_beta = std::nullopt);

}  // namespace pamela
