#include "metalearn/meta_step.hpp"

#include <cmath>

#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "common/parallel.hpp"

namespace pamela {
namespace {

struct TaskContribution {
  double val_loss = 0.0;
  std::vector<std::vector<double>> theta_grad;
  std::vector<std::vector<double>> phi_grad;
  std::vector<double> inner_losses;
  std::vector<ParamSet> inner_gradients;
};

std::vector<std::vector<double>> copy_values(const std::vector<ad::Tensor>& ts) {
  std::vector<std::vector<double>> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.emplace_back(t.values().begin(), t.values().end());
  return out;
}

ParamSet detach_all(const std::vector<ParamSet>& sets, std::size_t index) { return sets[index].detached(); }

TaskContribution second_order(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi, const Task& task,
                              LossKind kind, bool probe) {
  ad::Graph graph;
  const ParamSet theta_vars = theta.bind(graph);
  const MetaParams phi_vars = phi.bind(graph);
  AdaptOptions options;
  options.loss = kind;
  options.graph = &graph;
  options.record_gradients = probe;
  AdaptResult r = adapt(spec, theta_vars, phi_vars, task.train, phi.steps, options);
  const ad::Tensor val = task_loss(spec, r.theta_n, task.val, kind);

  std::vector<ad::Tensor> wrt = theta_vars.tensors();
  const auto phi_leaves = phi_vars.trainable().tensors();
  wrt.insert(wrt.end(), phi_leaves.begin(), phi_leaves.end());
  auto grads = ad::grad(val, wrt, /*create_graph=*/false);

  TaskContribution c;
  c.val_loss = val.item();
  c.theta_grad = copy_values({grads.begin(), grads.begin() + static_cast<std::ptrdiff_t>(theta.size())});
  c.phi_grad = copy_values({grads.begin() + static_cast<std::ptrdiff_t>(theta.size()), grads.end()});
  c.inner_losses = std::move(r.inner_losses);
  for (std::size_t j = 0; j < r.gradients.size(); ++j) c.inner_gradients.push_back(detach_all(r.gradients, j));
  return c;
}

TaskContribution first_order(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi, const Task& task,
                             LossKind kind, bool probe, bool reptile) {
  AdaptOptions options;
  options.loss = kind;
  options.record_gradients = probe;
  AdaptResult r = adapt(spec, theta, phi, task.train, phi.steps, options);

  TaskContribution c;
  if (reptile) {
    c.val_loss = task_loss(spec, r.theta_n, task.val, kind).item();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const auto a = theta.tensor(i).values();
      const auto b = r.theta_n.tensor(i).values();
      std::vector<double> diff(a.size());
      // theta - theta_n, so that "descending" it moves theta toward theta_n.
      for (std::size_t k = 0; k < a.size(); ++k) diff[k] = a[k] - b[k];
      c.theta_grad.push_back(std::move(diff));
    }
  } else {
    ad::Graph graph;
    const ParamSet leaves = r.theta_n.bind(graph);
    const ad::Tensor val = task_loss(spec, leaves, task.val, kind);
    c.val_loss = val.item();
    c.theta_grad = copy_values(ad::grad(val, leaves.tensors(), false));
  }
  c.inner_losses = std::move(r.inner_losses);
  c.inner_gradients = std::move(r.gradients);
  return c;
}

}  // namespace

MetaGradient compute_meta_gradient(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi,
                                   std::span<const Task> tasks, const MetaGradientOptions& options) {
  if (tasks.empty()) throw ValueError("meta-gradient: meta-batch is empty");
  phi.validate(theta);

  std::vector<TaskContribution> parts(tasks.size());
  parallel_for(tasks.size(), options.threads, [&](std::size_t k) {
    const bool probe = options.probe && k == 0;
    switch (options.style) {
      case MetaGradientStyle::SecondOrder:
        parts[k] = second_order(spec, theta, phi, tasks[k], options.loss, probe);
        break;
      case MetaGradientStyle::FirstOrder:
        parts[k] = first_order(spec, theta, phi, tasks[k], options.loss, probe, false);
        break;
      case MetaGradientStyle::Reptile:
        parts[k] = first_order(spec, theta, phi, tasks[k], options.loss, probe, true);
        break;
    }
  });

  // Second order sums over tasks; first-order and Reptile directions are
  // task averages.
  const double weight = options.style == MetaGradientStyle::SecondOrder ? 1.0 : 1.0 / static_cast<double>(tasks.size());

  MetaGradient out;
  const ParamSet phi_flat = phi.trainable();
  std::vector<std::vector<double>> tg(theta.size()), pg(phi_flat.size());
  for (std::size_t i = 0; i < theta.size(); ++i) tg[i].assign(theta.tensor(i).numel(), 0.0);
  for (std::size_t i = 0; i < phi_flat.size(); ++i) pg[i].assign(phi_flat.tensor(i).numel(), 0.0);
  out.mean_inner_losses.assign(static_cast<std::size_t>(phi.steps) + 1, 0.0);

  for (const auto& c : parts) {
    out.meta_loss += c.val_loss;
    for (std::size_t i = 0; i < tg.size(); ++i)
      for (std::size_t k = 0; k < tg[i].size(); ++k) tg[i][k] += weight * c.theta_grad[i][k];
    for (std::size_t i = 0; i < c.phi_grad.size(); ++i)
      for (std::size_t k = 0; k < pg[i].size(); ++k) pg[i][k] += c.phi_grad[i][k];
    for (std::size_t j = 0; j < out.mean_inner_losses.size(); ++j)
      out.mean_inner_losses[j] += c.inner_losses[j] / static_cast<double>(tasks.size());
  }

  std::vector<ad::Tensor> tt, pt;
  for (std::size_t i = 0; i < tg.size(); ++i) tt.emplace_back(theta.tensor(i).shape(), std::move(tg[i]));
  for (std::size_t i = 0; i < pg.size(); ++i) pt.emplace_back(phi_flat.tensor(i).shape(), std::move(pg[i]));
  out.theta_grad = theta.with_tensors(std::move(tt));
  out.phi_grad = phi_flat.with_tensors(std::move(pt));
  if (options.probe) out.probe_inner_gradients = std::move(parts.front().inner_gradients);
  return out;
}

MetaStepResult meta_step(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi,
                         std::span<const Task> tasks, AdamState& adam_theta, AdamState& adam_phi, double beta,
                         const MetaGradientOptions& options, std::optional<double> phi_beta) {
  MetaStepResult result;
  result.gradient = compute_meta_gradient(spec, theta, phi, tasks, options);
  const MetaGradient& g = result.gradient;
  if (!std::isfinite(g.meta_loss) || !g.theta_grad.all_finite() || !g.phi_grad.all_finite())
    throw NumericalError("meta-step: non-finite meta-loss or meta-gradient (meta-loss " + std::to_string(g.meta_loss) + ")");

  if (options.style == MetaGradientStyle::Reptile) {
    result.theta = sgd_update(theta.detached(), g.theta_grad, beta);
    result.phi = phi.detached();
    return result;
  }

  AdamState next_theta = adam_theta;
  AdamState next_phi = adam_phi;
  result.theta = adam_update(theta.detached(), g.theta_grad, next_theta, beta);
  result.phi = phi.detached();
  if (!g.phi_grad.empty()) result.phi = phi.with_trainable(adam_update(phi.trainable().detached(), g.phi_grad, next_phi, phi_beta.value_or(beta)));
  adam_theta = std::move(next_theta);
  adam_phi = std::move(next_phi);
  return result;
}

}  // namespace pamela
