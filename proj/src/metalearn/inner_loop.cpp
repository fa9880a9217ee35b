#include "metalearn/inner_loop.hpp"

#include <cmath>
#include <string>

#include "autodiff/ops.hpp"
#include "common/error.hpp"

namespace pamela {

ad::Tensor task_loss(const MlpSpec& spec, const ParamSet& params, const Dataset& data, LossKind kind) {
  const ad::Tensor out = forward(spec, params, data.x);
  if (kind == LossKind::Mse) return ad::mse_loss(out, data.y);
  return ad::softmax_cross_entropy(out, data.labels);
}

ParamSet inner_update_step(int j, int w, const ParamSet& theta_j, const ParamSet& grad_j, const ParamSet& q_j,
                           std::optional<SkipInput> skip) {
  if (skip.has_value() != is_skip_step(j, w)) {
    throw ValueError(skip ? "inner_update_step: skip given at non-skip step " + std::to_string(j)
                          : "inner_update_step: step " + std::to_string(j) + " requires a skip input");
  }
  theta_j.require_congruent(grad_j, "inner_update_step (gradient)");
  if (skip) {
    theta_j.require_congruent(skip->theta_j_minus_w, "inner_update_step (theta_{j-w})");
    if (skip->coupling.size() != theta_j.size()) throw ShapeError("inner_update_step: P entry count differs from theta");
  }
  if (q_j.size() != theta_j.size()) throw ShapeError("inner_update_step: Q entry count differs from theta");

  const ad::Tensor one = ad::Tensor::scalar(1.0);
  std::vector<ad::Tensor> next;
  next.reserve(theta_j.size());
  for (std::size_t i = 0; i < theta_j.size(); ++i) {
    const ad::Tensor& q = q_j.tensor(i);
    const ad::Tensor& g = grad_j.tensor(i);
    const ad::Tensor step = q.rank() == 0 ? ad::scale_by_scalar(g, q) : ad::hadamard_mul(q, g);
    ad::Tensor updated = ad::sub(theta_j.tensor(i), step);
    if (skip) {
      const ad::Tensor& p = skip->coupling.tensor(i);
      if (p.rank() != 0) throw ShapeError("inner_update_step: P entry '" + skip->coupling[i].name + "' must be rank-0");
      updated = ad::add(ad::scale_by_scalar(updated, ad::sub(one, p)),
                        ad::scale_by_scalar(skip->theta_j_minus_w.tensor(i), p));
    }
    next.push_back(std::move(updated));
  }
  return theta_j.with_tensors(std::move(next));
}

namespace {

void check_finite(double loss, int step) {
  if (!std::isfinite(loss))
    throw NumericalError("inner loop: non-finite training loss at step " + std::to_string(step));
}

ParamSet lift_constants(ad::Graph& graph, const ParamSet& params) {
  return params.transform([&graph](const ParamSet::Entry& e) {
    return e.tensor.is_constant() ? graph.variable(e.tensor) : e.tensor;
  });
}

}  // namespace

AdaptResult adapt(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi, const Dataset& d_tr, int n,
                  const AdaptOptions& options) {
  if (n != phi.steps)
    throw ValueError("adapt: n = " + std::to_string(n) + " but phi holds " + std::to_string(phi.steps) + " steps");
  if (d_tr.size() == 0) throw ValueError("adapt: empty training set");

  const bool differentiable = options.graph != nullptr;
  const MetaParams phi_used = differentiable ? phi : phi.detached();

  AdaptResult result;
  result.trajectory.reserve(static_cast<std::size_t>(n) + 1);
  result.trajectory.push_back(differentiable ? theta : theta.detached());

  for (int j = 0; j < n; ++j) {
    const ParamSet& current = result.trajectory.back();
    ParamSet grads;
    if (differentiable) {
      const ParamSet leaves = lift_constants(*options.graph, current);
      const ad::Tensor loss = task_loss(spec, leaves, d_tr, options.loss);
      check_finite(loss.item(), j);
      result.inner_losses.push_back(loss.item());
      grads = current.with_tensors(ad::grad(loss, leaves.tensors(), /*create_graph=*/true));
    } else {
      ad::Graph scratch;
      const ParamSet leaves = current.bind(scratch);
      const ad::Tensor loss = task_loss(spec, leaves, d_tr, options.loss);
      check_finite(loss.item(), j);
      result.inner_losses.push_back(loss.item());
      grads = current.with_tensors(ad::grad(loss, leaves.tensors(), /*create_graph=*/false));
    }

    std::optional<SkipInput> skip;
    if (is_skip_step(j, phi_used.interval_w)) {
      const ParamSet* coupling = phi_used.p_at(j);
      if (!coupling) throw ValueError("adapt: phi has no P for skip step " + std::to_string(j));
      skip.emplace(SkipInput{*coupling, result.trajectory[static_cast<std::size_t>(j - phi_used.interval_w)]});
    }
    ParamSet next = inner_update_step(j, phi_used.interval_w, current, grads, phi_used.q_at(j), skip);
    if (options.record_gradients) result.gradients.push_back(std::move(grads));
    result.trajectory.push_back(std::move(next));
  }

  result.theta_n = result.trajectory.back();
  const double final_loss = task_loss(spec, result.theta_n.detached(), d_tr, options.loss).item();
  check_finite(final_loss, n);
  result.inner_losses.push_back(final_loss);
  return result;
}

ad::Tensor meta_loss(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi, std::span<const Task> tasks,
                     LossKind kind, ad::Graph& graph) {
  if (tasks.empty()) throw ValueError("meta_loss: need at least one task");
  AdaptOptions options;
  options.loss = kind;
  options.graph = &graph;
  ad::Tensor total;
  for (const auto& task : tasks) {
    const AdaptResult r = adapt(spec, theta, phi, task.train, phi.steps, options);
    const ad::Tensor val = task_loss(spec, r.theta_n, task.val, kind);
    total = total.defined() ? ad::add(total, val) : val;
  }
  return total;
}

}  // namespace pamela
