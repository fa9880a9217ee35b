#include "harness/train.hpp"

#include <chrono>
#include <sstream>

#include "common/error.hpp"
#include "metalearn/meta_step.hpp"

namespace pamela {
namespace {

std::string number(double v) {
  Json j = v;
  return j.dump();
}

Json resumable_fields(const TrainConfig& c) {
  Json j = to_json(c);
  for (const char* key : {"iterations", "log_every", "histograms", "checkpoint_every", "eval_tasks", "eval_grid",
                          "eval_seed", "ablation_seeds"})
    j.erase(key);
  return j;
}

}  // namespace

std::string RunLog::to_csv(bool include_wall_ms) const {
  std::ostringstream out;
  out << "iteration,meta_loss";
  for (int j = 0; j <= steps; ++j) out << ",inner_loss_" << j;
  if (include_wall_ms) out << ",wall_ms";
  out << '\n';
  for (const auto& r : rows) {
    out << r.iteration << ',' << number(r.meta_loss);
    for (double l : r.inner_losses) out << ',' << number(l);
    if (include_wall_ms) out << ',' << number(r.wall_ms);
    out << '\n';
  }
  return out.str();
}

std::vector<Task> training_batch(const TrainConfig& config, std::int64_t iteration) {
  std::vector<Task> tasks;
  tasks.reserve(static_cast<std::size_t>(config.meta_batch));
  for (int k = 0; k < config.meta_batch; ++k) {
    Rng rng(derive_seed(config.seed, {kStreamTrain, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(k)}));
    tasks.push_back(sample_task(config.task, rng));
  }
  return tasks;
}

MetaGradientOptions meta_gradient_options(const TrainConfig& config, int threads, bool probe) {
  MetaGradientOptions o;
  o.loss = config.loss_kind();
  o.style = traits(config.algorithm).style;
  o.threads = threads;
  o.probe = probe;
  return o;
}

TrainResult train(const TrainConfig& config, const TrainOptions& options, const std::optional<Checkpoint>& resume) {
  config.validate();
  TrainResult result;
  if (resume) {
    if (resumable_fields(resume->config) != resumable_fields(config))
      throw ValueError("resume: checkpoint was produced by a different configuration");
    if (resume->iteration > config.iterations)
      throw ValueError("resume: checkpoint is at iteration " + std::to_string(resume->iteration) +
                       ", beyond the configured " + std::to_string(config.iterations));
    result.checkpoint = *resume;
    result.checkpoint.config = config;
  } else {
    result.checkpoint = Checkpoint::initial(config);
  }
  Checkpoint& state = result.checkpoint;
  const MlpSpec spec = config.model_spec();
  result.log.steps = state.phi.steps;

  const auto start = std::chrono::steady_clock::now();
  for (std::int64_t i = state.iteration; i < config.iterations; ++i) {
    const bool log_row = (i + 1) % config.log_every == 0 || i + 1 == config.iterations;
    const std::vector<Task> tasks = training_batch(config, i);
    MetaStepResult step;
    try {
      step = meta_step(spec, state.theta, state.phi, tasks, state.adam_theta, state.adam_phi, config.outer_lr,
                       meta_gradient_options(config, options.threads, log_row && config.histograms),
                       config.phi_lr());
    } catch (const NumericalError& e) {
      if (options.checkpoint_sink) options.checkpoint_sink(state);
      throw NumericalError("iteration " + std::to_string(i + 1) + ": " + e.what());
    }
    state.theta = std::move(step.theta);
    state.phi = std::move(step.phi);
    state.iteration = i + 1;

    if (log_row) {
      RunLogRow row;
      row.iteration = i + 1;
      row.meta_loss = step.gradient.meta_loss;
      row.inner_losses = step.gradient.mean_inner_losses;
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (options.on_log) options.on_log(row);
      result.log.rows.push_back(std::move(row));
      if (config.histograms) {
        auto hs = gradient_histograms(i + 1, step.gradient.probe_inner_gradients, step.gradient.theta_grad);
        for (auto& h : hs) result.histograms.push_back(std::move(h));
      }
    }
    const bool cadence = config.checkpoint_every > 0 && (i + 1) % config.checkpoint_every == 0;
    if (options.checkpoint_sink && cadence && i + 1 != config.iterations) options.checkpoint_sink(state);
  }
  if (options.checkpoint_sink) options.checkpoint_sink(state);
  return result;
}

}  // namespace pamela
