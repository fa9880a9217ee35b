#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "metalearn/meta_params.hpp"
#include "metalearn/variant.hpp"
#include "models/mlp.hpp"
#include "models/param_set.hpp"
#include "tasks/tasks.hpp"

namespace pamela {

enum class TaskType { Sine, Synthetic };

struct TaskConfig {
  TaskType type = TaskType::Sine;
  std::size_t k = 10;        // sine: training points per task
  std::size_t ways = 5;      // synthetic: M
  std::size_t shots = 5;     // synthetic: N
  std::size_t dim = 16;      // synthetic: d
  double sigma = 0.3;        // synthetic: cluster spread
};

struct TrainConfig {
  Algorithm algorithm = Algorithm::Pamela;
  int n_inner = 5;
  int w = 2;
  double inner_lr_init = 0.01;
  double outer_lr = 0.001;
  std::optional<double> phi_outer_lr;  // Adam rate for phi; unset means outer_lr
  int meta_batch = 4;
  std::int64_t iterations = 60000;
  std::uint64_t seed = 0;
  TaskConfig task;
  std::vector<std::size_t> hidden = {40, 40};
  std::int64_t log_every = 100;
  bool histograms = false;
  QGranularity q_granularity = QGranularity::PerParameter;
  std::int64_t checkpoint_every = 1000;
  int eval_tasks = 1000;
  int eval_grid = 1000;
  std::uint64_t eval_seed = 1234;
  int ablation_seeds = 1;

  MlpSpec model_spec() const;
  LossKind loss_kind() const;
  double phi_lr() const { return phi_outer_lr.value_or(outer_lr); }
  int steps() const { return effective_steps(algorithm, n_inner); }
  int interval() const { return effective_interval(algorithm, w); }

  // Throws ConfigError naming the first offending field.
  void validate() const;
};

// Parses and validates the JSON config schema.  Unknown keys are rejected.
TrainConfig config_from_json(const Json& j);
Json to_json(const TrainConfig& config);
TrainConfig load_config(const std::string& path);

// Draws the task for stream `rng` according to the task config.
Task sample_task(const TaskConfig& task, Rng& rng);

// Independent stream identifiers for derive_seed.
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamTrain = 2;
inline constexpr std::uint64_t kStreamEval = 3;
inline constexpr std::uint64_t kStreamAnalyze = 4;
inline constexpr std::uint64_t kStreamGradcheck = 5;

}  // namespace pamela
