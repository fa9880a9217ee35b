#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "harness/checkpoint.hpp"

namespace pamela {

struct RegressionEval {
  std::size_t k = 0;
  double mean_mse = 0.0;
  double ci95 = 0.0;  // 1.96 * std / sqrt(num_tasks)
  int num_tasks = 0;
  std::vector<double> per_task;
};

struct ClassificationEval {
  double mean_accuracy = 0.0;
  double ci95 = 0.0;
  int num_episodes = 0;
  std::vector<double> per_episode;
};

// Mean and 1.96 * sample std / sqrt(N).
std::pair<double, double> mean_ci95(std::span<const double> values);

// MSE of `predict` against the task curve on `grid` equally spaced points.
double grid_mse(const SineParams& params, const std::function<std::vector<double>(const std::vector<double>&)>& predict,
                std::size_t grid);

// Per task: draw K fresh points, adapt from the checkpoint's theta with its
// inner loop, and score on the dense grid.  Task t uses
// derive_seed(seed, {eval, t}), so every checkpoint sees the same tasks.
RegressionEval evaluate_regression(const Checkpoint& checkpoint, std::size_t k, int num_tasks = 1000, int grid = 1000,
                                   std::uint64_t seed = 1234, int threads = 1);

// Query accuracy after adapting on the support set.
ClassificationEval evaluate_classification(const Checkpoint& checkpoint, int num_episodes, std::uint64_t seed = 1234,
                                           int threads = 1);

Json to_json(const RegressionEval& e);
Json to_json(const ClassificationEval& e);

// ---- gradient check ---------------------------------------------------------

struct GradcheckOptions {
  double step = 1e-5;
  // Coordinates compared; 0 means all of them, otherwise a seeded subset.
  std::size_t max_coordinates = 0;
  int threads = 1;
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::string worst_coordinate;  // "<tensor>[<index>]"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
};

// |a - f| / max(|a|, |f|, kGradcheckFloor)
inline constexpr double kGradcheckFloor = 1e-6;
double relative_error(double analytic, double numeric);

// Compares the autodiff gradient of meta_loss with respect to theta and the
// trainable meta-parameters against central finite differences.  Q is
// perturbed to alpha * U(0.5, 1.5) and P to U(-0.3, 0.3) first so the check
// does not sit at the symmetric initial point.
GradcheckReport gradcheck(const TrainConfig& config, const GradcheckOptions& options = {});

Json to_json(const GradcheckReport& r);

// ---- ablation ---------------------------------------------------------------

struct AblationVariant {
  std::string label;
  Algorithm algorithm = Algorithm::Maml;
  int w = 0;  // interval used by skip variants
};

// Ablation rows: MAML, +Q0 single step, +Q0 shared over steps, +Q,
// +P, and +Q+P^w for w = 1..4.
std::vector<AblationVariant> ablation_variants(int base_w);

struct AblationRow {
  AblationVariant variant;
  std::string metric;  // "mse" or "accuracy"
  double mean = 0.0;
  double ci95 = 0.0;
  std::vector<double> seed_means;  // one per completed seed
  std::string status = "ok";       // otherwise the numerical abort message
};

// Trains and evaluates every row with seeds config.seed + s for
// s < config.ablation_seeds.  A row whose training aborts numerically is
// kept with NaN statistics and the abort in `status`.
std::vector<AblationRow> ablation_suite(const TrainConfig& base, int threads = 1,
                                        const std::function<void(const std::string&)>& progress = {});

std::string ablation_csv(const std::vector<AblationRow>& rows);

// Evaluates a trained checkpoint with its config's evaluation settings and
// returns the per-task metric values.
std::vector<double> evaluate_metric(const Checkpoint& checkpoint, int threads);

}  // namespace pamela
