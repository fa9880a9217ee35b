#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autodiff/tensor.hpp"
#include "common/rng.hpp"
#include "models/param_set.hpp"

namespace pamela {

enum class LossKind { Mse, CrossEntropy };

// Inputs [B, D].  Regression targets live in `y` ([B, 1]); classification
// labels in `labels`.
struct Dataset {
  ad::Tensor x;
  ad::Tensor y;
  std::vector<int> labels;

  std::size_t size() const { return x.defined() ? x.dim(0) : 0; }
};

struct Task {
  Dataset train;
  Dataset val;
};

// ---- sine regression -------------------------------------------------------

inline constexpr double kSineAmplitudeMin = 0.1;
inline constexpr double kSineAmplitudeMax = 5.0;
inline constexpr double kSineFrequencyMin = 0.8;
inline constexpr double kSineFrequencyMax = 1.2;
inline constexpr double kSinePhaseMin = 0.0;
inline constexpr double kSinePhaseMax = 3.14159265358979323846;
inline constexpr double kSineXMin = -5.0;
inline constexpr double kSineXMax = 5.0;
inline constexpr std::size_t kSineValPoints = 10;

struct SineParams {
  double amplitude = 1.0;
  double frequency = 1.0;
  double phase = 0.0;

  double operator()(double x) const;
};

struct SineTask {
  SineParams params;
  std::vector<double> train_x, train_y;
  std::vector<double> val_x, val_y;

  Task as_task() const;
};

// K training points followed by 10 validation points, x ~ U[-5, 5].
SineTask sample_sine_task(Rng& rng, std::size_t k);

struct CurveSamples {
  std::vector<double> x, y;
};

// `count` equally spaced points on [-5, 5], both endpoints included.
CurveSamples eval_grid(const SineParams& params, std::size_t count);

Json to_json(const SineTask& task);
SineTask sine_task_from_json(const Json& j);

// ---- synthetic classification ------------------------------------------------

inline constexpr std::size_t kQueryPerClass = 15;

struct ClassificationEpisode {
  std::size_t ways = 0;
  std::size_t shots = 0;
  std::size_t dim = 0;
  std::vector<std::vector<double>> prototypes;  // ways x dim
  std::vector<double> support_x;                // (ways*shots) x dim, row-major
  std::vector<int> support_labels;
  std::vector<double> query_x;                  // (ways*15) x dim
  std::vector<int> query_labels;

  Task as_task() const;
};

// Prototypes ~ U[-1, 1]^d; samples = prototype + N(0, sigma^2 I).
ClassificationEpisode sample_classification_episode(Rng& rng, std::size_t ways, std::size_t shots, std::size_t dim,
                                                    double sigma);

Json to_json(const ClassificationEpisode& episode);

}  // namespace pamela
