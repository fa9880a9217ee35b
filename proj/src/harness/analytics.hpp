#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "harness/checkpoint.hpp"

namespace pamela {

inline constexpr std::size_t kHistogramBins = 512;

// Equal-width bins over [min, max] of the recorded values.  A constant input
// gets a unit-wide range centred on the value.
struct Histogram {
  std::int64_t epoch = 0;
  std::string phase;  // "inner_1".."inner_n" or "meta"
  std::string layer;  // parameter tensor name
  std::vector<double> edges;          // bins + 1, non-decreasing
  std::vector<std::int64_t> counts;   // bins
  double mean_abs = 0.0;
};

Histogram make_histogram(std::span<const double> values, std::size_t bins = kHistogramBins);

Json to_json(const Histogram& h);
Histogram histogram_from_json(const Json& j);

// Inner-step gradients (phases inner_1..inner_n) and the theta meta-gradient
// (phase meta), one histogram per parameter tensor.
std::vector<Histogram> gradient_histograms(std::int64_t epoch, const std::vector<ParamSet>& inner_gradients,
                                           const ParamSet& meta_gradient);

struct StepStats {
  double mean = 0.0;
  double std = 0.0;
};

// Training-set loss after j = 0..n inner steps, over `num_tasks` fresh tasks.
std::vector<StepStats> inner_loss_trajectory(const Checkpoint& checkpoint, int num_tasks, std::uint64_t seed,
                                             int threads = 1);

// Mean |g| over all parameters, per inner step, for the last epoch recorded
// in `histograms` (phases inner_1..inner_n in order).
std::vector<double> final_epoch_inner_gradient_magnitude(const std::vector<Histogram>& histograms);

}  // namespace pamela
