#include "harness/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "metalearn/inner_loop.hpp"

namespace pamela {

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw ValueError("make_histogram: need at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  if (values.empty()) {
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(i) / static_cast<double>(bins);
    return h;
  }
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = hi - lo;
  for (std::size_t i = 0; i < bins; ++i) h.edges[i] = lo + width * static_cast<double>(i) / static_cast<double>(bins);
  h.edges[bins] = hi;
  double abs_total = 0.0;
  for (double v : values) {
    auto idx = static_cast<std::size_t>((v - lo) / width * static_cast<double>(bins));
    idx = std::min(idx, bins - 1);
    // Rounding can put a value just below its computed bin's left edge.
    while (idx > 0 && v < h.edges[idx]) --idx;
    while (idx + 1 < bins && v >= h.edges[idx + 1]) ++idx;
    ++h.counts[idx];
    abs_total += std::fabs(v);
  }
  h.mean_abs = abs_total / static_cast<double>(values.size());
  return h;
}

Json to_json(const Histogram& h) {
  Json j;
  j["epoch"] = h.epoch;
  j["phase"] = h.phase;
  j["layer"] = h.layer;
  j["mean_abs"] = h.mean_abs;
  j["edges"] = h.edges;
  j["counts"] = h.counts;
  return j;
}

Histogram histogram_from_json(const Json& j) {
  Histogram h;
  h.epoch = j.at("epoch").get<std::int64_t>();
  h.phase = j.at("phase").get<std::string>();
  h.layer = j.at("layer").get<std::string>();
  h.mean_abs = j.at("mean_abs").get<double>();
  h.edges = j.at("edges").get<std::vector<double>>();
  h.counts = j.at("counts").get<std::vector<std::int64_t>>();
  return h;
}

std::vector<Histogram> gradient_histograms(std::int64_t epoch, const std::vector<ParamSet>& inner_gradients,
                                           const ParamSet& meta_gradient) {
  std::vector<Histogram> out;
  auto emit = [&](const ParamSet& grads, const std::string& phase) {
    for (const auto& e : grads) {
      Histogram h = make_histogram(e.tensor.values());
      h.epoch = epoch;
      h.phase = phase;
      h.layer = e.name;
      out.push_back(std::move(h));
    }
  };
  for (std::size_t j = 0; j < inner_gradients.size(); ++j) emit(inner_gradients[j], "inner_" + std::to_string(j + 1));
  emit(meta_gradient, "meta");
  return out;
}

std::vector<StepStats> inner_loss_trajectory(const Checkpoint& checkpoint, int num_tasks, std::uint64_t seed,
                                             int threads) {
  if (num_tasks < 1) throw ValueError("inner_loss_trajectory: num_tasks must be >= 1");
  const MlpSpec spec = checkpoint.config.model_spec();
  const int n = checkpoint.phi.steps;
  std::vector<std::vector<double>> losses(static_cast<std::size_t>(num_tasks));
  parallel_for(losses.size(), threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {kStreamAnalyze, t}));
    const Task task = sample_task(checkpoint.config.task, rng);
    AdaptOptions options;
    options.loss = checkpoint.config.loss_kind();
    losses[t] = adapt(spec, checkpoint.theta, checkpoint.phi, task.train, n, options).inner_losses;
  });

  std::vector<StepStats> stats(static_cast<std::size_t>(n) + 1);
  for (std::size_t j = 0; j < stats.size(); ++j) {
    double sum = 0.0;
    for (const auto& l : losses) sum += l[j];
    const double mean = sum / static_cast<double>(num_tasks);
    double sq = 0.0;
    for (const auto& l : losses) sq += (l[j] - mean) * (l[j] - mean);
    stats[j].mean = mean;
    stats[j].std = num_tasks > 1 ? std::sqrt(sq / static_cast<double>(num_tasks - 1)) : 0.0;
  }
  return stats;
}

std::vector<double> final_epoch_inner_gradient_magnitude(const std::vector<Histogram>& histograms) {
  if (histograms.empty()) return {};
  std::int64_t last = histograms.front().epoch;
  for (const auto& h : histograms) last = std::max(last, h.epoch);
  std::map<int, std::pair<double, double>> per_step;  // step -> (sum |g|, count)
  for (const auto& h : histograms) {
    if (h.epoch != last || h.phase.rfind("inner_", 0) != 0) continue;
    const int step = std::stoi(h.phase.substr(6));
    double count = 0.0;
    for (auto c : h.counts) count += static_cast<double>(c);
    per_step[step].first += h.mean_abs * count;
    per_step[step].second += count;
  }
  std::vector<double> out;
  for (const auto& [step, acc] : per_step) out.push_back(acc.second > 0 ? acc.first / acc.second : 0.0);
  return out;
}

}  // namespace pamela
