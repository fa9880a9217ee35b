#include "tasks/tasks.hpp"

#include <cmath>

#include "common/error.hpp"

namespace pamela {
namespace {

Dataset regression_set(const std::vector<double>& xs, const std::vector<double>& ys) {
  Dataset d;
  d.x = ad::Tensor({xs.size(), 1}, xs);
  d.y = ad::Tensor({ys.size(), 1}, ys);
  return d;
}

Dataset classification_set(const std::vector<double>& xs, const std::vector<int>& labels, std::size_t dim) {
  Dataset d;
  d.x = ad::Tensor({labels.size(), dim}, xs);
  d.labels = labels;
  return d;
}

}  // namespace

double SineParams::operator()(double x) const { return amplitude * std::sin(frequency * x + phase); }

Task SineTask::as_task() const { return Task{regression_set(train_x, train_y), regression_set(val_x, val_y)}; }

SineTask sample_sine_task(Rng& rng, std::size_t k) {
  if (k == 0) throw ValueError("sample_sine_task: K must be >= 1");
  SineTask task;
  task.params.amplitude = rng.uniform(kSineAmplitudeMin, kSineAmplitudeMax);
  task.params.frequency = rng.uniform(kSineFrequencyMin, kSineFrequencyMax);
  task.params.phase = rng.uniform(kSinePhaseMin, kSinePhaseMax);
  for (std::size_t i = 0; i < k + kSineValPoints; ++i) {
    const double x = rng.uniform(kSineXMin, kSineXMax);
    auto& xs = i < k ? task.train_x : task.val_x;
    auto& ys = i < k ? task.train_y : task.val_y;
    xs.push_back(x);
    ys.push_back(task.params(x));
  }
  return task;
}

CurveSamples eval_grid(const SineParams& params, std::size_t count) {
  if (count < 2) throw ValueError("eval_grid: count must be >= 2");
  CurveSamples out;
  out.x.resize(count);
  out.y.resize(count);
  const double span = kSineXMax - kSineXMin;
  for (std::size_t i = 0; i < count; ++i) {
    out.x[i] = i + 1 == count ? kSineXMax : kSineXMin + span * static_cast<double>(i) / static_cast<double>(count - 1);
    out.y[i] = params(out.x[i]);
  }
  return out;
}

Json to_json(const SineTask& task) {
  Json j;
  j["amplitude"] = task.params.amplitude;
  j["frequency"] = task.params.frequency;
  j["phase"] = task.params.phase;
  j["train_x"] = task.train_x;
  j["train_y"] = task.train_y;
  j["val_x"] = task.val_x;
  j["val_y"] = task.val_y;
  return j;
}

SineTask sine_task_from_json(const Json& j) {
  SineTask t;
  t.params.amplitude = j.at("amplitude").get<double>();
  t.params.frequency = j.at("frequency").get<double>();
  t.params.phase = j.at("phase").get<double>();
  t.train_x = j.at("train_x").get<std::vector<double>>();
  t.train_y = j.at("train_y").get<std::vector<double>>();
  t.val_x = j.at("val_x").get<std::vector<double>>();
  t.val_y = j.at("val_y").get<std::vector<double>>();
  if (t.train_x.size() != t.train_y.size() || t.val_x.size() != t.val_y.size())
    throw ValueError("sine task fixture: x/y length mismatch");
  return t;
}

Task ClassificationEpisode::as_task() const {
  return Task{classification_set(support_x, support_labels, dim), classification_set(query_x, query_labels, dim)};
}

ClassificationEpisode sample_classification_episode(Rng& rng, std::size_t ways, std::size_t shots, std::size_t dim,
                                                    double sigma) {
  if (ways < 2) throw ValueError("sample_classification_episode: M must be >= 2");
  if (shots < 1) throw ValueError("sample_classification_episode: N must be >= 1");
  if (dim < 1) throw ValueError("sample_classification_episode: d must be >= 1");
  if (!(sigma > 0.0)) throw ValueError("sample_classification_episode: sigma must be > 0");

  ClassificationEpisode ep;
  ep.ways = ways;
  ep.shots = shots;
  ep.dim = dim;
  ep.prototypes.assign(ways, std::vector<double>(dim));
  for (auto& p : ep.prototypes)
    for (auto& v : p) v = rng.uniform(-1.0, 1.0);

  auto draw = [&](std::size_t per_class, std::vector<double>& xs, std::vector<int>& labels) {
    for (std::size_t c = 0; c < ways; ++c)
      for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t d = 0; d < dim; ++d) xs.push_back(ep.prototypes[c][d] + sigma * rng.normal());
        labels.push_back(static_cast<int>(c));
      }
  };
  draw(shots, ep.support_x, ep.support_labels);
  draw(kQueryPerClass, ep.query_x, ep.query_labels);
  return ep;
}

Json to_json(const ClassificationEpisode& episode) {
  Json j;
  j["ways"] = episode.ways;
  j["shots"] = episode.shots;
  j["dim"] = episode.dim;
  j["prototypes"] = episode.prototypes;
  j["support_x"] = episode.support_x;
  j["support_labels"] = episode.support_labels;
  j["query_x"] = episode.query_x;
  j["query_labels"] = episode.query_labels;
  return j;
}

}  // namespace pamela
