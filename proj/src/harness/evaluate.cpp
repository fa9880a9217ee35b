#include "harness/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "common/parallel.hpp"
#include "harness/train.hpp"
#include "metalearn/inner_loop.hpp"
#include "metalearn/meta_step.hpp"

namespace pamela {

std::pair<double, double> mean_ci95(std::span<const double> values) {
  if (values.empty()) throw ValueError("mean_ci95: no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  if (values.size() < 2) return {mean, 0.0};
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, 1.96 * std::sqrt(sq / (n - 1.0)) / std::sqrt(n)};
}

double grid_mse(const SineParams& params, const std::function<std::vector<double>(const std::vector<double>&)>& predict,
                std::size_t grid) {
  const CurveSamples curve = eval_grid(params, grid);
  const std::vector<double> pred = predict(curve.x);
  if (pred.size() != curve.x.size()) throw ShapeError("grid_mse: prediction count does not match the grid");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += (pred[i] - curve.y[i]) * (pred[i] - curve.y[i]);
  return total / static_cast<double>(pred.size());
}

RegressionEval evaluate_regression(const Checkpoint& checkpoint, std::size_t k, int num_tasks, int grid,
                                   std::uint64_t seed, int threads) {
  if (checkpoint.config.task.type != TaskType::Sine) throw ValueError("evaluate_regression: checkpoint is not a sine model");
  if (k < 1) throw ValueError("evaluate_regression: K must be >= 1");
  if (num_tasks < 1) throw ValueError("evaluate_regression: num_tasks must be >= 1");
  if (grid < 2) throw ValueError("evaluate_regression: grid must be >= 2");
  const MlpSpec spec = checkpoint.config.model_spec();

  RegressionEval out;
  out.k = k;
  out.num_tasks = num_tasks;
  out.per_task.assign(static_cast<std::size_t>(num_tasks), 0.0);
  parallel_for(out.per_task.size(), threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {kStreamEval, t}));
    const SineTask task = sample_sine_task(rng, k);
    AdaptOptions options;
    const AdaptResult r = adapt(spec, checkpoint.theta, checkpoint.phi, task.as_task().train, checkpoint.phi.steps, options);
    out.per_task[t] = grid_mse(
        task.params,
        [&](const std::vector<double>& xs) {
          const ad::Tensor y = forward(spec, r.theta_n, ad::Tensor({xs.size(), 1}, xs));
          return std::vector<double>(y.values().begin(), y.values().end());
        },
        static_cast<std::size_t>(grid));
  });
  std::tie(out.mean_mse, out.ci95) = mean_ci95(out.per_task);
  return out;
}

ClassificationEval evaluate_classification(const Checkpoint& checkpoint, int num_episodes, std::uint64_t seed,
                                           int threads) {
  const TaskConfig& tc = checkpoint.config.task;
  if (tc.type != TaskType::Synthetic) throw ValueError("evaluate_classification: checkpoint is not a classification model");
  if (num_episodes < 1) throw ValueError("evaluate_classification: num_episodes must be >= 1");
  const MlpSpec spec = checkpoint.config.model_spec();

  ClassificationEval out;
  out.num_episodes = num_episodes;
  out.per_episode.assign(static_cast<std::size_t>(num_episodes), 0.0);
  parallel_for(out.per_episode.size(), threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {kStreamEval, t}));
    const Task task = sample_classification_episode(rng, tc.ways, tc.shots, tc.dim, tc.sigma).as_task();
    AdaptOptions options;
    options.loss = LossKind::CrossEntropy;
    const AdaptResult r = adapt(spec, checkpoint.theta, checkpoint.phi, task.train, checkpoint.phi.steps, options);
    const ad::Tensor logits = forward(spec, r.theta_n, task.val.x);
    const std::size_t classes = logits.dim(1);
    const auto v = logits.values();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.dim(0); ++i) {
      const auto row = v.subspan(i * classes, classes);
      const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      if (best == task.val.labels[i]) ++correct;
    }
    out.per_episode[t] = static_cast<double>(correct) / static_cast<double>(logits.dim(0));
  });
  std::tie(out.mean_accuracy, out.ci95) = mean_ci95(out.per_episode);
  return out;
}

Json to_json(const RegressionEval& e) {
  Json j;
  j["k"] = e.k;
  j["mean_mse"] = e.mean_mse;
  j["ci95"] = e.ci95;
  j["num_tasks"] = e.num_tasks;
  return j;
}

Json to_json(const ClassificationEval& e) {
  Json j;
  j["mean_accuracy"] = e.mean_accuracy;
  j["ci95"] = e.ci95;
  j["num_episodes"] = e.num_episodes;
  return j;
}

// ---- gradient check ---------------------------------------------------------

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), kGradcheckFloor});
  return std::fabs(analytic - numeric) / scale;
}

namespace {

double plain_meta_loss(const MlpSpec& spec, const ParamSet& theta, const MetaParams& phi, std::span<const Task> tasks,
                       LossKind kind) {
  double total = 0.0;
  for (const auto& task : tasks) {
    AdaptOptions options;
    options.loss = kind;
    const AdaptResult r = adapt(spec, theta, phi, task.train, phi.steps, options);
    total += task_loss(spec, r.theta_n, task.val, kind).item();
  }
  return total;
}

ParamSet with_value(const ParamSet& set, std::size_t tensor, std::size_t index, double value) {
  std::vector<ad::Tensor> ts = set.tensors();
  std::vector<double> v(ts[tensor].values().begin(), ts[tensor].values().end());
  v[index] = value;
  ts[tensor] = ad::Tensor(ts[tensor].shape(), std::move(v));
  return set.with_tensors(std::move(ts));
}

}  // namespace

GradcheckReport gradcheck(const TrainConfig& config, const GradcheckOptions& options) {
  config.validate();
  if (!(options.step > 0.0)) throw ValueError("gradcheck: step must be > 0");
  const MlpSpec spec = config.model_spec();
  Rng rng(derive_seed(config.seed, {kStreamGradcheck}));

  const ParamSet theta = init_params(spec, derive_seed(config.seed, {kStreamInit}));
  MetaParams phi = build_meta_params(spec, config.n_inner, config.w, config.algorithm, config.inner_lr_init,
                                     config.q_granularity);
  for (auto& q : phi.q)
    q = q.transform([&](const ParamSet::Entry& e) {
      std::vector<double> v(e.tensor.values().begin(), e.tensor.values().end());
      for (auto& x : v) x *= rng.uniform(0.5, 1.5);
      return ad::Tensor(e.tensor.shape(), std::move(v));
    });
  for (auto& [j, p] : phi.p)
    p = p.transform([&](const ParamSet::Entry& e) { return ad::Tensor(e.tensor.shape(), {rng.uniform(-0.3, 0.3)}); });

  std::vector<Task> tasks;
  for (int k = 0; k < config.meta_batch; ++k) {
    Rng task_rng(derive_seed(config.seed, {kStreamGradcheck, static_cast<std::uint64_t>(k) + 1}));
    tasks.push_back(sample_task(config.task, task_rng));
  }

  MetaGradientOptions mg;
  mg.loss = config.loss_kind();
  mg.style = MetaGradientStyle::SecondOrder;
  mg.threads = options.threads;
  const MetaGradient g = compute_meta_gradient(spec, theta, phi, tasks, mg);

  // Coordinate list: (0 = theta / 1 = phi, tensor, index).
  struct Coord {
    int group;
    std::size_t tensor, index;
  };
  const ParamSet phi_flat = phi.trainable();
  std::vector<Coord> coords;
  for (std::size_t t = 0; t < theta.size(); ++t)
    for (std::size_t i = 0; i < theta.tensor(t).numel(); ++i) coords.push_back({0, t, i});
  for (std::size_t t = 0; t < phi_flat.size(); ++t)
    for (std::size_t i = 0; i < phi_flat.tensor(t).numel(); ++i) coords.push_back({1, t, i});
  if (options.max_coordinates > 0 && coords.size() > options.max_coordinates) {
    for (std::size_t i = 0; i < options.max_coordinates; ++i)
      std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
    coords.resize(options.max_coordinates);
  }

  std::vector<double> numeric(coords.size());
  const LossKind kind = config.loss_kind();
  parallel_for(coords.size(), options.threads, [&](std::size_t c) {
    const Coord& co = coords[c];
    const double h = options.step;
    auto eval_at = [&](double delta) {
      if (co.group == 0) {
        const double x = theta.tensor(co.tensor).values()[co.index];
        return plain_meta_loss(spec, with_value(theta, co.tensor, co.index, x + delta), phi, tasks, kind);
      }
      const double x = phi_flat.tensor(co.tensor).values()[co.index];
      return plain_meta_loss(spec, theta, phi.with_trainable(with_value(phi_flat, co.tensor, co.index, x + delta)),
                             tasks, kind);
    };
    numeric[c] = (eval_at(h) - eval_at(-h)) / (2.0 * h);
  });

  GradcheckReport report;
  report.coordinates = coords.size();
  for (std::size_t c = 0; c < coords.size(); ++c) {
    const Coord& co = coords[c];
    const ParamSet& grads = co.group == 0 ? g.theta_grad : g.phi_grad;
    const double a = grads.tensor(co.tensor).values()[co.index];
    const double err = relative_error(a, numeric[c]);
    if (c == 0 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_coordinate = grads[co.tensor].name + "[" + std::to_string(co.index) + "]";
      report.worst_analytic = a;
      report.worst_numeric = numeric[c];
    }
  }
  return report;
}

Json to_json(const GradcheckReport& r) {
  Json j;
  j["max_rel_error"] = r.max_rel_error;
  j["worst_coordinate"] = r.worst_coordinate;
  j["worst_analytic"] = r.worst_analytic;
  j["worst_numeric"] = r.worst_numeric;
  j["coordinates"] = r.coordinates;
  return j;
}

// ---- ablation ---------------------------------------------------------------

std::vector<AblationVariant> ablation_variants(int base_w) {
  std::vector<AblationVariant> rows = {
      {"MAML", Algorithm::Maml, base_w},
      {"MAML+Q0 (single step)", Algorithm::MetaSgd, base_w},
      {"MAML+Q0 (multiple steps)", Algorithm::MamlQSharedMulti, base_w},
      {"MAML+Q", Algorithm::MamlQ, base_w},
      {"MAML+P", Algorithm::MamlP, base_w},
  };
  for (int w = 1; w <= 4; ++w) rows.push_back({"MAML+Q+P^" + std::to_string(w), Algorithm::Pamela, w});
  return rows;
}

std::vector<double> evaluate_metric(const Checkpoint& checkpoint, int threads) {
  const TrainConfig& c = checkpoint.config;
  if (c.task.type == TaskType::Sine)
    return evaluate_regression(checkpoint, c.task.k, c.eval_tasks, c.eval_grid, c.eval_seed, threads).per_task;
  return evaluate_classification(checkpoint, c.eval_tasks, c.eval_seed, threads).per_episode;
}

std::vector<AblationRow> ablation_suite(const TrainConfig& base, int threads,
                                        const std::function<void(const std::string&)>& progress) {
  base.validate();
  std::vector<AblationRow> rows;
  for (const auto& variant : ablation_variants(base.w)) {
    AblationRow row;
    row.variant = variant;
    row.metric = base.task.type == TaskType::Sine ? "mse" : "accuracy";
    std::vector<double> pooled;
    for (int s = 0; s < base.ablation_seeds; ++s) {
      TrainConfig config = base;
      config.algorithm = variant.algorithm;
      config.w = variant.w;
      config.seed = base.seed + static_cast<std::uint64_t>(s);
      config.histograms = false;
      if (progress) progress(variant.label + " seed " + std::to_string(config.seed));
      TrainOptions options;
      options.threads = threads;
      try {
        const TrainResult trained = train(config, options);
        const std::vector<double> values = evaluate_metric(trained.checkpoint, threads);
        row.seed_means.push_back(mean_ci95(values).first);
        pooled.insert(pooled.end(), values.begin(), values.end());
      } catch (const NumericalError& e) {
        row.status = "seed " + std::to_string(config.seed) + " diverged: " + e.what();
        break;
      }
    }
    if (row.status == "ok") {
      std::tie(row.mean, row.ci95) = mean_ci95(pooled);
    } else {
      row.mean = row.ci95 = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  auto num = [](double v) { return std::isfinite(v) ? Json(v).dump() : std::string("nan"); };
  out << "variant,algorithm,w,metric,mean,ci95,seeds,status\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), '"', '\'');
    out << '"' << r.variant.label << "\"," << to_string(r.variant.algorithm) << ',' << r.variant.w << ',' << r.metric
        << ',' << num(r.mean) << ',' << num(r.ci95) << ',' << r.seed_means.size() << ",\"" << status << "\"\n";
  }
  return out.str();
}

}  // namespace pamela
