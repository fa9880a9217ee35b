#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "harness/analytics.hpp"
#include "harness/checkpoint.hpp"
#include "metalearn/meta_step.hpp"

namespace pamela {

struct RunLogRow {
  std::int64_t iteration = 0;  // 1-based meta-iteration
  double meta_loss = 0.0;
  std::vector<double> inner_losses;  // mean over the meta-batch, steps 0..n
  double wall_ms = 0.0;              // since the start of this train call
};

struct RunLog {
  int steps = 0;
  std::vector<RunLogRow> rows;

  // Header: iteration,meta_loss,inner_loss_0..inner_loss_n[,wall_ms]
  std::string to_csv(bool include_wall_ms = true) const;
};

struct TrainOptions {
  int threads = 1;
  // Receives the checkpoint every `checkpoint_every` iterations, at the end,
  // and (with the last good state) before a numerical abort propagates.
  std::function<void(const Checkpoint&)> checkpoint_sink;
  std::function<void(const RunLogRow&)> on_log;
};

struct TrainResult {
  Checkpoint checkpoint;
  RunLog log;
  std::vector<Histogram> histograms;
};

// Meta-training.  Iteration i draws its tasks from derive_seed(seed, {train,
// i, k}), so a resumed run continues bit-identically.  `resume` must come
// from the same configuration (only iterations and logging cadence may
// differ).
TrainResult train(const TrainConfig& config, const TrainOptions& options = {},
                  const std::optional<Checkpoint>& resume = std::nullopt);

// Draws the meta-batch of iteration `iteration` (0-based).
std::vector<Task> training_batch(const TrainConfig& config, std::int64_t iteration);

MetaGradientOptions meta_gradient_options(const TrainConfig& config, int threads, bool probe = false);

}  // namespace pamela
