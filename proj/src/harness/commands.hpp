#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "harness/config.hpp"

namespace pamela {

// Artifact-writing entry points behind the CLI.  Each writes its outputs and
// a manifest.json into `out_dir`.

struct CommandOptions {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;   // overrides config.seed
  std::optional<std::string> resume;   // checkpoint path (train)
  std::optional<std::string> checkpoint;  // trained checkpoint (eval, analyze)
  int threads = 1;
  int analyze_tasks = 100;
  std::size_t gradcheck_coordinates = 0;
  std::string config_path;  // recorded in the manifest
};

struct CommandResult {
  Json summary;  // printed by the CLI
  std::vector<std::string> artifacts;  // file names relative to out_dir
};

CommandResult run_train(const TrainConfig& config, const CommandOptions& options);
CommandResult run_eval(const TrainConfig& config, const CommandOptions& options);
CommandResult run_gradcheck(const TrainConfig& config, const CommandOptions& options);
CommandResult run_ablate(const TrainConfig& config, const CommandOptions& options);
CommandResult run_analyze(const TrainConfig& config, const CommandOptions& options);

inline constexpr double kGradcheckTolerance = 1e-5;

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

// Removes the wall_ms column from run-log CSV text.
std::string strip_wall_clock(const std::string& csv);

// Reads a manifest, re-runs its command into `out_dir`, and reports whether
// every artifact hash matches.
struct ReplayResult {
  bool identical = true;
  std::vector<std::string> mismatched;
};
ReplayResult replay_manifest(const std::string& manifest_path, const std::string& out_dir, int threads = 1);

}  // namespace pamela
