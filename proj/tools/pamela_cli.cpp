// pamela command-line front end.  Talks to the library only through the C API.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "pamela/pamela.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitCheckFailed = 3;

int exit_code(pml_status status) {
  if (status == PML_OK) return kExitOk;
  if (status == PML_ERR_NUMERICAL) return kExitNumerical;
  return kExitInvalid;
}

int report(pml_status status) {
  const std::string field = pml_last_error_field();
  std::fprintf(stderr, "error (%s): %s\n", pml_status_name(status), pml_last_error());
  if (!field.empty()) std::fprintf(stderr, "offending field: %s\n", field.c_str());
  return exit_code(status);
}

struct Args {
  std::string config;
  std::string out = ".";
  std::string resume;
  std::string checkpoint;
  std::string manifest;
  long long seed = 0;
  int threads = 1;
  int tasks = 100;
  std::size_t coordinates = 0;
};

int run_command(const std::string& command, const Args& args, bool has_seed) {
  pml_config* config = nullptr;
  pml_status status = pml_config_load(args.config.c_str(), &config);
  if (status != PML_OK) return report(status);

  pml_run_options options;
  pml_run_options_init(&options);
  options.out_dir = args.out.c_str();
  options.config_path = args.config.c_str();
  options.threads = args.threads;
  options.analyze_tasks = args.tasks;
  options.gradcheck_coordinates = args.coordinates;
  if (!args.resume.empty()) options.resume_path = args.resume.c_str();
  if (!args.checkpoint.empty()) options.checkpoint_path = args.checkpoint.c_str();
  if (has_seed) {
    options.has_seed = 1;
    options.seed = static_cast<std::uint64_t>(args.seed);
  }

  char* summary = nullptr;
  status = pml_run(command.c_str(), config, &options, &summary);
  pml_config_free(config);
  if (status != PML_OK) return report(status);
  std::printf("%s\n", summary);
  const bool check_failed = command == "gradcheck" && std::string(summary).find("\"passed\": false") != std::string::npos;
  pml_string_free(summary);
  return check_failed ? kExitCheckFailed : kExitOk;
}

int run_replay(const Args& args) {
  int identical = 0;
  char* text = nullptr;
  const pml_status status = pml_replay(args.manifest.c_str(), args.out.c_str(), args.threads, &identical, &text);
  if (status != PML_OK) return report(status);
  std::printf("%s\n", text);
  pml_string_free(text);
  return identical ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pamela: path-aware meta-learning lab"};
  app.require_subcommand(1);
  Args args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", args.out, "Output directory (PAMELA_OUT overrides)");
    sub->add_option("--threads", args.threads, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "Config JSON")->required();
    sub->add_option("--seed", args.seed, "Seed override")->check(CLI::NonNegativeNumber);
    add_common(sub);
  };

  auto* train = app.add_subcommand("train", "Meta-train and write checkpoint.json, runlog.csv");
  add_config(train);
  train->add_option("--resume", args.resume, "Continue from this checkpoint");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and write eval.json");
  add_config(eval);
  eval->add_option("--checkpoint", args.checkpoint, "Checkpoint (default <out>/checkpoint.json)");

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare the meta-gradient with finite differences");
  add_config(gradcheck);
  gradcheck->add_option("--coordinates", args.coordinates, "Check a seeded subset of this many coordinates");

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate every ablation row; write ablation.csv");
  add_config(ablate);

  auto* analyze = app.add_subcommand("analyze", "Per-step loss statistics and gradient histograms");
  add_config(analyze);
  analyze->add_option("--checkpoint", args.checkpoint, "Checkpoint (default <out>/checkpoint.json)");
  analyze->add_option("--tasks", args.tasks, "Tasks for loss statistics")->check(CLI::PositiveNumber);

  auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare artifact hashes");
  replay->add_option("--manifest", args.manifest, "manifest.json of an earlier run")->required();
  add_common(replay);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (const char* env = std::getenv("PAMELA_OUT"); env && *env) args.out = env;

  if (replay->parsed()) return run_replay(args);
  for (auto* sub : {train, eval, gradcheck, ablate, analyze}) {
    if (sub->parsed()) return run_command(sub->get_name(), args, sub->count("--seed") > 0);
  }
  return kExitInvalid;
}
