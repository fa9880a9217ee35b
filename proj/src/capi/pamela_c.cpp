#include "pamela/pamela.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>

#include "common/error.hpp"
#include "harness/checkpoint.hpp"
#include "harness/commands.hpp"
#include "harness/evaluate.hpp"
#include "harness/train.hpp"

struct pml_config {
  pamela::TrainConfig value;
};

struct pml_checkpoint {
  pamela::Checkpoint value;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_field;

pml_status fail(pml_status status, const std::string& message, const std::string& field = {}) {
  last_error = message;
  last_field = field;
  return status;
}

template <typename Fn>
pml_status guarded(Fn&& fn) {
  last_error.clear();
  last_field.clear();
  try {
    fn();
    return PML_OK;
  } catch (const pamela::ConfigError& e) {
    return fail(PML_ERR_CONFIG, e.what(), e.field());
  } catch (const pamela::IoError& e) {
    return fail(PML_ERR_IO, e.what());
  } catch (const pamela::NumericalError& e) {
    return fail(PML_ERR_NUMERICAL, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(PML_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(PML_ERR_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(PML_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(PML_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PML_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw pamela::ValueError(std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* pml_version(void) { return "1.0.0"; }
const char* pml_last_error(void) { return last_error.c_str(); }
const char* pml_last_error_field(void) { return last_field.c_str(); }

const char* pml_status_name(pml_status status) {
  switch (status) {
    case PML_OK: return "ok";
    case PML_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PML_ERR_CONFIG: return "config error";
    case PML_ERR_IO: return "io error";
    case PML_ERR_NUMERICAL: return "numerical error";
    case PML_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void pml_string_free(char* s) { std::free(s); }

pml_status pml_config_load(const char* path, pml_config** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = new pml_config{pamela::load_config(path)};
  });
}

pml_status pml_config_parse(const char* json, pml_config** out) {
  return guarded([&] {
    require(json && out, "json and out");
    pamela::Json j;
    try {
      j = pamela::Json::parse(json);
    } catch (const pamela::Json::parse_error& e) {
      throw pamela::ConfigError("<root>", std::string("not valid JSON: ") + e.what());
    }
    *out = new pml_config{pamela::config_from_json(j)};
  });
}

void pml_config_free(pml_config* config) { delete config; }

pml_status pml_config_set_seed(pml_config* config, uint64_t seed) {
  return guarded([&] {
    require(config, "config");
    config->value.seed = seed;
  });
}

pml_status pml_config_set_iterations(pml_config* config, int64_t iterations) {
  return guarded([&] {
    require(config, "config");
    if (iterations < 1) throw pamela::ConfigError("iterations", "must be >= 1");
    config->value.iterations = iterations;
  });
}

pml_status pml_config_to_json(const pml_config* config, char** out) {
  return guarded([&] {
    require(config && out, "config and out");
    *out = copy_string(pamela::to_json(config->value).dump(2));
  });
}

pml_status pml_checkpoint_load(const char* path, pml_checkpoint** out) {
  return guarded([&] {
    require(path && out, "path and out");
    *out = new pml_checkpoint{pamela::load_checkpoint(path)};
  });
}

pml_status pml_checkpoint_save(const pml_checkpoint* checkpoint, const char* path) {
  return guarded([&] {
    require(checkpoint && path, "checkpoint and path");
    pamela::save_checkpoint(checkpoint->value, path);
  });
}

void pml_checkpoint_free(pml_checkpoint* checkpoint) { delete checkpoint; }

pml_status pml_checkpoint_iteration(const pml_checkpoint* checkpoint, int64_t* out) {
  return guarded([&] {
    require(checkpoint && out, "checkpoint and out");
    *out = checkpoint->value.iteration;
  });
}

pml_status pml_checkpoint_parameter_count(const pml_checkpoint* checkpoint, size_t* out) {
  return guarded([&] {
    require(checkpoint && out, "checkpoint and out");
    *out = checkpoint->value.theta.total_count();
  });
}

pml_status pml_checkpoint_parameters(const pml_checkpoint* checkpoint, double* values, size_t capacity) {
  return guarded([&] {
    require(checkpoint && values, "checkpoint and values");
    const auto& theta = checkpoint->value.theta;
    if (capacity < theta.total_count())
      throw pamela::ValueError("capacity " + std::to_string(capacity) + " is below the parameter count " +
                               std::to_string(theta.total_count()));
    std::size_t at = 0;
    for (const auto& e : theta)
      for (double v : e.tensor.values()) values[at++] = v;
  });
}

pml_status pml_train(const pml_config* config, const pml_checkpoint* resume, int threads, pml_checkpoint** out) {
  return guarded([&] {
    require(config && out, "config and out");
    pamela::TrainOptions options;
    options.threads = threads;
    std::optional<pamela::Checkpoint> from;
    if (resume) from = resume->value;
    *out = new pml_checkpoint{pamela::train(config->value, options, from).checkpoint};
  });
}

pml_status pml_evaluate_regression(const pml_checkpoint* checkpoint, size_t k, int num_tasks, int grid, uint64_t seed,
                                   int threads, double* mean_mse, double* ci95) {
  return guarded([&] {
    require(checkpoint && mean_mse && ci95, "checkpoint, mean_mse and ci95");
    const auto r = pamela::evaluate_regression(checkpoint->value, k, num_tasks, grid, seed, threads);
    *mean_mse = r.mean_mse;
    *ci95 = r.ci95;
  });
}

pml_status pml_evaluate_classification(const pml_checkpoint* checkpoint, int num_episodes, uint64_t seed, int threads,
                                       double* mean_accuracy, double* ci95) {
  return guarded([&] {
    require(checkpoint && mean_accuracy && ci95, "checkpoint, mean_accuracy and ci95");
    const auto r = pamela::evaluate_classification(checkpoint->value, num_episodes, seed, threads);
    *mean_accuracy = r.mean_accuracy;
    *ci95 = r.ci95;
  });
}

pml_status pml_gradcheck(const pml_config* config, size_t max_coordinates, int threads, double* max_rel_error) {
  return guarded([&] {
    require(config && max_rel_error, "config and max_rel_error");
    pamela::GradcheckOptions options;
    options.max_coordinates = max_coordinates;
    options.threads = threads;
    *max_rel_error = pamela::gradcheck(config->value, options).max_rel_error;
  });
}

void pml_run_options_init(pml_run_options* options) {
  if (!options) return;
  *options = pml_run_options{};
  options->out_dir = ".";
  options->threads = 1;
  options->analyze_tasks = 100;
}

pml_status pml_run(const char* command, const pml_config* config, const pml_run_options* options, char** summary_json) {
  return guarded([&] {
    require(command && config && options, "command, config and options");
    pamela::CommandOptions o;
    o.out_dir = options->out_dir ? options->out_dir : ".";
    if (options->resume_path) o.resume = options->resume_path;
    if (options->checkpoint_path) o.checkpoint = options->checkpoint_path;
    if (options->config_path) o.config_path = options->config_path;
    if (options->has_seed) o.seed = options->seed;
    o.threads = options->threads;
    o.analyze_tasks = options->analyze_tasks;
    o.gradcheck_coordinates = options->gradcheck_coordinates;

    const std::string cmd = command;
    pamela::CommandResult r;
    if (cmd == "train") r = pamela::run_train(config->value, o);
    else if (cmd == "eval") r = pamela::run_eval(config->value, o);
    else if (cmd == "gradcheck") r = pamela::run_gradcheck(config->value, o);
    else if (cmd == "ablate") r = pamela::run_ablate(config->value, o);
    else if (cmd == "analyze") r = pamela::run_analyze(config->value, o);
    else throw pamela::ValueError("unknown command '" + cmd + "'");
    if (summary_json) *summary_json = copy_string(r.summary.dump(2));
  });
}

pml_status pml_replay(const char* manifest_path, const char* out_dir, int threads, int* identical, char** report_json) {
  return guarded([&] {
    require(manifest_path && out_dir && identical, "manifest_path, out_dir and identical");
    const auto r = pamela::replay_manifest(manifest_path, out_dir, threads);
    *identical = r.identical ? 1 : 0;
    if (report_json) *report_json = copy_string(pamela::Json{{"identical", r.identical}, {"mismatched", r.mismatched}}.dump(2));
  });
}

}  // extern "C"
