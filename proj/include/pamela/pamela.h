/* C interface to the pamela meta-learning library. */
#ifndef PAMELA_PAMELA_H
#define PAMELA_PAMELA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PML_API __declspec(dllexport)
#else
#define PML_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pml_status {
  PML_OK = 0,
  PML_ERR_INVALID_ARGUMENT = 1, /* bad argument, shape or precondition */
  PML_ERR_CONFIG = 2,           /* config failed schema validation */
  PML_ERR_IO = 3,               /* unreadable or unwritable file */
  PML_ERR_NUMERICAL = 4,        /* NaN/Inf during training or adaptation */
  PML_ERR_INTERNAL = 5
} pml_status;

typedef struct pml_config pml_config;
typedef struct pml_checkpoint pml_checkpoint;

PML_API const char* pml_version(void);

/* Message for the most recent failure on the calling thread ("" if none). */
PML_API const char* pml_last_error(void);
/* Offending field of the most recent PML_ERR_CONFIG ("" otherwise). */
PML_API const char* pml_last_error_field(void);
PML_API const char* pml_status_name(pml_status status);

/* Strings returned through char** are owned by the caller. */
PML_API void pml_string_free(char* s);

PML_API pml_status pml_config_load(const char* path, pml_config** out);
PML_API pml_status pml_config_parse(const char* json, pml_config** out);
PML_API void pml_config_free(pml_config* config);
PML_API pml_status pml_config_set_seed(pml_config* config, uint64_t seed);
PML_API pml_status pml_config_set_iterations(pml_config* config, int64_t iterations);
PML_API pml_status pml_config_to_json(const pml_config* config, char** out);

PML_API pml_status pml_checkpoint_load(const char* path, pml_checkpoint** out);
PML_API pml_status pml_checkpoint_save(const pml_checkpoint* checkpoint, const char* path);
PML_API void pml_checkpoint_free(pml_checkpoint* checkpoint);
PML_API pml_status pml_checkpoint_iteration(const pml_checkpoint* checkpoint, int64_t* out);
/* Total number of theta values. */
PML_API pml_status pml_checkpoint_parameter_count(const pml_checkpoint* checkpoint, size_t* out);
/* Copies theta values, tensor by tensor in order, into `values[capacity]`. */
PML_API pml_status pml_checkpoint_parameters(const pml_checkpoint* checkpoint, double* values, size_t capacity);

/* In-memory training; `resume` may be NULL. */
PML_API pml_status pml_train(const pml_config* config, const pml_checkpoint* resume, int threads,
                             pml_checkpoint** out);

PML_API pml_status pml_evaluate_regression(const pml_checkpoint* checkpoint, size_t k, int num_tasks, int grid,
                                           uint64_t seed, int threads, double* mean_mse, double* ci95);
PML_API pml_status pml_evaluate_classification(const pml_checkpoint* checkpoint, int num_episodes, uint64_t seed,
                                               int threads, double* mean_accuracy, double* ci95);

/* Max relative error between the autodiff meta-gradient and central finite
 * differences.  max_coordinates = 0 checks every coordinate. */
PML_API pml_status pml_gradcheck(const pml_config* config, size_t max_coordinates, int threads,
                                 double* max_rel_error);

typedef struct pml_run_options {
  const char* out_dir;         /* default "." */
  const char* resume_path;     /* train: checkpoint to continue from */
  const char* checkpoint_path; /* eval/analyze: default <out_dir>/checkpoint.json */
  const char* config_path;     /* recorded in the manifest */
  int threads;
  int has_seed;
  uint64_t seed;
  int analyze_tasks;
  size_t gradcheck_coordinates;
} pml_run_options;

PML_API void pml_run_options_init(pml_run_options* options);

/* Runs "train", "eval", "gradcheck", "ablate" or "analyze", writing the
 * command's artifacts and manifest.json into out_dir.  `summary_json` may be
 * NULL. */
PML_API pml_status pml_run(const char* command, const pml_config* config, const pml_run_options* options,
                           char** summary_json);

/* Re-runs the command recorded in a manifest into out_dir and compares
 * artifact hashes.  `identical` receives 1 when all match. */
PML_API pml_status pml_replay(const char* manifest_path, const char* out_dir, int threads, int* identical,
                              char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* PAMELA_PAMELA_H */
