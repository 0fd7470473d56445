/* C interface to the noisefair library. Objects are opaque handles; every
 * call returns an nf_status and, on failure, records a message readable with
 * nf_last_error() on the calling thread. Strings returned through `char**`
 * out-parameters are owned by the caller and released with nf_string_free. */
#ifndef NOISEFAIR_H
#define NOISEFAIR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NF_API __declspec(dllexport)
#elif defined(__GNUC__)
#define NF_API __attribute__((visibility("default")))
#else
#define NF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nf_status {
  NF_OK = 0,
  NF_INVALID_ARGUMENT = 1,
  NF_PARSE_ERROR = 2,
  NF_IO_ERROR = 3,
  NF_STRATIFICATION_ERROR = 4,
  NF_ESTIMATION_ERROR = 5,
  NF_DIVERGENCE = 6,
  NF_VERIFICATION_FAILED = 7,
  NF_HYPOTHESIS_VIOLATED = 8,
  NF_INTERNAL_ERROR = 99
} nf_status;

typedef struct nf_dataset nf_dataset;
typedef struct nf_estimate nf_estimate;
typedef struct nf_model nf_model;

NF_API const char* nf_version(void);
/* Message of the last failed call on this thread; empty when none. */
NF_API const char* nf_last_error(void);
NF_API void nf_string_free(char* s);

/* schema_json: {"label_column", "positive_symbol", "group_column",
 * "feature_columns"}. Features are standardized when `standardize` != 0. */
NF_API nf_status nf_dataset_load_csv(const char* path, const char* schema_json, int standardize, nf_dataset** out);
/* spec_json: a synthetic generator spec, e.g. {"preset": "adultlike"}. */
NF_API nf_status nf_dataset_synth(const char* spec_json, nf_dataset** out);
NF_API nf_status nf_dataset_write_csv(const nf_dataset* ds, const char* path);
NF_API nf_status nf_dataset_size(const nf_dataset* ds, size_t* rows, size_t* cols, size_t* groups);
NF_API nf_status nf_dataset_labels(const nf_dataset* ds, int* labels, size_t n);
/* noise_json: {group_name: {"eps_plus", "eps_minus"}}. */
NF_API nf_status nf_dataset_inject_noise(const nf_dataset* ds, const char* noise_json, uint64_t seed,
                                         nf_dataset** out);
NF_API void nf_dataset_free(nf_dataset* ds);

NF_API nf_status nf_estimate_noise(const nf_dataset* noisy, int folds, uint64_t seed, nf_estimate** out);
NF_API nf_status nf_estimate_to_json(const nf_estimate* est, char** json_out);
NF_API nf_status nf_estimate_from_json(const char* json, nf_estimate** out);
NF_API void nf_estimate_free(nf_estimate* est);

/* train_json: {"objective": "plain"|"surrogate"|"group_peer", "alpha",
 * "constraint": {"metric", "delta", "correction", "noise_model"},
 * "train": {TrainConfig overrides}}. `est` may be NULL for plain,
 * unconstrained-correction training. */
NF_API nf_status nf_model_train(const nf_dataset* ds, const nf_estimate* est, const char* train_json,
                                nf_model** out);
NF_API nf_status nf_model_predict(const nf_model* model, const nf_dataset* ds, double* positive_prob, size_t n);
NF_API nf_status nf_model_save(const nf_model* model, const char* path);
/* Refuses a model whose feature count differs from `expected_cols` (0 skips the check). */
NF_API nf_status nf_model_load(const char* path, size_t expected_cols, nf_model** out);
NF_API void nf_model_free(nf_model* model);

/* Runs an experiment config (JSON text); writes results into its
 * output_dir and returns the summary JSON. `jobs` <= 0 falls back to
 * NOISEFAIR_JOBS, then 1. */
NF_API nf_status nf_run_benchmark(const char* config_json, const char* base_dir, int jobs, char** summary_out);
/* sweep_json: {"base": <experiment config>, "grid": [...], "noisy_group"}. */
NF_API nf_status nf_noise_sweep(const char* sweep_json, const char* base_dir, int jobs, char** summary_out);
/* Theory suite report as JSON; `passed` is set to 1 when every check passed. */
NF_API nf_status nf_verify_theory(int include_training, int* passed, char** report_out);

#ifdef __cplusplus
}
#endif

#endif
