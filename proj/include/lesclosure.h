#ifndef LESCLOSURE_H
#define LESCLOSURE_H

/* C interface to the LES closure library. Objects are opaque handles; every
 * function that can fail returns an les_status and leaves a message for
 * les_last_error() on the calling thread. Variable-length outputs follow the
 * (buffer, capacity, needed) convention: *needed is always set, and the
 * buffer is written only when capacity suffices (LES_ERR_INVALID_ARGUMENT
 * otherwise). Strings are NUL-terminated and `needed` counts the NUL. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LES_API __declspec(dllexport)
#else
#define LES_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum les_status {
  LES_OK = 0,
  LES_ERR_INVALID_ARGUMENT = 1,
  LES_ERR_DIMENSION_MISMATCH = 2,
  LES_ERR_SHAPE_MISMATCH = 3,
  LES_ERR_INCOMPATIBLE_RHS = 4,
  LES_ERR_BLOW_UP = 5,
  LES_ERR_NON_FINITE_GRADIENT = 6,
  LES_ERR_INSUFFICIENT_WINDOW = 7,
  LES_ERR_IO = 8,
  LES_ERR_FORMAT = 9,
  LES_ERR_INTERNAL = 99
} les_status;

typedef struct les_config_s* les_config;
typedef struct les_dataset_s* les_dataset;
typedef struct les_model_s* les_model;

LES_API const char* les_version(void);
LES_API const char* les_status_name(int status);
/* Message of the last failure on this thread; empty after a success. */
LES_API const char* les_last_error(void);

/* Progress messages from long-running commands; NULL silences them. */
typedef void (*les_log_fn)(const char* message, void* user);
LES_API void les_set_log(les_log_fn fn, void* user);

/* Experiment configuration. */
LES_API int les_config_default(les_config* out);
LES_API int les_config_parse(const char* text, les_config* out);
LES_API int les_config_load(const char* path, les_config* out);
LES_API int les_config_set(les_config cfg, const char* key, const char* value);
/* Applies "key=value". */
LES_API int les_config_override(les_config cfg, const char* assignment);
LES_API int les_config_validate(les_config cfg);
LES_API int les_config_hash(les_config cfg, uint64_t* out);
LES_API int les_config_text(les_config cfg, char* buf, size_t cap, size_t* needed);
LES_API void les_config_free(les_config cfg);

/* Subcommands: gen-data, calibrate-smag, train, run-decay, run-kolmogorov,
 * run-ensemble, spectrum, skew-diag. */
LES_API int les_command_count(void);
LES_API const char* les_command_name(int index);

typedef struct les_command_options {
  const char* closures;   /* comma-separated variants, NULL for the default */
  const char* dataset;    /* spectrum: .lesd path, relative to the run dir */
  int snapshot;           /* spectrum: snapshot index, -1 for the last */
  const char* output;     /* spectrum: CSV name, NULL for the default */
  const char* checkpoint; /* skew-diag: SKEW .lesp, NULL for the default */
} les_command_options;

LES_API void les_command_options_init(les_command_options* opt);
/* Runs a subcommand in run_dir; opt may be NULL. */
LES_API int les_command_run(const char* name, const char* run_dir, les_config cfg, const les_command_options* opt);
/* Section `name` of run_dir/report.txt (empty string when absent). */
LES_API int les_report_section(const char* run_dir, const char* name, char* buf, size_t cap, size_t* needed);

/* Snapshot datasets (.lesd). */
LES_API int les_dataset_read(const char* path, les_dataset* out);
LES_API int les_dataset_info(les_dataset ds, int* nx, int* ny, int* n_snapshots, double* dt_between, double* nu,
                             uint64_t* seed);
/* Copies snapshot k; u and v need nx*ny entries each, x fastest. */
LES_API int les_dataset_snapshot(les_dataset ds, int k, double* t, double* u, double* v);
LES_API int les_dataset_encode(les_dataset ds, uint8_t* buf, size_t cap, size_t* needed);
LES_API int les_dataset_write(les_dataset ds, const char* path);
LES_API void les_dataset_free(les_dataset ds);

/* Closure checkpoints (.lesp). */
LES_API int les_model_read(const char* path, les_model* out);
LES_API int les_model_decode(const uint8_t* bytes, size_t n, les_model* out);
/* kind: 0 NC, 1 SMAG, 2 DYNSMAG, 3 CNN, 4 DIV, 5 SKEW, 6 CNN-C. */
LES_API int les_model_info(les_model model, int* kind, size_t* n_params);
LES_API int les_model_params(les_model model, double* out, size_t cap);
LES_API int les_model_encode(les_model model, uint8_t* buf, size_t cap, size_t* needed);
LES_API int les_model_write(les_model model, const char* path);
LES_API void les_model_free(les_model model);

/* Dyadic energy spectrum of a velocity on the n x n [-pi, pi]^2 grid. */
LES_API int les_spectrum(const double* u, const double* v, int nx, int ny, double* energy, int cap, int* n_bins);

/* 64-bit FNV-1a of a file's bytes. */
LES_API int les_file_fnv1a(const char* path, uint64_t* out);

#ifdef __cplusplus
}
#endif

#endif
