/*
 * mssfs - multiprocess state space model with feedback and switching.
 *
 * C interface to the estimation library: regime-switching Kalman filtering
 * and smoothing with collapsing, an approximate EM fitter, dataset
 * simulation, and subject-level BCa bootstrap intervals.
 *
 * All objects are opaque handles created and destroyed by this API. Every
 * fallible call returns an mssfs_status; on failure a human-readable message
 * is available from mssfs_last_error() until the next call on the same
 * thread. Handles returned through out-parameters are only valid when the
 * call returned MSSFS_OK.
 */
#ifndef MSSFS_H
#define MSSFS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MSSFS_API __declspec(dllexport)
#else
#define MSSFS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mssfs_status {
  MSSFS_OK = 0,
  MSSFS_ERR_INVALID_ARGUMENT = 1,
  MSSFS_ERR_PARSE = 2,
  MSSFS_ERR_CONFIG = 3,
  MSSFS_ERR_DOMAIN = 4,
  MSSFS_ERR_NUMERIC = 5,
  MSSFS_ERR_CAPACITY = 6,
  MSSFS_ERR_FIT = 7,
  MSSFS_ERR_BOOTSTRAP = 8,
  MSSFS_ERR_IO = 9,
  MSSFS_ERR_INTERNAL = 10
} mssfs_status;

typedef struct mssfs_config mssfs_config;
typedef struct mssfs_dataset mssfs_dataset;
typedef struct mssfs_fit mssfs_fit;

/* Library version string. */
MSSFS_API const char* mssfs_version(void);

/* Stable name of a status code (e.g. "MSSFS_ERR_PARSE"). */
MSSFS_API const char* mssfs_status_name(mssfs_status status);

/* Message of the most recent failure on this thread; empty string if none. */
MSSFS_API const char* mssfs_last_error(void);

/* ---- configuration ---------------------------------------------------- */

/* New configuration with the published defaults (N_max=30, D_EM=0.001,
 * kappa=1e-6, lambda=0.01, L=3, rho=0.5, B=300). */
MSSFS_API mssfs_status mssfs_config_create(mssfs_config** out);

/* Load an INI-style configuration document. */
MSSFS_API mssfs_status mssfs_config_load(const char* path, mssfs_config** out);

/* Set one entry; key is "section.name", e.g. "em.lambda" or "run.seed". */
MSSFS_API mssfs_status mssfs_config_set(mssfs_config* config, const char* key,
                                        const char* value);

/* Read one entry into buf (NUL terminated, truncated to buflen). */
MSSFS_API mssfs_status mssfs_config_get(const mssfs_config* config,
                                        const char* key, char* buf,
                                        size_t buflen);

MSSFS_API mssfs_status mssfs_config_save(const mssfs_config* config,
                                         const char* path);

MSSFS_API void mssfs_config_free(mssfs_config* config);

/* ---- datasets ---------------------------------------------------------- */

/* Load a long-format delimited dataset:
 * subject_id[,arm],time,y1[,...],covariates. Empty y fields are missing. */
MSSFS_API mssfs_status mssfs_dataset_load(const char* path,
                                          mssfs_dataset** out);

MSSFS_API mssfs_status mssfs_dataset_save(const mssfs_dataset* data,
                                          const char* path);

/* Number of series (subject/arm pairs). */
MSSFS_API int mssfs_dataset_num_series(const mssfs_dataset* data);

/* Number of distinct subjects (bootstrap resampling units). */
MSSFS_API int mssfs_dataset_num_subjects(const mssfs_dataset* data);

MSSFS_API void mssfs_dataset_free(mssfs_dataset* data);

/* Draw a dataset from the configured study design ([simulate] section). */
MSSFS_API mssfs_status mssfs_simulate(const mssfs_config* config,
                                      uint64_t seed, mssfs_dataset** out);

/* ---- fitting ----------------------------------------------------------- */

/* Run the EM fit on a dataset. threads <= 0 uses the hardware default. */
MSSFS_API mssfs_status mssfs_fit_run(const mssfs_config* config,
                                     const mssfs_dataset* data, int threads,
                                     mssfs_fit** out);

MSSFS_API int mssfs_fit_num_params(const mssfs_fit* fit);
MSSFS_API const char* mssfs_fit_param_name(const mssfs_fit* fit, int i);
MSSFS_API double mssfs_fit_param_value(const mssfs_fit* fit, int i);

/* Value by name; returns NaN (and sets the error message) if unknown. */
MSSFS_API double mssfs_fit_param_by_name(const mssfs_fit* fit,
                                         const char* name);

MSSFS_API int mssfs_fit_iterations(const mssfs_fit* fit);
MSSFS_API int mssfs_fit_converged(const mssfs_fit* fit);
MSSFS_API int mssfs_fit_trace_len(const mssfs_fit* fit);
MSSFS_API double mssfs_fit_loglik_at(const mssfs_fit* fit, int i);
MSSFS_API double mssfs_fit_dem_at(const mssfs_fit* fit, int i);

MSSFS_API void mssfs_fit_free(mssfs_fit* fit);

/* ---- command driver ----------------------------------------------------

 * Runs one command end to end, writing the artifact tables and a
 * run_metadata.json into out_dir. command is one of: simulate, fit, filter,
 * smooth, predict, bootstrap, bench. data_path may be NULL for simulate and
 * bench. seed < 0 and threads <= 0 fall back to the configured values. */
MSSFS_API mssfs_status mssfs_run_command(const char* command,
                                         const mssfs_config* config,
                                         const char* data_path,
                                         const char* out_dir, int64_t seed,
                                         int threads);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MSSFS_H */
