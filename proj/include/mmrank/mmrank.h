/* Copyright 2026 The mmrank Authors.
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the mmrank discriminative factor model. All objects are
 * opaque handles released with the matching *_free function. Every fallible
 * call returns an mmr_status; on failure mmr_last_error() describes the cause
 * for the calling thread until its next failing call.
 *
 * Matrices cross the boundary as column-major double arrays with features
 * along rows and samples along columns.
 */
#ifndef MMRANK_MMRANK_H
#define MMRANK_MMRANK_H

#include <stddef.h>
#include <stdint.h>

#if defined(MMRANK_BUILDING_LIBRARY)
#define MMR_API __attribute__((visibility("default")))
#else
#define MMR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mmr_status {
  MMR_OK = 0,
  MMR_ERR_USAGE = 1,    /* invalid options or argument */
  MMR_ERR_DATA = 2,     /* malformed input, dimension mismatch, unreadable file */
  MMR_ERR_NUMERIC = 3,  /* an engine produced a non-finite value */
  MMR_ERR_CHECKSUM = 4, /* corrupt model container */
  MMR_ERR_INTERNAL = 5
} mmr_status;

enum { MMR_LIKELIHOOD_RANK = 0, MMR_LIKELIHOOD_GAUSSIAN = 1 };
enum { MMR_CLASSIFIER_LINEAR = 0, MMR_CLASSIFIER_DPM = 1 };
enum { MMR_ENGINE_GIBBS = 0, MMR_ENGINE_VB = 1 };
enum { MMR_INIT_SPECTRAL = 0, MMR_INIT_RANDOM = 1 };
enum { MMR_TRANSFORM_IDENTITY = 0, MMR_TRANSFORM_EXP = 1, MMR_TRANSFORM_CUBE = 2 };

typedef struct mmr_dataset mmr_dataset;
typedef struct mmr_model mmr_model;
typedef struct mmr_cv_report mmr_cv_report;
typedef struct mmr_truth mmr_truth;

MMR_API const char* mmr_version(void);
MMR_API const char* mmr_last_error(void);

/* ---- datasets ---------------------------------------------------------- */

typedef struct mmr_csv_layout {
  int header;           /* first row holds column names */
  int ids;              /* first column holds row names */
  int features_as_rows; /* rows are features instead of samples */
} mmr_csv_layout;

MMR_API void mmr_csv_layout_init(mmr_csv_layout* layout);
MMR_API mmr_status mmr_dataset_read_csv(const char* path, const mmr_csv_layout* layout,
                                        mmr_dataset** out);
MMR_API mmr_status mmr_dataset_from_matrix(const double* values, size_t dims, size_t samples,
                                           mmr_dataset** out);
/* Appends one label task; {0,1} files map 0 to -1 and blank cells are missing. */
MMR_API mmr_status mmr_dataset_add_labels_csv(mmr_dataset* data, const char* path);
MMR_API mmr_status mmr_dataset_add_labels(mmr_dataset* data, const int8_t* labels, size_t n);
MMR_API size_t mmr_dataset_dims(const mmr_dataset* data);
MMR_API size_t mmr_dataset_samples(const mmr_dataset* data);
MMR_API size_t mmr_dataset_tasks(const mmr_dataset* data);
/* Borrowed pointer, valid while the dataset lives. */
MMR_API const char* mmr_dataset_sample_id(const mmr_dataset* data, size_t n);
MMR_API mmr_status mmr_dataset_values(const mmr_dataset* data, double* out);
MMR_API mmr_status mmr_dataset_labels(const mmr_dataset* data, size_t task, int8_t* out);
MMR_API void mmr_dataset_free(mmr_dataset* data);

/* ---- training ---------------------------------------------------------- */

typedef struct mmr_options {
  int factors;
  int truncation;
  double epsilon;
  double r_a, s_a, r_beta, s_beta;
  double psi_shape, psi_rate;
  double alpha_shape, alpha_rate;
  int likelihood;
  int classifier;
  int engine;
  int init;
  int iterations; /* Gibbs sweeps */
  int burnin;
  int thin;
  double vb_tolerance;
  int vb_max_iterations;
  uint64_t seed;
  int threads;            /* > 1 enables parallel Gibbs score blocks */
  int predict_iterations; /* fixed-point steps when inferring test scores */
  int hard_assignment;    /* DPM prediction with the most responsible component */
} mmr_options;

MMR_API void mmr_options_init(mmr_options* options);
/* Short model label such as "R-L-BSVM"; borrowed static storage per thread. */
MMR_API const char* mmr_options_label(const mmr_options* options);

MMR_API mmr_status mmr_train(const mmr_dataset* data, const mmr_options* options, mmr_model** out);
MMR_API size_t mmr_model_trace_length(const mmr_model* model);
MMR_API mmr_status mmr_model_trace(const mmr_model* model, double* out);
MMR_API int mmr_model_converged(const mmr_model* model);
MMR_API size_t mmr_model_dims(const mmr_model* model);
MMR_API size_t mmr_model_factors(const mmr_model* model);
MMR_API size_t mmr_model_samples(const mmr_model* model);
MMR_API size_t mmr_model_tasks(const mmr_model* model);
MMR_API size_t mmr_model_components(const mmr_model* model);
MMR_API int mmr_model_has_standardization(const mmr_model* model);
MMR_API mmr_status mmr_model_loadings(const mmr_model* model, double* out); /* d x K */
MMR_API mmr_status mmr_model_scores(const mmr_model* model, double* out);   /* K x N */
MMR_API mmr_status mmr_model_beta(const mmr_model* model, size_t task, double* out); /* K x C */

/* created_json is stored verbatim as provenance; NULL stores an empty object. */
MMR_API mmr_status mmr_model_save(const mmr_model* model, const char* path, const char* created_json);
MMR_API mmr_status mmr_model_load(const char* path, mmr_model** out);
MMR_API void mmr_model_free(mmr_model* model);

/* decisions and labels receive samples x tasks entries, entry [n * tasks + m]. */
MMR_API mmr_status mmr_predict(const mmr_model* model, const mmr_dataset* test,
                               const mmr_options* options, double* decisions, int8_t* labels);

/* ---- evaluation -------------------------------------------------------- */

typedef struct mmr_fold_row {
  int fold;
  int task;
  size_t n_test;
  double error;
  double auc; /* NaN when the held-out fold holds one class */
  double seconds;
} mmr_fold_row;

typedef struct mmr_summary_row {
  int task;
  double error_mean, error_sd;
  double auc_mean, auc_sd;
  double seconds_mean;
} mmr_summary_row;

MMR_API mmr_status mmr_auc(const double* decisions, const int8_t* labels, size_t n, double* out);
MMR_API mmr_status mmr_error_rate(const double* decisions, const int8_t* labels, size_t n,
                                  double* out);
MMR_API mmr_status mmr_cross_validate(const mmr_dataset* data, const mmr_options* options,
                                      int folds, mmr_cv_report** out);
MMR_API size_t mmr_cv_fold_count(const mmr_cv_report* report);
MMR_API mmr_status mmr_cv_fold(const mmr_cv_report* report, size_t i, mmr_fold_row* out);
MMR_API size_t mmr_cv_summary_count(const mmr_cv_report* report);
MMR_API mmr_status mmr_cv_summary(const mmr_cv_report* report, size_t i, mmr_summary_row* out);
MMR_API const char* mmr_cv_model_label(const mmr_cv_report* report);
MMR_API void mmr_cv_free(mmr_cv_report* report);

/* ---- synthetic data ---------------------------------------------------- */

typedef struct mmr_sim_options {
  size_t dims, samples, factors;
  double sparsity;
  double label_noise;
  int transform;
  int dpm; /* two clusters with opposing classifiers */
  double separation;
  uint64_t seed;
} mmr_sim_options;

MMR_API void mmr_sim_options_init(mmr_sim_options* options);
MMR_API mmr_status mmr_simulate(const mmr_sim_options* options, mmr_dataset** data,
                                mmr_truth** truth);
/* Cluster id of sample n, or -1 outside the cluster layout. */
MMR_API int mmr_truth_cluster(const mmr_truth* truth, size_t n);
MMR_API mmr_status mmr_truth_save(const mmr_truth* truth, const char* path);
MMR_API mmr_status mmr_truth_load(const char* path, mmr_truth** out);
MMR_API void mmr_truth_free(mmr_truth* truth);

#ifdef __cplusplus
}
#endif

#endif /* MMRANK_MMRANK_H */
