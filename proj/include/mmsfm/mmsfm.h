#ifndef MMSFM_MMSFM_H
#define MMSFM_MMSFM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MMSFM_API __declspec(dllexport)
#elif defined(__GNUC__)
#define MMSFM_API __attribute__((visibility("default")))
#else
#define MMSFM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mmsfm_status {
  MMSFM_OK = 0,
  MMSFM_INVALID_INPUT = 1,
  MMSFM_OUT_OF_RANGE = 2,
  MMSFM_DEGENERATE_PLAN = 3,
  MMSFM_SINGULAR_VARIANCE = 4,
  MMSFM_TRAINING_DIVERGED = 5,
  MMSFM_INTEGRATION_DIVERGED = 6,
  MMSFM_PARSE_ERROR = 7,
  MMSFM_IO_ERROR = 8,
  MMSFM_CHECKPOINT_MISMATCH = 9,
  MMSFM_INTERNAL = 10
} mmsfm_status;

typedef struct mmsfm_dataset mmsfm_dataset;
typedef struct mmsfm_matrix mmsfm_matrix;
typedef struct mmsfm_model mmsfm_model;
typedef struct mmsfm_trajectory mmsfm_trajectory;
typedef struct mmsfm_spline mmsfm_spline;

/* Message of the last failed call on this thread ("" if none). */
MMSFM_API const char* mmsfm_last_error(void);
/* Step or line number tied to the last failure, -1 if none. */
MMSFM_API long mmsfm_last_error_index(void);
MMSFM_API const char* mmsfm_status_name(mmsfm_status status);

/* ---- time grids ---- */

/* Named grid: T1, T2, T3 or U<n>. Writes up to `capacity` times and the
   full length to `count`. */
MMSFM_API mmsfm_status mmsfm_builtin_grid(const char* name, double* times, size_t capacity,
                                          size_t* count);
/* Comma-separated list of accepted grid names. */
MMSFM_API const char* mmsfm_builtin_grid_names(void);
/* Up to 6 fractional digits, trailing zeros removed. */
MMSFM_API mmsfm_status mmsfm_canonical_time(double t, char* buffer, size_t capacity);

/* ---- dense matrices (row-major) ---- */

MMSFM_API mmsfm_status mmsfm_matrix_load_csv(const char* path, mmsfm_matrix** out);
MMSFM_API mmsfm_status mmsfm_matrix_save_csv(const char* path, const double* data, size_t rows,
                                             size_t cols);
MMSFM_API size_t mmsfm_matrix_rows(const mmsfm_matrix* m);
MMSFM_API size_t mmsfm_matrix_cols(const mmsfm_matrix* m);
MMSFM_API const double* mmsfm_matrix_data(const mmsfm_matrix* m);
MMSFM_API void mmsfm_matrix_free(mmsfm_matrix* m);

/* ---- datasets ---- */

/* Gaussian sequence around the "s-shape" or "alpha-shape" layout. */
MMSFM_API mmsfm_status mmsfm_dataset_synthesize(const char* shape, const double* times,
                                                size_t n_times, double std, size_t samples,
                                                size_t pool_samples, uint64_t seed,
                                                mmsfm_dataset** out);
/* Marginal CSV `t,x_0,...`; every t must match a grid time. */
MMSFM_API mmsfm_status mmsfm_dataset_load(const char* path, const double* times, size_t n_times,
                                          mmsfm_dataset** out);
MMSFM_API mmsfm_status mmsfm_dataset_save(const mmsfm_dataset* data, const char* path);
MMSFM_API void mmsfm_dataset_free(mmsfm_dataset* data);

MMSFM_API size_t mmsfm_dataset_points(const mmsfm_dataset* data);
MMSFM_API size_t mmsfm_dataset_dim(const mmsfm_dataset* data);
MMSFM_API double mmsfm_dataset_time(const mmsfm_dataset* data, size_t index);
MMSFM_API size_t mmsfm_dataset_samples(const mmsfm_dataset* data, size_t index);
MMSFM_API const double* mmsfm_dataset_marginal(const mmsfm_dataset* data, size_t index);
MMSFM_API size_t mmsfm_dataset_pool_size(const mmsfm_dataset* data);
MMSFM_API const double* mmsfm_dataset_pool(const mmsfm_dataset* data);

/* ---- training ---- */

typedef struct mmsfm_train_config {
  size_t window;
  double sigma;
  size_t batch_size;
  size_t steps;
  double learning_rate;
  double weight_decay;
  const char* schedule; /* "window-local" or "global" */
  const char* spline;   /* "hermite" or "natural" */
  uint64_t seed;
  int has_held_out;
  size_t held_out;
  size_t hidden_width;
  size_t hidden_layers;
} mmsfm_train_config;

MMSFM_API void mmsfm_train_config_init(mmsfm_train_config* config);
MMSFM_API mmsfm_status mmsfm_train(const mmsfm_dataset* data, const mmsfm_train_config* config,
                                   mmsfm_model** out);

MMSFM_API size_t mmsfm_model_dim(const mmsfm_model* model);
MMSFM_API size_t mmsfm_model_parameter_count(const mmsfm_model* model);
MMSFM_API size_t mmsfm_model_history_size(const mmsfm_model* model);
MMSFM_API mmsfm_status mmsfm_model_history(const mmsfm_model* model, size_t index, size_t* step,
                                           size_t* window, double* flow_loss,
                                           double* score_loss);
/* CSV `step,window,flow_loss,score_loss`. */
MMSFM_API mmsfm_status mmsfm_model_write_loss_csv(const mmsfm_model* model, const char* path);
MMSFM_API mmsfm_status mmsfm_model_save(const mmsfm_model* model, const char* flow_path,
                                        const char* score_path);
MMSFM_API mmsfm_status mmsfm_model_load(const char* flow_path, const char* score_path,
                                        mmsfm_model** out);
MMSFM_API void mmsfm_model_free(mmsfm_model* model);

/* ---- trajectory generation ---- */

typedef struct mmsfm_generate_options {
  double t_begin;
  double t_end;
  size_t steps_per_unit;
  double sigma;
  int deterministic;      /* integrate the flow network only */
  const char* ode_method; /* "rk4" or "euler" */
  int score_is_scaled;
  uint64_t seed;
} mmsfm_generate_options;

MMSFM_API void mmsfm_generate_options_init(mmsfm_generate_options* options);
MMSFM_API mmsfm_status mmsfm_generate(const mmsfm_model* model, const double* x0,
                                      size_t particles, size_t dim,
                                      const mmsfm_generate_options* options,
                                      mmsfm_trajectory** out);

/* CSV `particle_id,t,x_0,...`. */
MMSFM_API mmsfm_status mmsfm_trajectory_save(const mmsfm_trajectory* traj, const char* path);
MMSFM_API mmsfm_status mmsfm_trajectory_load(const char* path, mmsfm_trajectory** out);
MMSFM_API void mmsfm_trajectory_free(mmsfm_trajectory* traj);
MMSFM_API size_t mmsfm_trajectory_particles(const mmsfm_trajectory* traj);
MMSFM_API size_t mmsfm_trajectory_dim(const mmsfm_trajectory* traj);
MMSFM_API size_t mmsfm_trajectory_steps(const mmsfm_trajectory* traj);
MMSFM_API double mmsfm_trajectory_time(const mmsfm_trajectory* traj, size_t step);
/* States (particles x dim) at the grid step nearest to t. */
MMSFM_API mmsfm_status mmsfm_trajectory_states_at(const mmsfm_trajectory* traj, double t,
                                                  double* out, size_t capacity);

/* ---- metrics ---- */

typedef struct mmsfm_metric_report {
  double w1;
  double w2_sq;
  double mmd_gaussian;
  double mmd_mixture;
  double mmd_gaussian_raw;
  double mmd_mixture_raw;
  size_t samples_x;
  size_t samples_y;
  double gaussian_gamma;
  double mixture_gammas[5];
  size_t mixture_count;
} mmsfm_metric_report;

/* gamma <= 0 selects the median heuristic. */
MMSFM_API mmsfm_status mmsfm_evaluate(const double* x, size_t nx, const double* y, size_t ny,
                                      size_t dim, double gaussian_gamma,
                                      double mixture_base_gamma, mmsfm_metric_report* report);
MMSFM_API mmsfm_status mmsfm_wasserstein(const double* x, size_t nx, const double* y, size_t ny,
                                         size_t dim, int p, double* out);
MMSFM_API mmsfm_status mmsfm_mmd(const double* x, size_t nx, const double* y, size_t ny,
                                 size_t dim, const double* gammas, size_t n_gammas, double* out);

/* ---- splines ---- */

/* values: n_knots x dim row-major. family: "hermite" or "natural". */
MMSFM_API mmsfm_status mmsfm_spline_fit(const char* family, const double* times, size_t n_knots,
                                        const double* values, size_t dim, mmsfm_spline** out);
MMSFM_API mmsfm_status mmsfm_spline_eval(const mmsfm_spline* spline, double t, double* out);
MMSFM_API mmsfm_status mmsfm_spline_eval_derivative(const mmsfm_spline* spline, double t,
                                                    double* out);
MMSFM_API void mmsfm_spline_free(mmsfm_spline* spline);

#ifdef __cplusplus
}
#endif

#endif
