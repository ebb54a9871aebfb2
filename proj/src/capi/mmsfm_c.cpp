#include "mmsfm/mmsfm.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "data.hpp"
#include "metrics.hpp"
#include "nn.hpp"
#include "sim.hpp"
#include "spline.hpp"
#include "trainer.hpp"

using namespace mmsfm;

struct mmsfm_dataset {
  MarginalDataset data;
};

struct mmsfm_matrix {
  Matrix m;
};

struct mmsfm_model {
  Mlp flow;
  Mlp score;
  std::optional<AdamW> flow_optimizer;
  std::optional<AdamW> score_optimizer;
  std::vector<LossRecord> history;
};

struct mmsfm_trajectory {
  TrajectoryBatch batch;
};

struct mmsfm_spline {
  PiecewiseCubic curve;
};

namespace {

thread_local std::string last_error;
thread_local long last_index = -1;

mmsfm_status to_status(Errc code) {
  switch (code) {
    case Errc::invalid_input: return MMSFM_INVALID_INPUT;
    case Errc::out_of_range: return MMSFM_OUT_OF_RANGE;
    case Errc::degenerate_plan: return MMSFM_DEGENERATE_PLAN;
    case Errc::singular_variance: return MMSFM_SINGULAR_VARIANCE;
    case Errc::training_diverged: return MMSFM_TRAINING_DIVERGED;
    case Errc::integration_diverged: return MMSFM_INTEGRATION_DIVERGED;
    case Errc::parse_error: return MMSFM_PARSE_ERROR;
    case Errc::io_error: return MMSFM_IO_ERROR;
    case Errc::checkpoint_mismatch: return MMSFM_CHECKPOINT_MISMATCH;
  }
  return MMSFM_INTERNAL;
}

template <class F>
mmsfm_status guarded(F&& body) {
  last_error.clear();
  last_index = -1;
  try {
    body();
    return MMSFM_OK;
  } catch (const Error& e) {
    last_error = e.what();
    last_index = e.index();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return MMSFM_INTERNAL;
}

void need(const void* p, const char* name) {
  if (!p) fail(Errc::invalid_input, std::string(name) + " is null");
}

Matrix copy_rows(const double* data, std::size_t rows, std::size_t cols, const char* name) {
  if (rows * cols > 0) need(data, name);
  return Matrix::from_rows(rows, cols, std::vector<double>(data, data + rows * cols));
}

TimeGrid make_grid(const double* times, std::size_t n) {
  need(times, "times");
  return TimeGrid(std::vector<double>(times, times + n));
}

}  // namespace

extern "C" {

const char* mmsfm_last_error(void) { return last_error.c_str(); }
long mmsfm_last_error_index(void) { return last_index; }

const char* mmsfm_status_name(mmsfm_status status) {
  switch (status) {
    case MMSFM_OK: return "ok";
    case MMSFM_INVALID_INPUT: return "invalid input";
    case MMSFM_OUT_OF_RANGE: return "out of range";
    case MMSFM_DEGENERATE_PLAN: return "degenerate plan";
    case MMSFM_SINGULAR_VARIANCE: return "singular variance";
    case MMSFM_TRAINING_DIVERGED: return "training diverged";
    case MMSFM_INTEGRATION_DIVERGED: return "integration diverged";
    case MMSFM_PARSE_ERROR: return "parse error";
    case MMSFM_IO_ERROR: return "io error";
    case MMSFM_CHECKPOINT_MISMATCH: return "checkpoint mismatch";
    case MMSFM_INTERNAL: return "internal error";
  }
  return "unknown status";
}

mmsfm_status mmsfm_builtin_grid(const char* name, double* times, size_t capacity, size_t* count) {
  return guarded([&] {
    need(name, "name");
    const TimeGrid grid = builtin_grid(name);
    if (count) *count = grid.size();
    if (times) {
      for (std::size_t i = 0; i < grid.size() && i < capacity; ++i) times[i] = grid[i];
    }
  });
}

const char* mmsfm_builtin_grid_names(void) {
  static const std::string names = builtin_grid_names();
  return names.c_str();
}

mmsfm_status mmsfm_canonical_time(double t, char* buffer, size_t capacity) {
  return guarded([&] {
    need(buffer, "buffer");
    const std::string s = canonical_time(t);
    if (s.size() + 1 > capacity) fail(Errc::out_of_range, "buffer too small for time string");
    std::memcpy(buffer, s.c_str(), s.size() + 1);
  });
}

mmsfm_status mmsfm_matrix_load_csv(const char* path, mmsfm_matrix** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mmsfm_matrix{load_points(path)};
  });
}

mmsfm_status mmsfm_matrix_save_csv(const char* path, const double* data, size_t rows,
                                   size_t cols) {
  return guarded([&] {
    need(path, "path");
    save_points(path, copy_rows(data, rows, cols, "data"));
  });
}

size_t mmsfm_matrix_rows(const mmsfm_matrix* m) { return m ? m->m.rows() : 0; }
size_t mmsfm_matrix_cols(const mmsfm_matrix* m) { return m ? m->m.cols() : 0; }
const double* mmsfm_matrix_data(const mmsfm_matrix* m) { return m ? m->m.data().data() : nullptr; }
void mmsfm_matrix_free(mmsfm_matrix* m) { delete m; }

mmsfm_status mmsfm_dataset_synthesize(const char* shape, const double* times, size_t n_times,
                                      double std, size_t samples, size_t pool_samples,
                                      uint64_t seed, mmsfm_dataset** out) {
  return guarded([&] {
    need(shape, "shape");
    need(out, "out");
    GaussianSequenceSpec spec;
    spec.means = shape_means(shape);
    spec.std = std;
    spec.samples = samples;
    spec.pool_samples = pool_samples;
    spec.seed = seed;
    *out = new mmsfm_dataset{gen_gaussian_sequence(spec, make_grid(times, n_times))};
  });
}

mmsfm_status mmsfm_dataset_load(const char* path, const double* times, size_t n_times,
                                mmsfm_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mmsfm_dataset{load_marginals(std::string(path), make_grid(times, n_times))};
  });
}

mmsfm_status mmsfm_dataset_save(const mmsfm_dataset* data, const char* path) {
  return guarded([&] {
    need(data, "dataset");
    need(path, "path");
    save_marginals(std::string(path), data->data);
  });
}

void mmsfm_dataset_free(mmsfm_dataset* data) { delete data; }

size_t mmsfm_dataset_points(const mmsfm_dataset* data) { return data ? data->data.grid.size() : 0; }
size_t mmsfm_dataset_dim(const mmsfm_dataset* data) { return data ? data->data.dim() : 0; }

double mmsfm_dataset_time(const mmsfm_dataset* data, size_t index) {
  if (!data || index >= data->data.grid.size()) return 0.0;
  return data->data.grid[index];
}

size_t mmsfm_dataset_samples(const mmsfm_dataset* data, size_t index) {
  if (!data || index >= data->data.marginals.size()) return 0;
  return data->data.marginals[index].rows();
}

const double* mmsfm_dataset_marginal(const mmsfm_dataset* data, size_t index) {
  if (!data || index >= data->data.marginals.size()) return nullptr;
  return data->data.marginals[index].data().data();
}

size_t mmsfm_dataset_pool_size(const mmsfm_dataset* data) {
  return data ? data->data.initial_pool.rows() : 0;
}

const double* mmsfm_dataset_pool(const mmsfm_dataset* data) {
  return data ? data->data.initial_pool.data().data() : nullptr;
}

void mmsfm_train_config_init(mmsfm_train_config* config) {
  if (!config) return;
  const TrainConfig d;
  config->window = d.window;
  config->sigma = d.sigma;
  config->batch_size = d.batch_size;
  config->steps = d.steps;
  config->learning_rate = d.learning_rate;
  config->weight_decay = d.weight_decay;
  config->schedule = "window-local";
  config->spline = "hermite";
  config->seed = d.seed;
  config->has_held_out = 0;
  config->held_out = 0;
  config->hidden_width = 64;
  config->hidden_layers = 2;
}

mmsfm_status mmsfm_train(const mmsfm_dataset* data, const mmsfm_train_config* config,
                         mmsfm_model** out) {
  return guarded([&] {
    need(data, "dataset");
    need(config, "config");
    need(out, "out");
    TrainConfig c;
    c.window = config->window;
    c.sigma = config->sigma;
    c.batch_size = config->batch_size;
    c.steps = config->steps;
    c.learning_rate = config->learning_rate;
    c.weight_decay = config->weight_decay;
    if (config->schedule) c.schedule = schedule_mode_from_string(config->schedule);
    if (config->spline) c.spline = spline_family_from_string(config->spline);
    c.seed = config->seed;
    if (config->has_held_out) c.held_out = config->held_out;
    require(config->hidden_width > 0 && config->hidden_layers > 0,
            "hidden width and layer count must be positive");
    c.hidden.assign(config->hidden_layers, config->hidden_width);
    TrainResult r = train(data->data, c);
    *out = new mmsfm_model{std::move(r.flow), std::move(r.score), std::move(r.flow_optimizer),
                           std::move(r.score_optimizer), std::move(r.history)};
  });
}

size_t mmsfm_model_dim(const mmsfm_model* model) { return model ? model->flow.data_dim() : 0; }

size_t mmsfm_model_parameter_count(const mmsfm_model* model) {
  return model ? model->flow.parameter_count() : 0;
}

size_t mmsfm_model_history_size(const mmsfm_model* model) {
  return model ? model->history.size() : 0;
}

mmsfm_status mmsfm_model_history(const mmsfm_model* model, size_t index, size_t* step,
                                 size_t* window, double* flow_loss, double* score_loss) {
  return guarded([&] {
    need(model, "model");
    if (index >= model->history.size()) fail(Errc::out_of_range, "history index out of range");
    const LossRecord& r = model->history[index];
    if (step) *step = r.step;
    if (window) *window = r.window;
    if (flow_loss) *flow_loss = r.flow_loss;
    if (score_loss) *score_loss = r.score_loss;
  });
}

mmsfm_status mmsfm_model_write_loss_csv(const mmsfm_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, std::string("cannot open ") + path + " for writing");
    out << "step,window,flow_loss,score_loss\n";
    for (const LossRecord& r : model->history) {
      out << r.step << ',' << r.window << ',' << format_double(r.flow_loss) << ','
          << format_double(r.score_loss) << '\n';
    }
    if (!out) fail(Errc::io_error, std::string("write failed: ") + path);
  });
}

mmsfm_status mmsfm_model_save(const mmsfm_model* model, const char* flow_path,
                              const char* score_path) {
  return guarded([&] {
    need(model, "model");
    need(flow_path, "flow_path");
    need(score_path, "score_path");
    save_checkpoint(flow_path, model->flow,
                    model->flow_optimizer ? &*model->flow_optimizer : nullptr);
    save_checkpoint(score_path, model->score,
                    model->score_optimizer ? &*model->score_optimizer : nullptr);
  });
}

mmsfm_status mmsfm_model_load(const char* flow_path, const char* score_path, mmsfm_model** out) {
  return guarded([&] {
    need(flow_path, "flow_path");
    need(score_path, "score_path");
    need(out, "out");
    Checkpoint flow = load_checkpoint(flow_path);
    Checkpoint score = load_checkpoint(score_path);
    if (flow.net.widths() != score.net.widths()) {
      fail(Errc::checkpoint_mismatch, "flow and score checkpoints have different architectures");
    }
    *out = new mmsfm_model{std::move(flow.net), std::move(score.net), std::move(flow.optimizer),
                           std::move(score.optimizer), {}};
  });
}

void mmsfm_model_free(mmsfm_model* model) { delete model; }

void mmsfm_generate_options_init(mmsfm_generate_options* options) {
  if (!options) return;
  options->t_begin = 0.0;
  options->t_end = 1.0;
  options->steps_per_unit = 100;
  options->sigma = 0.15;
  options->deterministic = 0;
  options->ode_method = "rk4";
  options->score_is_scaled = 1;
  options->seed = 0;
}

mmsfm_status mmsfm_generate(const mmsfm_model* model, const double* x0, size_t particles,
                            size_t dim, const mmsfm_generate_options* options,
                            mmsfm_trajectory** out) {
  return guarded([&] {
    need(model, "model");
    need(options, "options");
    need(out, "out");
    require(dim == model->flow.data_dim(), "initial conditions have dimension " +
                                               std::to_string(dim) + ", model expects " +
                                               std::to_string(model->flow.data_dim()));
    require(options->t_end > options->t_begin, "t_end must exceed t_begin");
    require(options->steps_per_unit > 0, "steps_per_unit must be positive");
    const Matrix start = copy_rows(x0, particles, dim, "x0");
    const double span = options->t_end - options->t_begin;
    const auto steps = static_cast<std::size_t>(
        std::llround(span * static_cast<double>(options->steps_per_unit)));
    const auto grid = uniform_time_grid(options->t_begin, options->t_end, std::max<std::size_t>(steps, 1));
    TrajectoryBatch batch;
    if (options->deterministic) {
      const std::string method = options->ode_method ? options->ode_method : "rk4";
      if (method == "rk4") {
        batch = integrate_ode(model->flow, start, grid);
      } else if (method == "euler") {
        batch = integrate_euler(flow_field(model->flow), start, grid);
      } else {
        fail(Errc::invalid_input, "unknown ODE method '" + method + "' (expected rk4 or euler)");
      }
    } else {
      const SdeSpec spec{&model->flow, &model->score, options->sigma,
                         options->score_is_scaled != 0};
      batch = integrate_sde(spec, start, grid, options->seed);
    }
    *out = new mmsfm_trajectory{std::move(batch)};
  });
}

mmsfm_status mmsfm_trajectory_save(const mmsfm_trajectory* traj, const char* path) {
  return guarded([&] {
    need(traj, "trajectory");
    need(path, "path");
    save_trajectories(path, traj->batch);
  });
}

mmsfm_status mmsfm_trajectory_load(const char* path, mmsfm_trajectory** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mmsfm_trajectory{load_trajectories(path)};
  });
}

void mmsfm_trajectory_free(mmsfm_trajectory* traj) { delete traj; }
size_t mmsfm_trajectory_particles(const mmsfm_trajectory* traj) { return traj ? traj->batch.particles : 0; }
size_t mmsfm_trajectory_dim(const mmsfm_trajectory* traj) { return traj ? traj->batch.dim : 0; }
size_t mmsfm_trajectory_steps(const mmsfm_trajectory* traj) { return traj ? traj->batch.times.size() : 0; }

double mmsfm_trajectory_time(const mmsfm_trajectory* traj, size_t step) {
  if (!traj || step >= traj->batch.times.size()) return 0.0;
  return traj->batch.times[step];
}

mmsfm_status mmsfm_trajectory_states_at(const mmsfm_trajectory* traj, double t, double* out,
                                        size_t capacity) {
  return guarded([&] {
    need(traj, "trajectory");
    need(out, "out");
    const Matrix snap = traj->batch.snapshot(traj->batch.nearest_step(t));
    if (capacity < snap.data().size()) fail(Errc::out_of_range, "output buffer too small");
    std::copy(snap.data().begin(), snap.data().end(), out);
  });
}

mmsfm_status mmsfm_evaluate(const double* x, size_t nx, const double* y, size_t ny, size_t dim,
                            double gaussian_gamma, double mixture_base_gamma,
                            mmsfm_metric_report* report) {
  return guarded([&] {
    need(report, "report");
    MetricOptions options;
    options.gaussian_gamma = gaussian_gamma > 0.0 ? gaussian_gamma : 0.0;
    options.mixture_base_gamma = mixture_base_gamma > 0.0 ? mixture_base_gamma : 0.0;
    const MetricReport r =
        evaluate_metrics(copy_rows(x, nx, dim, "x"), copy_rows(y, ny, dim, "y"), options);
    report->w1 = r.w1;
    report->w2_sq = r.w2_sq;
    report->mmd_gaussian = r.mmd_gaussian;
    report->mmd_mixture = r.mmd_mixture;
    report->mmd_gaussian_raw = r.mmd_gaussian_raw;
    report->mmd_mixture_raw = r.mmd_mixture_raw;
    report->samples_x = r.samples_x;
    report->samples_y = r.samples_y;
    report->gaussian_gamma = r.gaussian_gamma;
    report->mixture_count = std::min<std::size_t>(r.mixture_gammas.size(), 5);
    for (std::size_t i = 0; i < report->mixture_count; ++i) {
      report->mixture_gammas[i] = r.mixture_gammas[i];
    }
  });
}

mmsfm_status mmsfm_wasserstein(const double* x, size_t nx, const double* y, size_t ny,
                               size_t dim, int p, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = wasserstein(copy_rows(x, nx, dim, "x"), copy_rows(y, ny, dim, "y"), p);
  });
}

mmsfm_status mmsfm_mmd(const double* x, size_t nx, const double* y, size_t ny, size_t dim,
                       const double* gammas, size_t n_gammas, double* out) {
  return guarded([&] {
    need(out, "out");
    need(gammas, "gammas");
    const Kernel kernel{std::vector<double>(gammas, gammas + n_gammas)};
    *out = mmd(copy_rows(x, nx, dim, "x"), copy_rows(y, ny, dim, "y"), kernel);
  });
}

mmsfm_status mmsfm_spline_fit(const char* family, const double* times, size_t n_knots,
                              const double* values, size_t dim, mmsfm_spline** out) {
  return guarded([&] {
    need(family, "family");
    need(times, "times");
    need(out, "out");
    Knots knots{std::vector<double>(times, times + n_knots),
                copy_rows(values, n_knots, dim, "values")};
    *out = new mmsfm_spline{fit_spline(spline_family_from_string(family), knots)};
  });
}

mmsfm_status mmsfm_spline_eval(const mmsfm_spline* spline, double t, double* out) {
  return guarded([&] {
    need(spline, "spline");
    need(out, "out");
    spline->curve.eval(t, std::span<double>(out, spline->curve.dim()));
  });
}

mmsfm_status mmsfm_spline_eval_derivative(const mmsfm_spline* spline, double t, double* out) {
  return guarded([&] {
    need(spline, "spline");
    need(out, "out");
    spline->curve.eval_derivative(t, std::span<double>(out, spline->curve.dim()));
  });
}

void mmsfm_spline_free(mmsfm_spline* spline) { delete spline; }

}  // extern "C"
