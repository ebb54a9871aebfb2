#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmsfm/mmsfm.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum Exit {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kDiverged = 3,
  kCheckpoint = 4,
  kEvalRange = 5,
};

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw CliError{kUsage, message}; }

int exit_for(mmsfm_status status) {
  switch (status) {
    case MMSFM_OK: return kOk;
    case MMSFM_TRAINING_DIVERGED:
    case MMSFM_INTEGRATION_DIVERGED: return kDiverged;
    case MMSFM_CHECKPOINT_MISMATCH: return kCheckpoint;
    default: return kFailure;
  }
}

void check(mmsfm_status status, const std::string& context) {
  if (status == MMSFM_OK) return;
  std::string message = context + ": " + mmsfm_last_error();
  const long index = mmsfm_last_error_index();
  if (status == MMSFM_TRAINING_DIVERGED && index >= 0) {
    message += " [step " + std::to_string(index) + "]";
  }
  throw CliError{exit_for(status), message};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Dataset = Handle<mmsfm_dataset, mmsfm_dataset_free>;
using Points = Handle<mmsfm_matrix, mmsfm_matrix_free>;
using Model = Handle<mmsfm_model, mmsfm_model_free>;
using Trajectory = Handle<mmsfm_trajectory, mmsfm_trajectory_free>;
using Spline = Handle<mmsfm_spline, mmsfm_spline_free>;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError{kFailure, "cannot open " + path.string()};
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CliError{kFailure, path.string() + ": " + e.what()};
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{kFailure, "cannot write " + path.string()};
  out << j.dump(2) << '\n';
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{kFailure, "cannot create " + dir.string() + ": " + ec.message()};
}

std::vector<double> grid_times(const std::string& name) {
  std::size_t count = 0;
  if (mmsfm_builtin_grid(name.c_str(), nullptr, 0, &count) != MMSFM_OK) {
    usage_error("unknown grid '" + name + "' (valid: " + mmsfm_builtin_grid_names() + ")");
  }
  std::vector<double> times(count);
  check(mmsfm_builtin_grid(name.c_str(), times.data(), times.size(), &count), "grid");
  return times;
}

struct GridInfo {
  std::string name;
  std::vector<double> times;
};

json grid_json(const GridInfo& grid) { return {{"name", grid.name}, {"times", grid.times}}; }

GridInfo read_grid(const fs::path& path) {
  const json j = read_json(path);
  GridInfo g;
  g.name = j.value("name", "custom");
  g.times = j.at("times").get<std::vector<double>>();
  return g;
}

/// A data directory holds marginals.csv and grid.json. `grid_name` overrides
/// the stored grid.
GridInfo load_data_dir(const fs::path& dir, const std::string& grid_name, Dataset& data) {
  GridInfo grid;
  if (!grid_name.empty()) {
    grid = {grid_name, grid_times(grid_name)};
  } else {
    grid = read_grid(dir / "grid.json");
  }
  check(mmsfm_dataset_load((dir / "marginals.csv").string().c_str(), grid.times.data(),
                           grid.times.size(), data.out()),
        "loading " + (dir / "marginals.csv").string());
  return grid;
}

/// Fills every option the user did not pass from the config JSON. Keys are
/// long option names without dashes.
void apply_config(CLI::App& cmd, const std::string& path) {
  if (path.empty()) return;
  const json config = read_json(path);
  for (const auto& [key, value] : config.items()) {
    CLI::Option* opt = nullptr;
    try {
      opt = cmd.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      continue;
    }
    if (opt->count() > 0 || value.is_null() || value.is_object()) continue;
    if (value.is_array()) continue;
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "true" : "false";
    } else {
      text = value.dump();
    }
    opt->clear();
    opt->add_result(text);
    opt->run_callback();
  }
}

void write_points(const fs::path& path, const double* data, std::size_t rows, std::size_t cols) {
  check(mmsfm_matrix_save_csv(path.string().c_str(), data, rows, cols), "writing " + path.string());
}

// ---- synth ----

struct SynthArgs {
  std::string dataset = "s-shape";
  std::string grid = "T1";
  std::uint64_t seed = 0;
  std::size_t samples = 200;
  std::size_t pool = 200;
  double std = 1.0;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  if (a.dataset != "s-shape" && a.dataset != "alpha-shape") {
    usage_error("unknown dataset '" + a.dataset + "' (valid: s-shape, alpha-shape)");
  }
  const GridInfo grid{a.grid, grid_times(a.grid)};
  Dataset data;
  check(mmsfm_dataset_synthesize(a.dataset.c_str(), grid.times.data(), grid.times.size(), a.std,
                                 a.samples, a.pool, a.seed, data.out()),
        "synth");
  const fs::path dir(a.out);
  make_dir(dir);
  check(mmsfm_dataset_save(data.get(), (dir / "marginals.csv").string().c_str()), "synth");
  write_json(dir / "grid.json", grid_json(grid));
  write_points(dir / "x0.csv", mmsfm_dataset_pool(data.get()), mmsfm_dataset_pool_size(data.get()),
               mmsfm_dataset_dim(data.get()));
  write_json(dir / "config.json", {{"command", "synth"},
                                   {"dataset", a.dataset},
                                   {"grid", grid_json(grid)},
                                   {"seed", a.seed},
                                   {"samples", a.samples},
                                   {"pool", a.pool},
                                   {"std", a.std},
                                   {"files", {"marginals.csv", "grid.json", "x0.csv"}}});
  return kOk;
}

// ---- train ----

struct TrainArgs {
  std::string data;
  std::string grid;
  std::string out;
  std::string config;
  std::size_t k = 2;
  double sigma = 0.15;
  std::size_t steps = 2500;
  double lr = 1e-4;
  std::size_t batch = 120;
  std::optional<std::size_t> hold_out;
  std::uint64_t seed = 0;
  std::string schedule = "window-local";
  std::string spline = "hermite";
  double weight_decay = 1e-2;
  std::size_t width = 64;
  std::size_t layers = 2;
};

int run_train(const TrainArgs& a) {
  Dataset data;
  const GridInfo grid = load_data_dir(a.data, a.grid, data);
  if (a.hold_out && (*a.hold_out == 0 || *a.hold_out + 1 >= grid.times.size())) {
    usage_error("--hold-out must be an interior index in [1, " +
                std::to_string(grid.times.size() - 2) + "]");
  }
  mmsfm_train_config c;
  mmsfm_train_config_init(&c);
  c.window = a.k;
  c.sigma = a.sigma;
  c.batch_size = a.batch;
  c.steps = a.steps;
  c.learning_rate = a.lr;
  c.weight_decay = a.weight_decay;
  c.schedule = a.schedule.c_str();
  c.spline = a.spline.c_str();
  c.seed = a.seed;
  c.has_held_out = a.hold_out.has_value();
  c.held_out = a.hold_out.value_or(0);
  c.hidden_width = a.width;
  c.hidden_layers = a.layers;

  Model model;
  check(mmsfm_train(data.get(), &c, model.out()), "train");

  const fs::path dir(a.out);
  make_dir(dir);
  check(mmsfm_model_save(model.get(), (dir / "flow.ckpt").string().c_str(),
                         (dir / "score.ckpt").string().c_str()),
        "saving checkpoints");
  check(mmsfm_model_write_loss_csv(model.get(), (dir / "loss.csv").string().c_str()),
        "writing loss log");
  json held = nullptr;
  if (a.hold_out) held = *a.hold_out;
  write_json(dir / "config.json", {{"command", "train"},
                                   {"data", a.data},
                                   {"grid", grid_json(grid)},
                                   {"dim", mmsfm_model_dim(model.get())},
                                   {"k", a.k},
                                   {"sigma", a.sigma},
                                   {"steps", a.steps},
                                   {"lr", a.lr},
                                   {"batch", a.batch},
                                   {"hold-out", held},
                                   {"seed", a.seed},
                                   {"schedule", a.schedule},
                                   {"spline", a.spline},
                                   {"weight-decay", a.weight_decay},
                                   {"hidden-width", a.width},
                                   {"hidden-layers", a.layers},
                                   {"parameters", mmsfm_model_parameter_count(model.get())},
                                   {"files", {"flow.ckpt", "score.ckpt", "loss.csv"}}});
  return kOk;
}

// ---- generate ----

struct GenerateArgs {
  std::string model;
  std::string x0;
  std::string out;
  std::size_t steps_per_unit = 100;
  std::optional<std::size_t> particles;
  std::uint64_t seed = 0;
  std::optional<double> sigma;
  bool deterministic = false;
  std::string ode_method = "rk4";
  bool unscaled_score = false;
  double t_begin = 0.0;
  double t_end = 1.0;
};

int run_generate(const GenerateArgs& a) {
  const fs::path dir(a.model);
  json model_config = json::object();
  if (fs::exists(dir / "config.json")) model_config = read_json(dir / "config.json");

  Model model;
  check(mmsfm_model_load((dir / "flow.ckpt").string().c_str(),
                         (dir / "score.ckpt").string().c_str(), model.out()),
        "loading model");
  Points x0;
  check(mmsfm_matrix_load_csv(a.x0.c_str(), x0.out()), "loading " + a.x0);
  const std::size_t available = mmsfm_matrix_rows(x0.get());
  const std::size_t particles = a.particles.value_or(available);
  if (particles > available) {
    usage_error("--particles " + std::to_string(particles) + " exceeds the " +
                std::to_string(available) + " initial conditions in " + a.x0);
  }
  if (a.ode_method != "rk4" && a.ode_method != "euler") {
    usage_error("--ode-method must be rk4 or euler");
  }

  mmsfm_generate_options o;
  mmsfm_generate_options_init(&o);
  o.t_begin = a.t_begin;
  o.t_end = a.t_end;
  o.steps_per_unit = a.steps_per_unit;
  o.sigma = a.sigma.value_or(model_config.value("sigma", 0.15));
  o.deterministic = a.deterministic;
  o.ode_method = a.ode_method.c_str();
  o.score_is_scaled = !a.unscaled_score;
  o.seed = a.seed;

  Trajectory traj;
  check(mmsfm_generate(model.get(), mmsfm_matrix_data(x0.get()), particles,
                       mmsfm_matrix_cols(x0.get()), &o, traj.out()),
        "generate");
  const fs::path out(a.out);
  if (out.has_parent_path()) make_dir(out.parent_path());
  check(mmsfm_trajectory_save(traj.get(), out.string().c_str()), "writing " + out.string());
  write_json(out.string() + ".config.json", {{"command", "generate"},
                                             {"model", a.model},
                                             {"x0", a.x0},
                                             {"particles", particles},
                                             {"steps-per-unit", a.steps_per_unit},
                                             {"t-begin", a.t_begin},
                                             {"t-end", a.t_end},
                                             {"seed", a.seed},
                                             {"sigma", o.sigma},
                                             {"deterministic", a.deterministic},
                                             {"ode-method", a.ode_method},
                                             {"unscaled-score", a.unscaled_score}});
  return kOk;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string traj;
  std::string data;
  std::string grid;
  std::optional<std::size_t> time_index;
  bool all = false;
  double gaussian_gamma = 0.0;
  double mixture_gamma = 0.0;
  std::string out;
};

json report_json(const mmsfm_metric_report& r) {
  std::vector<double> gammas(r.mixture_gammas, r.mixture_gammas + r.mixture_count);
  return {{"w1", r.w1},
          {"w2_sq", r.w2_sq},
          {"mmd_gaussian", r.mmd_gaussian},
          {"mmd_mixture", r.mmd_mixture},
          {"mmd_gaussian_raw", r.mmd_gaussian_raw},
          {"mmd_mixture_raw", r.mmd_mixture_raw},
          {"samples_generated", r.samples_x},
          {"samples_reference", r.samples_y},
          {"gaussian_gamma", r.gaussian_gamma},
          {"mixture_gammas", gammas}};
}

int run_evaluate(const EvaluateArgs& a) {
  if (a.all == a.time_index.has_value()) usage_error("pass exactly one of --time-index or --all");
  Dataset data;
  const GridInfo grid = load_data_dir(a.data, a.grid, data);
  Trajectory traj;
  check(mmsfm_trajectory_load(a.traj.c_str(), traj.out()), "loading " + a.traj);
  const std::size_t steps = mmsfm_trajectory_steps(traj.get());
  const std::size_t particles = mmsfm_trajectory_particles(traj.get());
  const std::size_t dim = mmsfm_trajectory_dim(traj.get());
  if (steps == 0) throw CliError{kFailure, "trajectory file has no states"};
  if (dim != mmsfm_dataset_dim(data.get())) {
    throw CliError{kFailure, "trajectory and data dimensions differ"};
  }
  const double t_lo = mmsfm_trajectory_time(traj.get(), 0);
  const double t_hi = mmsfm_trajectory_time(traj.get(), steps - 1);

  std::vector<std::size_t> indices;
  if (a.time_index) {
    if (*a.time_index >= grid.times.size()) {
      usage_error("--time-index must be below " + std::to_string(grid.times.size()));
    }
    indices.push_back(*a.time_index);
  } else {
    for (std::size_t i = 1; i < grid.times.size(); ++i) indices.push_back(i);
  }

  std::vector<double> generated(particles * dim);
  json entries = json::array();
  double w1 = 0, w2 = 0, mg = 0, mm = 0;
  for (std::size_t i : indices) {
    const double t = grid.times[i];
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    if (t < t_lo - tol || t > t_hi + tol) {
      throw CliError{kEvalRange, "evaluation time " + std::to_string(t) +
                                     " is outside the trajectory range [" +
                                     std::to_string(t_lo) + ", " + std::to_string(t_hi) + "]"};
    }
    check(mmsfm_trajectory_states_at(traj.get(), t, generated.data(), generated.size()),
          "extracting states");
    mmsfm_metric_report r;
    check(mmsfm_evaluate(generated.data(), particles, mmsfm_dataset_marginal(data.get(), i),
                         mmsfm_dataset_samples(data.get(), i), dim, a.gaussian_gamma,
                         a.mixture_gamma, &r),
          "evaluate");
    json e = {{"time_index", i}, {"time", t}};
    e.update(report_json(r));
    entries.push_back(e);
    w1 += r.w1;
    w2 += r.w2_sq;
    mg += r.mmd_gaussian;
    mm += r.mmd_mixture;
  }
  json report;
  if (a.time_index) {
    report = entries.front();
  } else {
    const double n = static_cast<double>(indices.size());
    report = {{"mean", {{"w1", w1 / n}, {"w2_sq", w2 / n}, {"mmd_gaussian", mg / n}, {"mmd_mixture", mm / n}}},
              {"per_time", entries}};
  }
  report["trajectory"] = a.traj;
  report["data"] = a.data;
  report["grid"] = grid_json(grid);
  if (a.out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_json(a.out, report);
  }
  return kOk;
}

// ---- splines ----

struct SplineArgs {
  std::string points;
  std::string dataset;
  std::string grid;
  std::size_t k = 2;
  std::size_t samples = 50;
  std::string family = "both";
  std::string out;
};

int run_splines(const SplineArgs& a) {
  if (a.points.empty() == a.dataset.empty()) usage_error("pass exactly one of --points or --dataset");
  if (a.family != "both" && a.family != "hermite" && a.family != "natural") {
    usage_error("--family must be both, hermite or natural");
  }
  GridInfo grid;
  std::vector<double> control;
  std::size_t dim = 0;
  if (!a.points.empty()) {
    if (a.grid.empty()) usage_error("--points needs --grid");
    grid = {a.grid, grid_times(a.grid)};
    Points pts;
    check(mmsfm_matrix_load_csv(a.points.c_str(), pts.out()), "loading " + a.points);
    dim = mmsfm_matrix_cols(pts.get());
    if (mmsfm_matrix_rows(pts.get()) != grid.times.size()) {
      throw CliError{kFailure, "point file has " + std::to_string(mmsfm_matrix_rows(pts.get())) +
                                   " rows, grid has " + std::to_string(grid.times.size())};
    }
    const double* p = mmsfm_matrix_data(pts.get());
    control.assign(p, p + grid.times.size() * dim);
  } else {
    Dataset data;
    grid = load_data_dir(a.dataset, a.grid, data);
    dim = mmsfm_dataset_dim(data.get());
    for (std::size_t i = 0; i < grid.times.size(); ++i) {
      const std::size_t n = mmsfm_dataset_samples(data.get(), i);
      const double* m = mmsfm_dataset_marginal(data.get(), i);
      for (std::size_t j = 0; j < dim; ++j) {
        double s = 0;
        for (std::size_t r = 0; r < n; ++r) s += m[r * dim + j];
        control.push_back(n ? s / static_cast<double>(n) : 0.0);
      }
    }
  }
  const std::size_t points = grid.times.size();
  if (a.k < 1 || a.k + 1 > points) usage_error("--k must be in [1, " + std::to_string(points - 1) + "]");
  if (a.samples < 1) usage_error("--samples-per-interval must be positive");

  std::vector<std::string> families;
  if (a.family == "both" || a.family == "natural") families.push_back("natural");
  if (a.family == "both" || a.family == "hermite") families.push_back("hermite");

  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw CliError{kFailure, "cannot write " + a.out};
  out << "t,window_id,family";
  for (std::size_t j = 0; j < dim; ++j) out << ",x_" << j;
  out << '\n';
  char buf[64];
  std::vector<double> x(dim);
  for (std::size_t w = 0; w + a.k < points; ++w) {
    for (const std::string& family : families) {
      Spline s;
      check(mmsfm_spline_fit(family.c_str(), grid.times.data() + w, a.k + 1,
                             control.data() + w * dim, dim, s.out()),
            "spline fit");
      for (std::size_t seg = 0; seg < a.k; ++seg) {
        const double lo = grid.times[w + seg];
        const double hi = grid.times[w + seg + 1];
        const std::size_t count = a.samples + (seg + 1 == a.k ? 1 : 0);
        for (std::size_t n = 0; n < count; ++n) {
          const double t = n == a.samples ? hi : lo + (hi - lo) * static_cast<double>(n) /
                                                         static_cast<double>(a.samples);
          check(mmsfm_spline_eval(s.get(), t, x.data()), "spline eval");
          std::snprintf(buf, sizeof buf, "%.17g", t);
          out << buf << ',' << w << ',' << family;
          for (double v : x) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
          }
          out << '\n';
        }
      }
    }
  }
  if (!out) throw CliError{kFailure, "write failed: " + a.out};
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-marginal stochastic flow matching"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* cs = app.add_subcommand("synth", "Write a synthetic Gaussian-sequence dataset");
  cs->add_option("--dataset", synth.dataset, "s-shape or alpha-shape")->capture_default_str();
  cs->add_option("--grid", synth.grid, "T1, T2, T3 or U<n>")->capture_default_str();
  cs->add_option("--seed", synth.seed)->capture_default_str();
  cs->add_option("--samples", synth.samples, "Samples per marginal")->capture_default_str();
  cs->add_option("--pool", synth.pool, "Held-out initial conditions")->capture_default_str();
  cs->add_option("--std", synth.std)->capture_default_str()->check(CLI::PositiveNumber);
  cs->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs train;
  std::size_t hold_out = 0;
  auto* ct = app.add_subcommand("train", "Train flow and score networks");
  ct->add_option("--data", train.data, "Data directory (marginals.csv, grid.json)")->required();
  ct->add_option("--grid", train.grid, "Override the stored grid");
  ct->add_option("--out", train.out, "Output directory")->required();
  ct->add_option("--config", train.config, "JSON file with option defaults");
  ct->add_option("--k", train.k, "Intervals per window")->capture_default_str();
  ct->add_option("--sigma", train.sigma)->capture_default_str();
  ct->add_option("--steps", train.steps, "Optimizer updates")->capture_default_str();
  ct->add_option("--lr", train.lr)->capture_default_str();
  ct->add_option("--batch", train.batch, "Samples per window")->capture_default_str();
  auto* hold = ct->add_option("--hold-out", hold_out, "Marginal index left out of training");
  ct->add_option("--seed", train.seed)->capture_default_str();
  ct->add_option("--schedule", train.schedule, "window-local or global")->capture_default_str();
  ct->add_option("--spline", train.spline, "hermite or natural")->capture_default_str();
  ct->add_option("--weight-decay", train.weight_decay)->capture_default_str();
  ct->add_option("--hidden-width", train.width)->capture_default_str();
  ct->add_option("--hidden-layers", train.layers)->capture_default_str();

  GenerateArgs gen;
  std::size_t particles = 0;
  double sigma = 0.0;
  auto* cg = app.add_subcommand("generate", "Integrate trajectories from initial conditions");
  cg->add_option("--model", gen.model, "Training output directory")->required();
  cg->add_option("--x0", gen.x0, "Initial conditions CSV")->required();
  cg->add_option("--out", gen.out, "Trajectory CSV")->required();
  cg->add_option("--steps-per-unit", gen.steps_per_unit)->capture_default_str();
  auto* part = cg->add_option("--particles", particles, "Use the first N initial conditions");
  cg->add_option("--seed", gen.seed)->capture_default_str();
  auto* sig = cg->add_option("--sigma", sigma, "Diffusion (default: training sigma)");
  cg->add_flag("--deterministic", gen.deterministic, "Integrate the flow ODE only");
  cg->add_option("--ode-method", gen.ode_method, "rk4 or euler")->capture_default_str();
  cg->add_flag("--unscaled-score", gen.unscaled_score, "Score network outputs the raw score");
  cg->add_option("--t-begin", gen.t_begin)->capture_default_str();
  cg->add_option("--t-end", gen.t_end)->capture_default_str();

  EvaluateArgs eval;
  std::size_t time_index = 0;
  auto* ce = app.add_subcommand("evaluate", "Compare generated states with data marginals");
  ce->add_option("--traj", eval.traj, "Trajectory CSV")->required();
  ce->add_option("--data", eval.data, "Data directory")->required();
  ce->add_option("--grid", eval.grid, "Override the stored grid");
  auto* ti = ce->add_option("--time-index", time_index, "Marginal to evaluate");
  ce->add_flag("--all", eval.all, "Evaluate every marginal after the first");
  ce->add_option("--gaussian-gamma", eval.gaussian_gamma, "0 = median heuristic")->capture_default_str();
  ce->add_option("--mixture-gamma", eval.mixture_gamma, "Base gamma, 0 = median heuristic")
      ->capture_default_str();
  ce->add_option("--out", eval.out, "Report JSON (default stdout)");

  SplineArgs spl;
  auto* cp = app.add_subcommand("splines", "Dense samples of rolling-window splines");
  cp->add_option("--points", spl.points, "Control points CSV, one row per grid time");
  cp->add_option("--dataset", spl.dataset, "Data directory; marginal means are the control points");
  cp->add_option("--grid", spl.grid, "Grid name");
  cp->add_option("--k", spl.k)->capture_default_str();
  cp->add_option("--samples-per-interval", spl.samples)->capture_default_str();
  cp->add_option("--family", spl.family, "both, hermite or natural")->capture_default_str();
  cp->add_option("--out", spl.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*cs) return run_synth(synth);
    if (*ct) {
      apply_config(*ct, train.config);
      if (hold->count() > 0) train.hold_out = hold_out;
      return run_train(train);
    }
    if (*cg) {
      if (part->count() > 0) gen.particles = particles;
      if (sig->count() > 0) gen.sigma = sigma;
      return run_generate(gen);
    }
    if (*ce) {
      if (ti->count() > 0) eval.time_index = time_index;
      return run_evaluate(eval);
    }
    if (*cp) return run_splines(spl);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
