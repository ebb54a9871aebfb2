#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "data.hpp"
#include "nn.hpp"
#include "ot.hpp"
#include "probpath.hpp"
#include "spline.hpp"

namespace mmsfm {

struct TrainConfig {
  std::size_t window = 2;  // k: each mini-flow spans k + 1 marginals
  double sigma = 0.15;
  std::size_t batch_size = 120;  // per window, divisible by k
  std::size_t steps = 2500;      // optimizer updates
  double learning_rate = 1e-4;
  double weight_decay = 1e-2;
  ScheduleMode schedule = ScheduleMode::window_local;
  SplineFamily spline = SplineFamily::monotone_hermite;
  std::uint64_t seed = 0;
  std::optional<std::size_t> held_out;  // index into the full grid
  std::vector<std::size_t> hidden = {64, 64};
  double sigma_min = 1e-4;

  /// Checks the config against a grid with `points` marginals.
  void validate(std::size_t points) const;
};

/// Marginal index range [first, first + k] of one mini-flow.
struct Window {
  std::size_t first;
  std::size_t last;
};

/// Windows i = 0..M-k over M + 1 points.
std::vector<Window> rolling_windows(std::size_t points, std::size_t k);

/// `count / k` uniform draws inside each of the k intervals spanned by
/// `knots`, kept 1e-6 of the interval length away from both ends. Draws are
/// ordered interval by interval.
std::vector<double> stratified_times(std::span<const double> knots, std::size_t count, Rng& rng);

/// What the loss needs besides the networks.
struct PathSettings {
  double sigma = 0.15;
  ScheduleMode schedule = ScheduleMode::window_local;
  SplineFamily spline = SplineFamily::monotone_hermite;
  double sigma_min = 1e-4;
  bool floor_enabled = true;
};

/// One training batch for a mini-flow: aligned tuples, a time per tuple and
/// the standard-normal noise per tuple.
struct WindowBatch {
  AlignedWindow z;
  std::vector<double> t;
  Matrix eps;
};

/// Closed-form regression inputs and targets for a batch.
struct RegressionTargets {
  Matrix x;     // sampled x ~ p_t(x | z)
  Matrix flow;  // u_t(x | z)
  std::vector<double> lambda;
};

RegressionTargets regression_targets(const WindowBatch& batch, const PathSettings& settings);

/// Mean over rows of |net(x, t) - target|^2. Adds the parameter gradient to
/// `grad` when it is non-empty.
double regression_loss(const Mlp& net, const Matrix& x, std::span<const double> t,
                       const Matrix& target, std::span<double> grad = {});

struct WindowLoss {
  double flow_loss = 0.0;
  double score_loss = 0.0;
  std::vector<double> flow_grad;
  std::vector<double> score_grad;
};

/// Flow loss mean |v(x, t) - u_t(x | z)|^2 and scaled score loss
/// mean |lambda(t) s(x, t) + eps|^2 with their parameter gradients.
WindowLoss window_loss(const WindowBatch& batch, const Mlp& flow, const Mlp& score,
                       const PathSettings& settings);

struct LossRecord {
  std::size_t step;
  std::size_t window;
  double flow_loss;
  double score_loss;
};

struct TrainResult {
  Mlp flow;
  Mlp score;
  AdamW flow_optimizer;
  AdamW score_optimizer;
  std::vector<LossRecord> history;
  std::size_t windows_per_sweep = 0;
  std::size_t spline_segments = 0;  // total fitted spline intervals
};

/// Draws a window batch: resamples `batch_size` points per marginal with
/// replacement, aligns them, and draws stratified times and noise.
WindowBatch draw_window_batch(const MarginalDataset& data, const Window& window,
                              std::size_t batch_size, Rng& rng);

using TrainObserver = std::function<void(const LossRecord&)>;

/// Rolling-window score and flow matching. Sweeps windows i = 0..M-k in
/// order, one optimizer update per window, until `steps` updates are done.
TrainResult train(const MarginalDataset& data, const TrainConfig& config,
                  const TrainObserver& observer = {});

}  // namespace mmsfm
