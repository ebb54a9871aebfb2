#include "trainer.hpp"

#include <cmath>
#include <string>

namespace mmsfm {

namespace {

constexpr double kInteriorMargin = 1e-6;

SigmaSchedule schedule_for(const PathSettings& s, double begin, double end) {
  SigmaSchedule sched;
  sched.mode = s.schedule;
  sched.sigma = s.sigma;
  sched.window_begin = begin;
  sched.window_end = end;
  sched.sigma_min = s.sigma_min;
  sched.floor_enabled = s.floor_enabled;
  return sched;
}

}  // namespace

void TrainConfig::validate(std::size_t points) const {
  require(window >= 1, "window size k must be at least 1");
  require(points >= 2, "training needs at least 2 marginals");
  require(window <= points - 1, "window size k=" + std::to_string(window) +
                                    " exceeds the number of intervals M=" +
                                    std::to_string(points - 1));
  require(batch_size >= window && batch_size % window == 0,
          "batch size must be a positive multiple of k");
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
  require(sigma_min > 0.0 && sigma_min < sigma, "sigma_min must be in (0, sigma)");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, "learning rate must be positive");
  require(std::isfinite(weight_decay) && weight_decay >= 0.0, "weight decay must be nonnegative");
}

std::vector<Window> rolling_windows(std::size_t points, std::size_t k) {
  require(k >= 1 && points >= k + 1, "rolling_windows: need k >= 1 and k <= M");
  std::vector<Window> out;
  for (std::size_t i = 0; i + k < points; ++i) out.push_back({i, i + k});
  return out;
}

std::vector<double> stratified_times(std::span<const double> knots, std::size_t count, Rng& rng) {
  require(knots.size() >= 2, "stratified_times needs at least one interval");
  const std::size_t k = knots.size() - 1;
  require(count % k == 0, "stratified_times: count " + std::to_string(count) +
                              " is not divisible by k=" + std::to_string(k));
  const std::size_t per = count / k;
  std::vector<double> t;
  t.reserve(count);
  for (std::size_t j = 0; j < k; ++j) {
    const double h = knots[j + 1] - knots[j];
    require(h > 0.0, "stratified_times: knots must be increasing");
    const double lo = knots[j] + kInteriorMargin * h;
    const double width = h * (1.0 - 2.0 * kInteriorMargin);
    for (std::size_t n = 0; n < per; ++n) t.push_back(lo + width * uniform01(rng));
  }
  return t;
}

RegressionTargets regression_targets(const WindowBatch& batch, const PathSettings& settings) {
  const AlignedWindow& z = batch.z;
  const std::size_t b = z.size();
  const std::size_t d = z.dim();
  const std::size_t points = z.batches.size();
  require(points >= 2, "window batch needs at least 2 marginals");
  require(batch.t.size() == b, "window batch needs one time per tuple");
  require(batch.eps.rows() == b && batch.eps.cols() == d, "window batch noise has wrong shape");

  RegressionTargets out{Matrix(b, d), Matrix(b, d), std::vector<double>(b)};
  const SigmaSchedule schedule = schedule_for(settings, z.times.front(), z.times.back());
  Knots knots{z.times, Matrix(points, d)};
  for (std::size_t n = 0; n < b; ++n) {
    for (std::size_t l = 0; l < points; ++l) {
      const auto src = z.batches[l].row(n);
      std::copy(src.begin(), src.end(), knots.values.row(l).begin());
    }
    const GaussianPath path(fit_spline(settings.spline, knots), schedule);
    const double t = batch.t[n];
    path.sample_x(t, batch.eps.row(n), out.x.row(n));
    path.flow_target(t, out.x.row(n), out.flow.row(n));
    out.lambda[n] = lambda_weight(schedule, t);
  }
  return out;
}

double regression_loss(const Mlp& net, const Matrix& x, std::span<const double> t,
                       const Matrix& target, std::span<double> grad) {
  require(target.rows() == x.rows() && target.cols() == net.output_dim(),
          "regression_loss: target shape mismatch");
  Mlp::Tape tape;
  const Matrix y = net.forward(x, t, tape);
  const double inv_b = 1.0 / static_cast<double>(x.rows());
  Matrix dy(y.rows(), y.cols());
  double loss = 0.0;
  for (std::size_t k = 0; k < y.data().size(); ++k) {
    const double r = y.data()[k] - target.data()[k];
    loss += r * r;
    dy.data()[k] = 2.0 * r * inv_b;
  }
  if (!grad.empty()) net.backward(tape, dy, grad);
  return loss * inv_b;
}

WindowLoss window_loss(const WindowBatch& batch, const Mlp& flow, const Mlp& score,
                       const PathSettings& settings) {
  const RegressionTargets targets = regression_targets(batch, settings);
  const std::size_t b = targets.x.rows();

  WindowLoss out;
  out.flow_grad.assign(flow.parameter_count(), 0.0);
  out.score_grad.assign(score.parameter_count(), 0.0);
  out.flow_loss = regression_loss(flow, targets.x, batch.t, targets.flow, out.flow_grad);

  Mlp::Tape tape;
  const Matrix s = score.forward(targets.x, batch.t, tape);
  const double inv_b = 1.0 / static_cast<double>(b);
  Matrix ds(s.rows(), s.cols());
  double loss = 0.0;
  for (std::size_t n = 0; n < b; ++n) {
    const double lambda = targets.lambda[n];
    for (std::size_t j = 0; j < s.cols(); ++j) {
      const double r = lambda * s(n, j) + batch.eps(n, j);
      loss += r * r;
      ds(n, j) = 2.0 * lambda * r * inv_b;
    }
  }
  score.backward(tape, ds, out.score_grad);
  out.score_loss = loss * inv_b;
  return out;
}

WindowBatch draw_window_batch(const MarginalDataset& data, const Window& window,
                              std::size_t batch_size, Rng& rng) {
  std::vector<SampleBatch> batches;
  const std::size_t d = data.dim();
  for (std::size_t i = window.first; i <= window.last; ++i) {
    const Matrix& marginal = data.marginals[i];
    require(marginal.rows() > 0, "marginal " + std::to_string(i) + " has no samples");
    Matrix mb(batch_size, d);
    for (std::size_t n = 0; n < batch_size; ++n) {
      const auto src = marginal.row(uniform_index(rng, marginal.rows()));
      std::copy(src.begin(), src.end(), mb.row(n).begin());
    }
    batches.push_back({std::move(mb), data.grid[i]});
  }
  WindowBatch wb;
  wb.z = sample_aligned_window(batches, rng, batch_size);
  wb.t = stratified_times(wb.z.times, batch_size, rng);
  wb.eps = Matrix(batch_size, d);
  for (double& e : wb.eps.data()) e = standard_normal(rng);
  return wb;
}

TrainResult train(const MarginalDataset& full, const TrainConfig& config,
                  const TrainObserver& observer) {
  full.validate();
  const MarginalDataset data = config.held_out ? full.without(*config.held_out) : full;
  config.validate(data.grid.size());

  const auto windows = rolling_windows(data.grid.size(), config.window);
  const std::size_t d = data.dim();
  Rng rng = substream(config.seed, 0);

  const auto widths = Mlp::default_widths(d, config.hidden);
  TrainResult result;
  result.flow = Mlp::lecun_normal(widths, rng);
  result.score = Mlp::lecun_normal(widths, rng);
  const AdamWConfig adam{config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay};
  result.flow_optimizer = AdamW(result.flow.parameter_count(), adam);
  result.score_optimizer = AdamW(result.score.parameter_count(), adam);
  result.windows_per_sweep = windows.size();
  result.history.reserve(config.steps);

  const PathSettings settings{config.sigma, config.schedule, config.spline, config.sigma_min, true};
  std::size_t step = 0;
  while (step < config.steps) {
    for (std::size_t w = 0; w < windows.size() && step < config.steps; ++w, ++step) {
      const WindowBatch batch = draw_window_batch(data, windows[w], config.batch_size, rng);
      WindowLoss loss = window_loss(batch, result.flow, result.score, settings);
      result.spline_segments += config.batch_size * config.window;
      if (!std::isfinite(loss.flow_loss) || !std::isfinite(loss.score_loss)) {
        fail(Errc::training_diverged,
             "training diverged at step " + std::to_string(step) + " (window " + std::to_string(w) + ")",
             static_cast<long>(step));
      }
      result.flow_optimizer.step(result.flow.parameters(), loss.flow_grad);
      result.score_optimizer.step(result.score.parameters(), loss.score_grad);
      const LossRecord record{step, w, loss.flow_loss, loss.score_loss};
      result.history.push_back(record);
      if (observer) observer(record);
    }
  }
  return result;
}

}  // namespace mmsfm
