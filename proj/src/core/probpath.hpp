#pragma once

#include <span>
#include <string>
#include <vector>

#include "spline.hpp"

namespace mmsfm {

enum class ScheduleMode { global, window_local };

const char* to_string(ScheduleMode mode);
ScheduleMode schedule_mode_from_string(const std::string& name);

/// Brownian-bridge standard deviation profile with constant diffusion sigma.
/// In window_local mode the bridge is pinned at `window_begin`/`window_end`,
/// in global mode at 0 and 1.
struct SigmaSchedule {
  ScheduleMode mode = ScheduleMode::window_local;
  double sigma = 0.15;
  double window_begin = 0.0;
  double window_end = 1.0;
  double sigma_min = 1e-4;
  bool floor_enabled = true;

  void validate() const;
  double domain_begin() const { return mode == ScheduleMode::global ? 0.0 : window_begin; }
  double domain_end() const { return mode == ScheduleMode::global ? 1.0 : window_end; }
};

struct SigmaValue {
  double value;
  double derivative;
};

/// sigma_t and d sigma_t / dt. With the floor enabled, sigma_t never drops
/// below sigma_min and the derivative is reported as 0 where the floor binds.
SigmaValue sigma_at(const SigmaSchedule& schedule, double t);

/// lambda(t) = 2 sigma_t / g^2 with g = sigma.
double lambda_weight(const SigmaSchedule& schedule, double t);

/// Conditional path N(mu_t, sigma_t^2 I) with mu_t a spline through one tuple.
class GaussianPath {
 public:
  GaussianPath(PiecewiseCubic mean, SigmaSchedule schedule);

  const PiecewiseCubic& mean() const noexcept { return mean_; }
  const SigmaSchedule& schedule() const noexcept { return schedule_; }
  std::size_t dim() const noexcept { return mean_.dim(); }

  /// x = mu_t + sigma_t * eps
  void sample_x(double t, std::span<const double> eps, std::span<double> out) const;
  std::vector<double> sample_x(double t, std::span<const double> eps) const;

  /// (sigma_t' / sigma_t)(x - mu_t) + mu_t'
  void flow_target(double t, std::span<const double> x, std::span<double> out) const;
  std::vector<double> flow_target(double t, std::span<const double> x) const;

  /// (mu_t - x) / sigma_t^2
  void score_target(double t, std::span<const double> x, std::span<double> out) const;
  std::vector<double> score_target(double t, std::span<const double> x) const;

 private:
  void check_time(double t) const;
  SigmaValue nonsingular_sigma(double t) const;

  PiecewiseCubic mean_;
  SigmaSchedule schedule_;
};

}  // namespace mmsfm
