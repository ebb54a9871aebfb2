#include "probpath.hpp"

#include <cmath>

namespace mmsfm {

const char* to_string(ScheduleMode mode) {
  return mode == ScheduleMode::global ? "global" : "window_local";
}

ScheduleMode schedule_mode_from_string(const std::string& name) {
  if (name == "global") return ScheduleMode::global;
  if (name == "window_local" || name == "window-local" || name == "local") {
    return ScheduleMode::window_local;
  }
  fail(Errc::invalid_input, "unknown schedule mode '" + name + "' (expected global or window_local)");
}

void SigmaSchedule::validate() const {
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
  require(window_begin < window_end, "schedule window must satisfy a < b");
  require(sigma_min > 0.0 && sigma_min < sigma, "sigma_min must be positive and below sigma");
}

SigmaValue sigma_at(const SigmaSchedule& s, double t) {
  const double lo = s.domain_begin();
  const double hi = s.domain_end();
  if (!(t >= lo && t <= hi)) {
    fail(Errc::out_of_range, "sigma_at: t=" + std::to_string(t) + " outside [" +
                                 std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  const double span = hi - lo;
  const double r = (t - lo) / span;
  const double q = r * (1.0 - r);
  const double value = s.sigma * std::sqrt(std::max(q, 0.0));
  if (s.floor_enabled && value <= s.sigma_min) return {s.sigma_min, 0.0};
  if (q <= 0.0) return {0.0, 0.0};
  // d/dr sqrt(r(1-r)) = (1 - 2r) / (2 sqrt(r(1-r))), chained with dr/dt = 1/span
  const double derivative = s.sigma * (1.0 - 2.0 * r) / (2.0 * std::sqrt(q)) / span;
  return {value, derivative};
}

double lambda_weight(const SigmaSchedule& s, double t) {
  const double sigma_t = sigma_at(s, t).value;
  return 2.0 * sigma_t / (s.sigma * s.sigma);
}

GaussianPath::GaussianPath(PiecewiseCubic mean, SigmaSchedule schedule)
    : mean_(std::move(mean)), schedule_(schedule) {
  schedule_.validate();
  if (schedule_.mode == ScheduleMode::window_local) {
    require(mean_.t_begin() <= schedule_.window_begin && mean_.t_end() >= schedule_.window_end,
            "path mean must cover the schedule window");
  }
}

void GaussianPath::check_time(double t) const {
  // The mean spline rejects times outside its knots; the schedule rejects
  // times outside its bridge.
  mean_.locate(t);
  (void)sigma_at(schedule_, t);
}

SigmaValue GaussianPath::nonsingular_sigma(double t) const {
  const SigmaValue s = sigma_at(schedule_, t);
  if (!schedule_.floor_enabled && s.value < schedule_.sigma_min) {
    fail(Errc::singular_variance,
         "sigma_t=" + std::to_string(s.value) + " at t=" + std::to_string(t) +
             " is below sigma_min with the floor disabled");
  }
  return s;
}

void GaussianPath::sample_x(double t, std::span<const double> eps, std::span<double> out) const {
  require(eps.size() == dim() && out.size() == dim(), "sample_x: dimension mismatch");
  check_time(t);
  const double sigma_t = sigma_at(schedule_, t).value;
  mean_.eval(t, out);
  for (std::size_t j = 0; j < out.size(); ++j) {
    require(std::isfinite(eps[j]), "sample_x: eps must be finite");
    out[j] += sigma_t * eps[j];
  }
}

std::vector<double> GaussianPath::sample_x(double t, std::span<const double> eps) const {
  std::vector<double> out(dim());
  sample_x(t, eps, out);
  return out;
}

void GaussianPath::flow_target(double t, std::span<const double> x, std::span<double> out) const {
  require(x.size() == dim() && out.size() == dim(), "flow_target: dimension mismatch");
  check_time(t);
  const SigmaValue s = nonsingular_sigma(t);
  const auto mu = mean_.eval(t);
  mean_.eval_derivative(t, out);
  const double ratio = s.derivative / s.value;
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += ratio * (x[j] - mu[j]);
}

std::vector<double> GaussianPath::flow_target(double t, std::span<const double> x) const {
  std::vector<double> out(dim());
  flow_target(t, x, out);
  return out;
}

void GaussianPath::score_target(double t, std::span<const double> x, std::span<double> out) const {
  require(x.size() == dim() && out.size() == dim(), "score_target: dimension mismatch");
  check_time(t);
  const SigmaValue s = nonsingular_sigma(t);
  mean_.eval(t, out);
  const double inv_var = 1.0 / (s.value * s.value);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (out[j] - x[j]) * inv_var;
}

std::vector<double> GaussianPath::score_target(double t, std::span<const double> x) const {
  std::vector<double> out(dim());
  score_target(t, x, out);
  return out;
}

}  // namespace mmsfm
