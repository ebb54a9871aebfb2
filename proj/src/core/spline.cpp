#include "spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mmsfm {

namespace {

constexpr double kMinKnotGap = 1e-9;

// Hermite form on [t_i, t_i + h] with end values y0, y1 and end slopes m0, m1.
PiecewiseCubic::Coeffs hermite_coeffs(double h, double y0, double y1, double m0, double m1) {
  const double delta = (y1 - y0) / h;
  const double b = (3.0 * delta - 2.0 * m0 - m1) / h;
  const double a = (m0 + m1 - 2.0 * delta) / (h * h);
  return {a, b, m0, y0};
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

void Knots::validate() const {
  require(times.size() >= 2, "spline needs at least 2 knots");
  require(values.rows() == times.size(), "knot value rows must match knot times");
  require(values.cols() >= 1, "knot values need at least one dimension");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(times[i]), "knot times must be finite");
    if (i > 0) {
      require(times[i] - times[i - 1] >= kMinKnotGap, "knot times must be strictly increasing");
    }
  }
  for (double v : values.data()) require(std::isfinite(v), "knot values must be finite");
}

const char* to_string(SplineFamily family) {
  return family == SplineFamily::monotone_hermite ? "hermite" : "natural";
}

SplineFamily spline_family_from_string(const std::string& name) {
  if (name == "hermite" || name == "monotone_hermite") return SplineFamily::monotone_hermite;
  if (name == "natural" || name == "natural_cubic") return SplineFamily::natural_cubic;
  fail(Errc::invalid_input, "unknown spline family '" + name + "' (expected hermite or natural)");
}

PiecewiseCubic::PiecewiseCubic(std::vector<double> times, std::size_t dim,
                               std::vector<Coeffs> coeffs)
    : times_(std::move(times)), dim_(dim), coeffs_(std::move(coeffs)) {
  require(times_.size() >= 2, "piecewise cubic needs at least one interval");
  require(coeffs_.size() == intervals() * dim_, "coefficient count mismatch");
}

std::size_t PiecewiseCubic::locate(double t) const {
  if (!(t >= times_.front() && t <= times_.back())) {
    fail(Errc::out_of_range, "spline evaluated at t=" + std::to_string(t) + " outside [" +
                                 std::to_string(times_.front()) + ", " +
                                 std::to_string(times_.back()) + "]");
  }
  // Interval i covers [t_i, t_{i+1}); the last interval is closed on the right.
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - times_.begin());
  i = i == 0 ? 0 : i - 1;
  return std::min(i, intervals() - 1);
}

void PiecewiseCubic::eval(double t, std::span<double> out) const {
  require(out.size() == dim_, "eval output has wrong dimension");
  const std::size_t i = locate(t);
  const double s = t - times_[i];
  for (std::size_t j = 0; j < dim_; ++j) {
    const auto& [a, b, c, d] = coeffs_[i * dim_ + j];
    out[j] = ((a * s + b) * s + c) * s + d;
  }
}

std::vector<double> PiecewiseCubic::eval(double t) const {
  std::vector<double> out(dim_);
  eval(t, out);
  return out;
}

void PiecewiseCubic::eval_derivative(double t, std::span<double> out) const {
  require(out.size() == dim_, "eval_derivative output has wrong dimension");
  const std::size_t i = locate(t);
  const double s = t - times_[i];
  for (std::size_t j = 0; j < dim_; ++j) {
    const auto& [a, b, c, d] = coeffs_[i * dim_ + j];
    out[j] = (3.0 * a * s + 2.0 * b) * s + c;
  }
}

std::vector<double> PiecewiseCubic::eval_derivative(double t) const {
  std::vector<double> out(dim_);
  eval_derivative(t, out);
  return out;
}

PiecewiseCubic fit_monotone_hermite(const Knots& knots) {
  knots.validate();
  const std::size_t n = knots.times.size();
  const std::size_t dim = knots.values.cols();
  const auto& t = knots.times;

  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = t[i + 1] - t[i];

  std::vector<PiecewiseCubic::Coeffs> coeffs((n - 1) * dim);
  std::vector<double> slope(n - 1), tangent(n);
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      slope[i] = (knots.values(i + 1, j) - knots.values(i, j)) / h[i];
    }
    tangent[0] = slope[0];
    tangent[n - 1] = slope[n - 2];
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double left = slope[k - 1];
      const double right = slope[k];
      if (left == 0.0 || right == 0.0 || sign(left) != sign(right)) {
        tangent[k] = 0.0;
        continue;
      }
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      tangent[k] = (w1 + w2) / (w1 / left + w2 / right);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      coeffs[i * dim + j] = hermite_coeffs(h[i], knots.values(i, j), knots.values(i + 1, j),
                                           tangent[i], tangent[i + 1]);
    }
  }
  return PiecewiseCubic(t, dim, std::move(coeffs));
}

PiecewiseCubic fit_natural_cubic(const Knots& knots) {
  knots.validate();
  const std::size_t n = knots.times.size();
  const std::size_t dim = knots.values.cols();
  const auto& t = knots.times;

  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = t[i + 1] - t[i];

  // Second derivatives M_1..M_{n-2} solve a symmetric tridiagonal system;
  // M_0 = M_{n-1} = 0. The Thomas-algorithm factors depend only on h.
  const std::size_t inner = n >= 2 ? n - 2 : 0;
  std::vector<double> diag(inner), upper(inner), rhs(inner), second(n, 0.0);
  std::vector<PiecewiseCubic::Coeffs> coeffs((n - 1) * dim);

  for (std::size_t j = 0; j < dim; ++j) {
    auto x = [&](std::size_t i) { return knots.values(i, j); };
    for (std::size_t r = 0; r < inner; ++r) {
      const std::size_t i = r + 1;
      diag[r] = 2.0 * (h[i - 1] + h[i]);
      upper[r] = h[i];
      rhs[r] = 6.0 * ((x(i + 1) - x(i)) / h[i] - (x(i) - x(i - 1)) / h[i - 1]);
    }
    // forward sweep
    for (std::size_t r = 1; r < inner; ++r) {
      const double lower = h[r];  // sub-diagonal entry of row r is h_{r}
      const double w = lower / diag[r - 1];
      diag[r] -= w * upper[r - 1];
      rhs[r] -= w * rhs[r - 1];
    }
    // back substitution
    std::fill(second.begin(), second.end(), 0.0);
    for (std::size_t r = inner; r-- > 0;) {
      double v = rhs[r];
      if (r + 1 < inner) v -= upper[r] * second[r + 2];
      second[r + 1] = v / diag[r];
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double a = (second[i + 1] - second[i]) / (6.0 * h[i]);
      const double b = 0.5 * second[i];
      const double c = (x(i + 1) - x(i)) / h[i] - h[i] * (2.0 * second[i] + second[i + 1]) / 6.0;
      coeffs[i * dim + j] = {a, b, c, x(i)};
    }
  }
  return PiecewiseCubic(t, dim, std::move(coeffs));
}

PiecewiseCubic fit_spline(SplineFamily family, const Knots& knots) {
  return family == SplineFamily::monotone_hermite ? fit_monotone_hermite(knots)
                                                  : fit_natural_cubic(knots);
}

}  // namespace mmsfm
