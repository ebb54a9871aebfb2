#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace mmsfm {

/// Control points for a vector-valued interpolating curve: one row of
/// `values` per knot time.
struct Knots {
  std::vector<double> times;
  Matrix values;

  /// Throws invalid_input unless times are strictly increasing (gap >= 1e-9),
  /// row counts match and every entry is finite.
  void validate() const;
};

enum class SplineFamily { monotone_hermite, natural_cubic };

const char* to_string(SplineFamily family);
SplineFamily spline_family_from_string(const std::string& name);

/// Piecewise cubic S_i(t) = a (t - t_i)^3 + b (t - t_i)^2 + c (t - t_i) + d.
/// Coefficients are stored per (interval, dimension), contiguous in dimension.
class PiecewiseCubic {
 public:
  using Coeffs = std::array<double, 4>;  // a, b, c, d

  PiecewiseCubic(std::vector<double> times, std::size_t dim, std::vector<Coeffs> coeffs);

  std::size_t intervals() const noexcept { return times_.size() - 1; }
  std::size_t dim() const noexcept { return dim_; }
  double t_begin() const noexcept { return times_.front(); }
  double t_end() const noexcept { return times_.back(); }
  const std::vector<double>& times() const noexcept { return times_; }

  const Coeffs& coeffs(std::size_t interval, std::size_t dimension) const {
    return coeffs_[interval * dim_ + dimension];
  }

  /// Index of the interval active at t. Throws out_of_range outside the knots.
  std::size_t locate(double t) const;

  void eval(double t, std::span<double> out) const;
  std::vector<double> eval(double t) const;
  void eval_derivative(double t, std::span<double> out) const;
  std::vector<double> eval_derivative(double t) const;

 private:
  std::vector<double> times_;
  std::size_t dim_;
  std::vector<Coeffs> coeffs_;
};

/// Cubic Hermite spline with Fritsch-Carlson (weighted harmonic mean) interior
/// tangents and one-sided secant tangents at the two ends.
PiecewiseCubic fit_monotone_hermite(const Knots& knots);

/// C2 spline with zero second derivative at both ends.
PiecewiseCubic fit_natural_cubic(const Knots& knots);

PiecewiseCubic fit_spline(SplineFamily family, const Knots& knots);

}  // namespace mmsfm
