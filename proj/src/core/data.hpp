#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace mmsfm {

/// Normalised observation times 0 = t_0 < ... < t_M = 1.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times);

  static TimeGrid uniform(std::size_t points);

  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  double operator[](std::size_t i) const { return times_[i]; }
  double interval(std::size_t i) const { return times_[i + 1] - times_[i]; }
  std::vector<double> intervals() const;

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> times_;
};

struct NamedGrid {
  std::string name;
  TimeGrid grid;
};

/// The three seven-point schedules T1, T2 and T3.
std::vector<NamedGrid> builtin_grids();

/// "T1", "T2", "T3" or "U<n>" for n uniform points. Throws invalid_input.
TimeGrid builtin_grid(const std::string& name);

/// Human-readable list of accepted grid names.
std::string builtin_grid_names();

/// One sample batch per grid time plus a pool of extra draws from the first
/// marginal used as initial conditions for generation.
struct MarginalDataset {
  TimeGrid grid;
  std::vector<Matrix> marginals;
  Matrix initial_pool;

  std::size_t dim() const { return marginals.empty() ? 0 : marginals.front().cols(); }
  void validate() const;

  /// Copy with marginal `index` removed (grid and samples).
  MarginalDataset without(std::size_t index) const;
};

struct GaussianSequenceSpec {
  Matrix means;  // one row per grid time
  double std = 1.0;
  std::size_t samples = 200;
  std::size_t pool_samples = 200;
  std::uint64_t seed = 0;
};

/// Canonical S-shaped layout: a sideways sine through x = 0..30.
Matrix s_shape_means();
/// Canonical alpha-shaped layout: a loop whose polyline crosses itself once.
Matrix alpha_shape_means();
/// "s-shape" or "alpha-shape".
Matrix shape_means(const std::string& name);

/// Isotropic Gaussian marginals N(mean_i, std^2 I). The marginals and the
/// initial-condition pool draw from separate substreams of the seed.
MarginalDataset gen_gaussian_sequence(const GaussianSequenceSpec& spec, const TimeGrid& grid);

/// Up to 6 fractional digits, trailing zeros removed ("0", "0.17", "1").
std::string canonical_time(double t);
/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// CSV with header `t,x_0,...,x_{d-1}`, marginals in grid order.
void save_marginals(std::ostream& out, const MarginalDataset& data);
void save_marginals(const std::string& path, const MarginalDataset& data);
/// Rows are grouped by their t column, which must equal the canonical form of
/// a grid time. Errors carry the 1-based line number.
MarginalDataset load_marginals(std::istream& in, const TimeGrid& grid);
MarginalDataset load_marginals(const std::string& path, const TimeGrid& grid);

/// Plain point CSV with header `x_0,...,x_{d-1}`.
void save_points(const std::string& path, const Matrix& points);
Matrix load_points(const std::string& path);

}  // namespace mmsfm
