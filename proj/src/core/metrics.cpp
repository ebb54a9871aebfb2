#include "metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ot.hpp"

namespace mmsfm {

namespace {

void check_pair(const Matrix& x, const Matrix& y) {
  require(x.rows() > 0 && y.rows() > 0, "metrics need non-empty sample sets");
  require(x.cols() == y.cols(), "metrics need samples of equal dimension");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Mean kernel value over all pairs.
double mean_kernel(const Matrix& a, const Matrix& b, const Kernel& kernel) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double d2 = squared_distance(a.row(i), b.row(j));
      double k = 0.0;
      for (double g : kernel.gammas) k += std::exp(-g * d2);
      total += k / static_cast<double>(kernel.gammas.size());
    }
  }
  return total / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

}  // namespace

double wasserstein(const Matrix& x, const Matrix& y, int p) {
  check_pair(x, y);
  require(p == 1 || p == 2, "wasserstein supports p = 1 or p = 2");
  Matrix cost = cost_matrix(x, y);
  if (p == 1) {
    for (double& c : cost.data()) c = std::sqrt(c);
  }
  return exact_plan(cost).cost(cost);
}

double mmd(const Matrix& x, const Matrix& y, const Kernel& kernel) {
  check_pair(x, y);
  require(!kernel.gammas.empty(), "kernel needs at least one bandwidth");
  for (double g : kernel.gammas) require(std::isfinite(g) && g > 0.0, "kernel gamma must be positive");
  return mean_kernel(x, x, kernel) + mean_kernel(y, y, kernel) - 2.0 * mean_kernel(x, y, kernel);
}

double median_heuristic_gamma(const Matrix& x, const Matrix& y) {
  check_pair(x, y);
  std::vector<const double*> rows;
  for (std::size_t i = 0; i < x.rows(); ++i) rows.push_back(x.row(i).data());
  for (std::size_t i = 0; i < y.rows(); ++i) rows.push_back(y.row(i).data());
  const std::size_t d = x.cols();
  std::vector<double> d2;
  d2.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      d2.push_back(squared_distance({rows[i], d}, {rows[j], d}));
    }
  }
  if (d2.empty()) return 1.0;
  auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  double median = *mid;
  if (d2.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(d2.begin(), mid));
  }
  return median > 0.0 ? 1.0 / median : 1.0;
}

MetricReport evaluate_metrics(const Matrix& x, const Matrix& y, const MetricOptions& options) {
  check_pair(x, y);
  MetricReport r;
  r.samples_x = x.rows();
  r.samples_y = y.rows();
  r.w1 = wasserstein(x, y, 1);
  r.w2_sq = wasserstein(x, y, 2);

  double heuristic = 0.0;
  if (options.gaussian_gamma <= 0.0 || options.mixture_base_gamma <= 0.0) {
    heuristic = median_heuristic_gamma(x, y);
  }
  r.gaussian_gamma = options.gaussian_gamma > 0.0 ? options.gaussian_gamma : heuristic;
  const double base = options.mixture_base_gamma > 0.0 ? options.mixture_base_gamma : heuristic;
  for (double m : kMixtureMultipliers) r.mixture_gammas.push_back(m * base);

  r.mmd_gaussian_raw = mmd(x, y, Kernel::gaussian(r.gaussian_gamma));
  r.mmd_mixture_raw = mmd(x, y, Kernel::mixture(r.mixture_gammas));
  r.mmd_gaussian = std::max(r.mmd_gaussian_raw, 0.0);
  r.mmd_mixture = std::max(r.mmd_mixture_raw, 0.0);
  return r;
}

}  // namespace mmsfm
