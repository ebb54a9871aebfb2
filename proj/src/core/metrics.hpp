#pragma once

#include <vector>

#include "matrix.hpp"

namespace mmsfm {

/// Exact empirical Wasserstein cost with uniform weights. p = 1 uses the
/// Euclidean cost; p = 2 uses the squared Euclidean cost and returns W2^2.
double wasserstein(const Matrix& x, const Matrix& y, int p);

/// Gaussian kernel exp(-gamma |x - y|^2), or the unweighted mean of several.
struct Kernel {
  std::vector<double> gammas;

  static Kernel gaussian(double gamma) { return Kernel{{gamma}}; }
  static Kernel mixture(std::vector<double> gammas) { return Kernel{std::move(gammas)}; }
};

/// Biased (V-statistic) squared MMD: mean k(X,X) + mean k(Y,Y) - 2 mean k(X,Y).
double mmd(const Matrix& x, const Matrix& y, const Kernel& kernel);

/// 1 / median pairwise squared distance over the pooled sample.
double median_heuristic_gamma(const Matrix& x, const Matrix& y);

/// Multipliers applied to the median-heuristic gamma for the mixture kernel.
inline const std::vector<double> kMixtureMultipliers{0.25, 0.5, 1.0, 2.0, 4.0};

struct MetricOptions {
  double gaussian_gamma = 0.0;      // <= 0 selects the median heuristic
  double mixture_base_gamma = 0.0;  // <= 0 selects the median heuristic
};

struct MetricReport {
  double w1 = 0.0;
  double w2_sq = 0.0;
  double mmd_gaussian = 0.0;  // clamped at 0
  double mmd_mixture = 0.0;   // clamped at 0
  double mmd_gaussian_raw = 0.0;
  double mmd_mixture_raw = 0.0;
  std::size_t samples_x = 0;
  std::size_t samples_y = 0;
  double gaussian_gamma = 0.0;
  std::vector<double> mixture_gammas;
};

MetricReport evaluate_metrics(const Matrix& x, const Matrix& y, const MetricOptions& options = {});

}  // namespace mmsfm
