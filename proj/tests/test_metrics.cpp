#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metrics.hpp"
#include "rng.hpp"

using namespace mmsfm;

namespace {

Matrix random_points(Rng& rng, std::size_t n, std::size_t d) {
  Matrix m(n, d);
  for (double& v : m.data()) v = standard_normal(rng);
  return m;
}

double brute_force(const Matrix& x, const Matrix& y, int p) {
  std::vector<std::size_t> perm(x.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      double d2 = 0;
      for (std::size_t k = 0; k < x.cols(); ++k) d2 += std::pow(x(i, k) - y(perm[i], k), 2);
      s += p == 1 ? std::sqrt(d2) : d2;
    }
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / double(x.rows());
}

double naive_mmd(const Matrix& x, const Matrix& y, double gamma) {
  auto k = [&](const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    double d2 = 0;
    for (std::size_t q = 0; q < a.cols(); ++q) d2 += std::pow(a(i, q) - b(j, q), 2);
    return std::exp(-gamma * d2);
  };
  double xx = 0, yy = 0, xy = 0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.rows(); ++j) xx += k(x, i, x, j);
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.rows(); ++j) yy += k(y, i, y, j);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < y.rows(); ++j) xy += k(x, i, y, j);
  const double n = x.rows(), m = y.rows();
  return xx / (n * n) + yy / (m * m) - 2 * xy / (n * m);
}

Matrix scaled(const Matrix& m, double c) {
  Matrix out = m;
  for (double& v : out.data()) v *= c;
  return out;
}

}  // namespace

TEST(Wasserstein, TrivialCases) {
  Rng rng(1);
  const Matrix x = random_points(rng, 7, 2);
  EXPECT_NEAR(wasserstein(x, x, 1), 0.0, 1e-12);
  EXPECT_NEAR(wasserstein(x, x, 2), 0.0, 1e-12);
  EXPECT_NEAR(wasserstein(Matrix{{0, 0}}, Matrix{{3, 4}}, 1), 5.0, 1e-12);
  EXPECT_NEAR(wasserstein(Matrix{{0, 0}}, Matrix{{3, 4}}, 2), 25.0, 1e-12);
  EXPECT_THROW(wasserstein(Matrix(0, 2), x, 1), Error);
  EXPECT_THROW(wasserstein(x, x, 3), Error);
}

TEST(Wasserstein, MatchesPermutationOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 6;
    const Matrix x = random_points(rng, n, 2), y = random_points(rng, n, 2);
    EXPECT_NEAR(wasserstein(x, y, 1), brute_force(x, y, 1), 1e-10);
    EXPECT_NEAR(wasserstein(x, y, 2), brute_force(x, y, 2), 1e-10);
  }
}

TEST(Wasserstein, UnequalSizes) {
  // Two points against one: every mass moves to the single target.
  const double w = wasserstein(Matrix{{0.0}, {2.0}}, Matrix{{1.0}}, 1);
  EXPECT_NEAR(w, 1.0, 1e-12);
}

TEST(Wasserstein, SymmetryScaleTriangle) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix x = random_points(rng, 5, 2), y = random_points(rng, 5, 2), z = random_points(rng, 5, 2);
    EXPECT_NEAR(wasserstein(x, y, 1), wasserstein(y, x, 1), 1e-10);
    EXPECT_NEAR(wasserstein(x, y, 2), wasserstein(y, x, 2), 1e-10);
    EXPECT_LE(wasserstein(x, z, 1), wasserstein(x, y, 1) + wasserstein(y, z, 1) + 1e-8);
    const double c = 2.5;
    EXPECT_NEAR(wasserstein(scaled(x, c), scaled(y, c), 1), c * wasserstein(x, y, 1), 1e-10);
    EXPECT_NEAR(wasserstein(scaled(x, c), scaled(y, c), 2), c * c * wasserstein(x, y, 2), 1e-9);
  }
}

TEST(Mmd, SingletonClosedForm) {
  const Matrix x{{0.0, 1.0}}, y{{2.0, -1.0}};
  const double g = 0.3;
  EXPECT_NEAR(mmd(x, y, Kernel::gaussian(g)), 2 - 2 * std::exp(-g * 8.0), 1e-12);
  EXPECT_NEAR(mmd(x, x, Kernel::gaussian(g)), 0.0, 1e-12);
}

TEST(Mmd, MatchesNaiveDoubleLoop) {
  Rng rng(4);
  const Matrix x = random_points(rng, 50, 3), y = random_points(rng, 50, 3);
  EXPECT_NEAR(mmd(x, y, Kernel::gaussian(0.7)), naive_mmd(x, y, 0.7), 1e-10);
  const double mix = (naive_mmd(x, y, 0.5) + naive_mmd(x, y, 2.0)) / 2;
  EXPECT_NEAR(mmd(x, y, Kernel::mixture({0.5, 2.0})), mix, 1e-10);
  EXPECT_NEAR(mmd(x, y, Kernel::gaussian(0.7)), mmd(y, x, Kernel::gaussian(0.7)), 1e-10);
}

TEST(Mmd, RejectsBadInput) {
  const Matrix x{{1.0}};
  EXPECT_THROW(mmd(x, x, Kernel::gaussian(0.0)), Error);
  EXPECT_THROW(mmd(x, x, Kernel::gaussian(-1.0)), Error);
  EXPECT_THROW(mmd(Matrix(0, 1), x, Kernel::gaussian(1.0)), Error);
}

TEST(Report, ConsistentWithDirectCalls) {
  Rng rng(5);
  const Matrix x = random_points(rng, 30, 2), y = random_points(rng, 40, 2);
  const auto r = evaluate_metrics(x, y);
  EXPECT_NEAR(r.w2_sq, wasserstein(x, y, 2), 1e-12);
  EXPECT_NEAR(r.w1, wasserstein(x, y, 1), 1e-12);
  const double g = median_heuristic_gamma(x, y);
  EXPECT_EQ(r.gaussian_gamma, g);
  ASSERT_EQ(r.mixture_gammas.size(), kMixtureMultipliers.size());
  for (std::size_t i = 0; i < kMixtureMultipliers.size(); ++i)
    EXPECT_EQ(r.mixture_gammas[i], kMixtureMultipliers[i] * g);
  EXPECT_NEAR(r.mmd_gaussian_raw, mmd(x, y, Kernel::gaussian(g)), 1e-12);
  EXPECT_EQ(r.samples_x, 30u);
  EXPECT_EQ(r.samples_y, 40u);

  const auto self = evaluate_metrics(x, x);
  EXPECT_NEAR(self.w1, 0, 1e-12);
  EXPECT_NEAR(self.w2_sq, 0, 1e-12);
  EXPECT_NEAR(self.mmd_gaussian, 0, 1e-12);
  EXPECT_NEAR(self.mmd_mixture, 0, 1e-12);
  EXPECT_GE(self.mmd_gaussian, 0.0);

  const auto sym = evaluate_metrics(y, x);
  EXPECT_NEAR(sym.w1, r.w1, 1e-10);
  EXPECT_NEAR(sym.mmd_mixture, r.mmd_mixture, 1e-10);

  const auto fixed = evaluate_metrics(x, y, {0.25, 0.5});
  EXPECT_EQ(fixed.gaussian_gamma, 0.25);
  EXPECT_EQ(fixed.mixture_gammas[2], 0.5);
}
