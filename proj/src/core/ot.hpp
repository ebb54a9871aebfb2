#pragma once

#include <span>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace mmsfm {

/// Snapshot samples observed at one time.
struct SampleBatch {
  Matrix points;
  double time = 0.0;
};

/// Transport plan between two weighted point sets.
struct CouplingPlan {
  Matrix matrix;
  std::vector<double> row_marginal;
  std::vector<double> col_marginal;

  double cost(const Matrix& cost_matrix) const;
};

/// k+1 index-aligned batches: row n of every batch forms one tuple z.
struct AlignedWindow {
  std::vector<Matrix> batches;
  std::vector<double> times;

  std::size_t size() const { return batches.empty() ? 0 : batches.front().rows(); }
  std::size_t dim() const { return batches.empty() ? 0 : batches.front().cols(); }
};

/// Coordinates beyond this magnitude are rejected before squaring.
inline constexpr double kMaxCoordinate = 1e6;

/// C[i][j] = |a_i - b_j|^2.
Matrix cost_matrix(const Matrix& a, const Matrix& b);

/// Minimum-cost perfect matching on a square cost matrix. Returns the column
/// assigned to each row.
std::vector<std::size_t> linear_assignment(const Matrix& cost);

/// Exact optimal plan for arbitrary nonnegative weights summing to 1.
/// Uniform square problems go through linear_assignment, everything else
/// through a transportation simplex.
CouplingPlan exact_plan(const Matrix& cost, std::span<const double> row_weights,
                        std::span<const double> col_weights);

/// Exact plan with uniform weights 1/rows and 1/cols.
CouplingPlan exact_plan(const Matrix& cost);

/// Row-normalised plan: entry (i, j) is the probability of j given i.
Matrix conditional_plan(const CouplingPlan& plan);

/// Draws `count` (row, col) index pairs from the plan, with replacement.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(const CouplingPlan& plan,
                                                              std::size_t count, Rng& rng);

/// Draws one column index per row of `row_stochastic`, for the given rows.
std::vector<std::size_t> sample_conditional(const Matrix& row_stochastic,
                                            std::span<const std::size_t> rows, Rng& rng);

/// Markov-chain alignment of k+1 batches: the first pair is drawn jointly from
/// its exact plan, each later batch conditionally on the previous aligned one.
/// Produces `count` tuples (defaults to the first batch's size).
AlignedWindow sample_aligned_window(std::span<const SampleBatch> batches, Rng& rng,
                                    std::size_t count = 0);

}  // namespace mmsfm
