#include "ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mmsfm {

namespace {

constexpr double kWeightTol = 1e-9;

void check_weights(std::span<const double> w, std::size_t expected, const char* which) {
  require(w.size() == expected,
          std::string(which) + " weights do not match the cost matrix dimension");
  double sum = 0.0;
  for (double x : w) {
    require(std::isfinite(x) && x >= 0.0, std::string(which) + " weights must be nonnegative");
    sum += x;
  }
  require(std::abs(sum - 1.0) <= kWeightTol, std::string(which) + " weights must sum to 1");
}

bool is_uniform(std::span<const double> w) {
  const double u = 1.0 / static_cast<double>(w.size());
  return std::all_of(w.begin(), w.end(), [u](double x) { return std::abs(x - u) <= 1e-15; });
}

// First index whose cumulative mass exceeds u * total. Zero-mass cells are
// never returned because their cumulative value equals their predecessor's.
std::size_t pick(const std::vector<double>& cumulative, double u) {
  const double target = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it != cumulative.end()) return static_cast<std::size_t>(it - cumulative.begin());
  std::size_t k = cumulative.size() - 1;
  while (k > 0 && cumulative[k] == cumulative[k - 1]) --k;
  return k;
}

// Transportation simplex (MODI) on a dense n x m problem. The basis is kept as
// a spanning tree over n row nodes and m column nodes with n+m-1 cells.
CouplingPlan transport_simplex(const Matrix& cost, std::span<const double> a,
                               std::span<const double> b) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  const std::size_t nodes = n + m;

  struct Cell {
    std::size_t i, j;
    double flow;
  };
  std::vector<Cell> basis;
  basis.reserve(nodes - 1);

  // North-west corner start.
  {
    std::vector<double> s(a.begin(), a.end()), d(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    while (true) {
      const double q = std::min(s[i], d[j]);
      basis.push_back({i, j, q});
      s[i] -= q;
      d[j] -= q;
      if (i == n - 1 && j == m - 1) break;
      if (i == n - 1) {
        ++j;
      } else if (j == m - 1) {
        ++i;
      } else if (s[i] <= d[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  double scale = 0.0;
  for (double c : cost.data()) scale = std::max(scale, std::abs(c));
  const double tol = 1e-12 * std::max(scale, 1.0);

  std::vector<char> is_basic(n * m, 0);
  for (const auto& c : basis) is_basic[c.i * m + c.j] = 1;

  // Row node r is r, column node c is n + c.
  std::vector<std::vector<std::size_t>> adj(nodes);
  std::vector<double> potential(nodes);
  std::vector<char> seen(nodes);
  std::vector<std::size_t> parent_cell(nodes), parent_node(nodes), queue;
  queue.reserve(nodes);

  auto build_adjacency = [&] {
    for (auto& list : adj) list.clear();
    for (std::size_t k = 0; k < basis.size(); ++k) {
      adj[basis[k].i].push_back(k);
      adj[n + basis[k].j].push_back(k);
    }
  };
  auto other = [&](std::size_t cell, std::size_t node) {
    return node < n ? n + basis[cell].j : basis[cell].i;
  };
  // BFS over the basis tree from `root`, recording parents.
  auto traverse = [&](std::size_t root) {
    std::fill(seen.begin(), seen.end(), 0);
    queue.clear();
    queue.push_back(root);
    seen[root] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t node = queue[head];
      for (std::size_t cell : adj[node]) {
        const std::size_t next = other(cell, node);
        if (seen[next]) continue;
        seen[next] = 1;
        parent_cell[next] = cell;
        parent_node[next] = node;
        queue.push_back(next);
      }
    }
  };

  const std::size_t max_iterations = 50 * n * m + 1000;
  for (std::size_t iter = 0;; ++iter) {
    if (iter > max_iterations) {
      fail(Errc::degenerate_plan, "transportation simplex did not converge");
    }
    build_adjacency();
    traverse(0);
    potential[0] = 0.0;
    for (std::size_t k = 1; k < queue.size(); ++k) {
      const std::size_t node = queue[k];
      const Cell& c = basis[parent_cell[node]];
      // u_i + v_j = c_ij along every basic cell
      potential[node] = cost(c.i, c.j) - potential[parent_node[node]];
    }

    double best = -tol;
    std::size_t enter_i = n, enter_j = m;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (is_basic[i * m + j]) continue;
        const double reduced = cost(i, j) - potential[i] - potential[n + j];
        if (reduced < best) {
          best = reduced;
          enter_i = i;
          enter_j = j;
        }
      }
    }
    if (enter_i == n) break;

    // Cycle: entering cell plus the tree path from row enter_i to column enter_j.
    traverse(enter_i);
    std::vector<std::size_t> path;
    for (std::size_t node = n + enter_j; node != enter_i; node = parent_node[node]) {
      path.push_back(parent_cell[node]);
    }
    // path[0] touches column enter_j and loses flow, signs alternate from there.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = path.size();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      if (basis[path[k]].flow < theta) {
        theta = basis[path[k]].flow;
        leaving = k;
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      basis[path[k]].flow += (k % 2 == 0) ? -theta : theta;
    }
    const std::size_t leave_cell = path[leaving];
    is_basic[basis[leave_cell].i * m + basis[leave_cell].j] = 0;
    basis[leave_cell] = {enter_i, enter_j, theta};
    is_basic[enter_i * m + enter_j] = 1;
  }

  CouplingPlan plan{Matrix(n, m), {a.begin(), a.end()}, {b.begin(), b.end()}};
  for (const auto& c : basis) plan.matrix(c.i, c.j) += std::max(c.flow, 0.0);
  return plan;
}

}  // namespace

double CouplingPlan::cost(const Matrix& cost_matrix) const {
  require(cost_matrix.rows() == matrix.rows() && cost_matrix.cols() == matrix.cols(),
          "cost matrix shape does not match plan");
  double total = 0.0;
  for (std::size_t k = 0; k < matrix.data().size(); ++k) {
    total += matrix.data()[k] * cost_matrix.data()[k];
  }
  return total;
}

Matrix cost_matrix(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "cost_matrix: dimension mismatch (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.cols()) + ")");
  for (const Matrix* m : {&a, &b}) {
    for (double v : m->data()) {
      require(std::isfinite(v) && std::abs(v) <= kMaxCoordinate,
              "cost_matrix: coordinates must be finite with magnitude <= 1e6");
    }
  }
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto bj = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < ai.size(); ++k) {
        const double diff = ai[k] - bj[k];
        s += diff * diff;
      }
      c(i, j) = s;
    }
  }
  return c;
}

std::vector<std::size_t> linear_assignment(const Matrix& cost) {
  const std::size_t n = cost.rows();
  require(n == cost.cols(), "linear_assignment needs a square cost matrix");
  require(n > 0, "linear_assignment needs a non-empty cost matrix");
  const double inf = std::numeric_limits<double>::infinity();

  // Shortest augmenting path with potentials; 1-based, column 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

CouplingPlan exact_plan(const Matrix& cost, std::span<const double> row_weights,
                        std::span<const double> col_weights) {
  require(cost.rows() > 0 && cost.cols() > 0, "exact_plan needs a non-empty cost matrix");
  check_weights(row_weights, cost.rows(), "row");
  check_weights(col_weights, cost.cols(), "column");
  for (double c : cost.data()) require(std::isfinite(c), "exact_plan: cost entries must be finite");

  if (cost.rows() == cost.cols() && is_uniform(row_weights) && is_uniform(col_weights)) {
    const std::size_t n = cost.rows();
    const auto assignment = linear_assignment(cost);
    CouplingPlan plan{Matrix(n, n), {row_weights.begin(), row_weights.end()},
                      {col_weights.begin(), col_weights.end()}};
    for (std::size_t i = 0; i < n; ++i) plan.matrix(i, assignment[i]) = row_weights[i];
    return plan;
  }
  return transport_simplex(cost, row_weights, col_weights);
}

CouplingPlan exact_plan(const Matrix& cost) {
  require(cost.rows() > 0 && cost.cols() > 0, "exact_plan needs a non-empty cost matrix");
  const std::vector<double> a(cost.rows(), 1.0 / static_cast<double>(cost.rows()));
  const std::vector<double> b(cost.cols(), 1.0 / static_cast<double>(cost.cols()));
  return exact_plan(cost, a, b);
}

Matrix conditional_plan(const CouplingPlan& plan) {
  const Matrix& p = plan.matrix;
  Matrix out(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double mass = 0.0;
    for (double x : p.row(i)) mass += x;
    if (!(mass > 0.0)) {
      fail(Errc::degenerate_plan, "conditional_plan: row " + std::to_string(i) + " has zero mass");
    }
    for (std::size_t j = 0; j < p.cols(); ++j) out(i, j) = p(i, j) / mass;
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(const CouplingPlan& plan,
                                                              std::size_t count, Rng& rng) {
  const auto& entries = plan.matrix.data();
  require(!entries.empty(), "sample_pairs: empty plan");
  std::vector<double> cumulative(entries.size());
  std::partial_sum(entries.begin(), entries.end(), cumulative.begin());
  if (!(cumulative.back() > 0.0)) fail(Errc::degenerate_plan, "sample_pairs: plan has no mass");

  const std::size_t cols = plan.matrix.cols();
  std::vector<std::pair<std::size_t, std::size_t>> out(count);
  for (auto& pair : out) {
    const std::size_t k = pick(cumulative, uniform01(rng));
    pair = {k / cols, k % cols};
  }
  return out;
}

std::vector<std::size_t> sample_conditional(const Matrix& row_stochastic,
                                            std::span<const std::size_t> rows, Rng& rng) {
  std::vector<std::vector<double>> cumulative(row_stochastic.rows());
  std::vector<std::size_t> out(rows.size());
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const std::size_t i = rows[n];
    require(i < row_stochastic.rows(), "sample_conditional: row index out of range");
    auto& cum = cumulative[i];
    if (cum.empty()) {
      const auto r = row_stochastic.row(i);
      cum.resize(r.size());
      std::partial_sum(r.begin(), r.end(), cum.begin());
      if (!(cum.back() > 0.0)) {
        fail(Errc::degenerate_plan, "sample_conditional: row " + std::to_string(i) + " has no mass");
      }
    }
    out[n] = pick(cum, uniform01(rng));
  }
  return out;
}

AlignedWindow sample_aligned_window(std::span<const SampleBatch> batches, Rng& rng,
                                    std::size_t count) {
  require(batches.size() >= 2, "sample_aligned_window needs at least 2 batches");
  const std::size_t dim = batches.front().points.cols();
  for (std::size_t l = 0; l < batches.size(); ++l) {
    require(batches[l].points.rows() >= 1, "sample_aligned_window: empty batch");
    require(batches[l].points.cols() == dim, "sample_aligned_window: dimension mismatch");
    if (l > 0) {
      require(batches[l].time > batches[l - 1].time,
              "sample_aligned_window: batch times must be strictly increasing");
    }
  }
  if (count == 0) count = batches.front().points.rows();

  AlignedWindow window;
  window.times.reserve(batches.size());
  for (const auto& b : batches) window.times.push_back(b.time);

  auto gather = [dim](const Matrix& src, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), dim);
    for (std::size_t n = 0; n < idx.size(); ++n) {
      std::copy(src.row(idx[n]).begin(), src.row(idx[n]).end(), out.row(n).begin());
    }
    return out;
  };

  const auto first = exact_plan(cost_matrix(batches[0].points, batches[1].points));
  const auto pairs = sample_pairs(first, count, rng);
  std::vector<std::size_t> rows(count), cols(count);
  for (std::size_t n = 0; n < count; ++n) std::tie(rows[n], cols[n]) = pairs[n];
  window.batches.push_back(gather(batches[0].points, rows));
  window.batches.push_back(gather(batches[1].points, cols));

  for (std::size_t l = 2; l < batches.size(); ++l) {
    const Matrix& previous = window.batches.back();
    const auto plan = exact_plan(cost_matrix(previous, batches[l].points));
    const Matrix conditional = conditional_plan(plan);
    std::vector<std::size_t> identity(count);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    const auto next = sample_conditional(conditional, identity, rng);
    window.batches.push_back(gather(batches[l].points, next));
  }
  return window;
}

}  // namespace mmsfm
