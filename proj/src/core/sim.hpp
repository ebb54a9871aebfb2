#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "nn.hpp"

namespace mmsfm {

/// Time-dependent vector field f(x, t) written into `out`.
using VectorField =
    std::function<void(std::span<const double> x, double t, std::span<double> out)>;

/// Learned SDE dX = u(X, t) dt + sigma dW with u assembled from the flow and
/// score networks. With `score_is_scaled` the score network already outputs
/// (sigma^2 / 2) * score and is added as is.
struct SdeSpec {
  const Mlp* flow = nullptr;
  const Mlp* score = nullptr;
  double sigma = 0.15;
  bool score_is_scaled = true;
};

void drift(const SdeSpec& spec, std::span<const double> x, double t, std::span<double> out);
VectorField drift_field(const SdeSpec& spec);
VectorField flow_field(const Mlp& flow);

/// Particle paths on a shared time grid. States are stored particle-major:
/// state(p, s) is a d-vector.
struct TrajectoryBatch {
  std::vector<double> times;
  std::size_t particles = 0;
  std::size_t dim = 0;
  std::vector<double> states;

  std::span<const double> state(std::size_t particle, std::size_t step) const {
    return {states.data() + (particle * times.size() + step) * dim, dim};
  }
  std::span<double> state(std::size_t particle, std::size_t step) {
    return {states.data() + (particle * times.size() + step) * dim, dim};
  }
  /// All particles at grid step `step`.
  Matrix snapshot(std::size_t step) const;
  /// Index of the grid step nearest to t; out_of_range outside the grid.
  std::size_t nearest_step(double t) const;

  bool operator==(const TrajectoryBatch&) const = default;
};

/// `steps` equal increments from t0 to t1 (steps + 1 points).
std::vector<double> uniform_time_grid(double t0, double t1, std::size_t steps);

/// Worker count from MMSFM_THREADS (default: hardware concurrency).
std::size_t configured_threads();

/// Euler-Maruyama. Each particle draws from its own substream of `seed`, so
/// results do not depend on the thread count.
TrajectoryBatch integrate_sde(const VectorField& drift, double sigma, const Matrix& x0,
                              std::span<const double> grid, std::uint64_t seed);
TrajectoryBatch integrate_sde(const SdeSpec& spec, const Matrix& x0, std::span<const double> grid,
                              std::uint64_t seed);

/// Fixed-step classical Runge-Kutta on dx/dt = f(x, t).
TrajectoryBatch integrate_ode(const VectorField& field, const Matrix& x0,
                              std::span<const double> grid);
TrajectoryBatch integrate_ode(const Mlp& flow, const Matrix& x0, std::span<const double> grid);

/// Fixed-step explicit Euler on dx/dt = f(x, t).
TrajectoryBatch integrate_euler(const VectorField& field, const Matrix& x0,
                                std::span<const double> grid);

/// CSV with header `particle_id,t,x_0,...,x_{d-1}`.
void save_trajectories(const std::string& path, const TrajectoryBatch& batch);
TrajectoryBatch load_trajectories(const std::string& path);

}  // namespace mmsfm
