#include "sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "data.hpp"
#include "rng.hpp"

namespace mmsfm {

namespace {

void check_setup(const Matrix& x0, std::span<const double> grid) {
  require(grid.size() >= 2, "integration grid needs at least 2 points");
  for (std::size_t s = 1; s < grid.size(); ++s) {
    require(grid[s] > grid[s - 1], "integration grid must be increasing");
  }
  require(x0.cols() >= 1, "initial conditions need at least one dimension");
  for (double v : x0.data()) require(std::isfinite(v), "initial conditions must be finite");
}

TrajectoryBatch make_batch(const Matrix& x0, std::span<const double> grid) {
  TrajectoryBatch b;
  b.times.assign(grid.begin(), grid.end());
  b.particles = x0.rows();
  b.dim = x0.cols();
  b.states.assign(b.particles * b.times.size() * b.dim, 0.0);
  for (std::size_t p = 0; p < b.particles; ++p) {
    std::copy(x0.row(p).begin(), x0.row(p).end(), b.state(p, 0).begin());
  }
  return b;
}

void check_finite(std::span<const double> x, std::size_t step) {
  for (double v : x) {
    if (!std::isfinite(v)) {
      fail(Errc::integration_diverged,
           "integration produced a non-finite state at step " + std::to_string(step),
           static_cast<long>(step));
    }
  }
}

// Runs body(p) for every particle, split into contiguous chunks across threads.
template <class Body>
void for_each_particle(std::size_t particles, Body body) {
  const std::size_t workers = std::min(configured_threads(), std::max<std::size_t>(particles, 1));
  if (workers <= 1) {
    for (std::size_t p = 0; p < particles; ++p) body(p);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  const std::size_t chunk = (particles + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t p = w * chunk; p < std::min(particles, (w + 1) * chunk); ++p) body(p);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void drift(const SdeSpec& spec, std::span<const double> x, double t, std::span<double> out) {
  require(spec.flow != nullptr, "SDE drift needs a flow network");
  require(spec.sigma >= 0.0, "diffusion sigma must be nonnegative");
  spec.flow->forward(x, t, out);
  if (spec.score == nullptr) return;
  const auto s = spec.score->forward(x, t);
  const double scale = spec.score_is_scaled ? 1.0 : 0.5 * spec.sigma * spec.sigma;
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += scale * s[j];
}

VectorField drift_field(const SdeSpec& spec) {
  return [spec](std::span<const double> x, double t, std::span<double> out) { drift(spec, x, t, out); };
}

VectorField flow_field(const Mlp& flow) {
  return [&flow](std::span<const double> x, double t, std::span<double> out) {
    flow.forward(x, t, out);
  };
}

Matrix TrajectoryBatch::snapshot(std::size_t step) const {
  require(step < times.size(), "snapshot step out of range");
  Matrix out(particles, dim);
  for (std::size_t p = 0; p < particles; ++p) {
    const auto s = state(p, step);
    std::copy(s.begin(), s.end(), out.row(p).begin());
  }
  return out;
}

std::size_t TrajectoryBatch::nearest_step(double t) const {
  require(!times.empty(), "empty trajectory");
  const double tol = 1e-9;
  if (!(t >= times.front() - tol && t <= times.back() + tol)) {
    fail(Errc::out_of_range, "time " + std::to_string(t) + " outside trajectory range [" +
                                 std::to_string(times.front()) + ", " +
                                 std::to_string(times.back()) + "]");
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < times.size(); ++s) {
    if (std::abs(times[s] - t) < std::abs(times[best] - t)) best = s;
  }
  return best;
}

std::vector<double> uniform_time_grid(double t0, double t1, std::size_t steps) {
  require(steps >= 1 && t1 > t0, "uniform grid needs t1 > t0 and at least one step");
  std::vector<double> grid(steps + 1);
  for (std::size_t s = 0; s <= steps; ++s) {
    grid[s] = t0 + (t1 - t0) * static_cast<double>(s) / static_cast<double>(steps);
  }
  return grid;
}

std::size_t configured_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MMSFM_THREADS")) {
    std::size_t cap = 0;
    const std::string s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cap);
    if (ec == std::errc() && cap >= 1) n = std::min(n, cap);
  }
  return n;
}

TrajectoryBatch integrate_sde(const VectorField& field, double sigma, const Matrix& x0,
                              std::span<const double> grid, std::uint64_t seed) {
  check_setup(x0, grid);
  require(std::isfinite(sigma) && sigma >= 0.0, "diffusion sigma must be nonnegative");
  TrajectoryBatch batch = make_batch(x0, grid);
  const std::size_t d = batch.dim;
  for_each_particle(batch.particles, [&](std::size_t p) {
    Rng rng = substream(seed, p);
    std::vector<double> u(d);
    for (std::size_t s = 0; s + 1 < grid.size(); ++s) {
      const double dt = grid[s + 1] - grid[s];
      const double noise = sigma * std::sqrt(dt);
      const auto x = batch.state(p, s);
      auto next = batch.state(p, s + 1);
      field(x, grid[s], u);
      for (std::size_t j = 0; j < d; ++j) next[j] = x[j] + u[j] * dt + noise * standard_normal(rng);
      check_finite(next, s + 1);
    }
  });
  return batch;
}

TrajectoryBatch integrate_sde(const SdeSpec& spec, const Matrix& x0, std::span<const double> grid,
                              std::uint64_t seed) {
  return integrate_sde(drift_field(spec), spec.sigma, x0, grid, seed);
}

TrajectoryBatch integrate_ode(const VectorField& field, const Matrix& x0,
                              std::span<const double> grid) {
  check_setup(x0, grid);
  TrajectoryBatch batch = make_batch(x0, grid);
  const std::size_t d = batch.dim;
  for_each_particle(batch.particles, [&](std::size_t p) {
    std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
    for (std::size_t s = 0; s + 1 < grid.size(); ++s) {
      const double t = grid[s];
      const double h = grid[s + 1] - t;
      const auto x = batch.state(p, s);
      field(x, t, k1);
      for (std::size_t j = 0; j < d; ++j) tmp[j] = x[j] + 0.5 * h * k1[j];
      field(tmp, t + 0.5 * h, k2);
      for (std::size_t j = 0; j < d; ++j) tmp[j] = x[j] + 0.5 * h * k2[j];
      field(tmp, t + 0.5 * h, k3);
      for (std::size_t j = 0; j < d; ++j) tmp[j] = x[j] + h * k3[j];
      field(tmp, t + h, k4);
      auto next = batch.state(p, s + 1);
      for (std::size_t j = 0; j < d; ++j) {
        next[j] = x[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      }
      check_finite(next, s + 1);
    }
  });
  return batch;
}

TrajectoryBatch integrate_ode(const Mlp& flow, const Matrix& x0, std::span<const double> grid) {
  return integrate_ode(flow_field(flow), x0, grid);
}

TrajectoryBatch integrate_euler(const VectorField& field, const Matrix& x0,
                                std::span<const double> grid) {
  check_setup(x0, grid);
  TrajectoryBatch batch = make_batch(x0, grid);
  const std::size_t d = batch.dim;
  for_each_particle(batch.particles, [&](std::size_t p) {
    std::vector<double> u(d);
    for (std::size_t s = 0; s + 1 < grid.size(); ++s) {
      const double dt = grid[s + 1] - grid[s];
      const auto x = batch.state(p, s);
      auto next = batch.state(p, s + 1);
      field(x, grid[s], u);
      for (std::size_t j = 0; j < d; ++j) next[j] = x[j] + u[j] * dt;
      check_finite(next, s + 1);
    }
  });
  return batch;
}

void save_trajectories(const std::string& path, const TrajectoryBatch& batch) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path);
  out << "particle_id,t";
  for (std::size_t j = 0; j < batch.dim; ++j) out << ",x_" << j;
  out << '\n';
  for (std::size_t p = 0; p < batch.particles; ++p) {
    for (std::size_t s = 0; s < batch.times.size(); ++s) {
      out << p << ',' << format_double(batch.times[s]);
      for (double v : batch.state(p, s)) out << ',' << format_double(v);
      out << '\n';
    }
  }
  if (!out) fail(Errc::io_error, "failed writing " + path);
}

TrajectoryBatch load_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::parse_error, "empty trajectory file " + path, 1);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) header.push_back(f);
  }
  if (header.size() < 3 || header[0] != "particle_id" || header[1] != "t") {
    fail(Errc::parse_error, "line 1: expected header particle_id,t,x_0,...", 1);
  }
  const std::size_t d = header.size() - 2;

  auto number = [&](const std::string& f, long line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
      fail(Errc::parse_error, "line " + std::to_string(line_no) + ": bad number '" + f + "'", line_no);
    }
    return v;
  };

  TrajectoryBatch b;
  b.dim = d;
  std::size_t current = 0;
  std::size_t step = 0;
  long line_no = 1;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != d + 2) fail(Errc::parse_error, "line " + std::to_string(line_no) + ": ragged row", line_no);
    const auto pid = static_cast<std::size_t>(number(f[0], line_no));
    const double t = number(f[1], line_no);
    if (!any) {
      any = true;
      current = pid;
      if (pid != 0) fail(Errc::parse_error, "particles must start at id 0", line_no);
    }
    if (pid != current) {
      if (pid != current + 1) fail(Errc::parse_error, "particle ids must be consecutive", line_no);
      if (step != b.times.size()) fail(Errc::parse_error, "particles have unequal step counts", line_no);
      current = pid;
      step = 0;
    }
    if (current == 0) {
      b.times.push_back(t);
    } else if (step >= b.times.size() || b.times[step] != t) {
      fail(Errc::parse_error, "line " + std::to_string(line_no) + ": time grid differs between particles",
           line_no);
    }
    for (std::size_t j = 0; j < d; ++j) b.states.push_back(number(f[j + 2], line_no));
    ++step;
  }
  if (!any) fail(Errc::parse_error, "trajectory file has no rows", line_no);
  if (step != b.times.size()) fail(Errc::parse_error, "last particle is truncated", line_no);
  b.particles = current + 1;
  return b;
}

}  // namespace mmsfm
