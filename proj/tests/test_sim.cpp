#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "sim.hpp"

using namespace mmsfm;

namespace {

Matrix start_points(std::size_t n) {
  Rng rng(1);
  Matrix m(n, 2);
  for (double& v : m.data()) v = standard_normal(rng);
  return m;
}

Mlp random_net(std::uint64_t seed) {
  Rng rng(seed);
  return Mlp::lecun_normal({3, 16, 2}, rng);
}

}  // namespace

TEST(Drift, Conventions) {
  const Mlp flow = random_net(1), score = random_net(2);
  const std::vector<double> x{0.3, -1.2};
  const double t = 0.4;
  const auto v = flow.forward(x, t);
  const auto s = score.forward(x, t);
  std::vector<double> out(2);

  drift(SdeSpec{&flow, &score, 0.0, false}, x, t, out);
  EXPECT_EQ(out, v);

  const Mlp zero({3, 16, 2});
  drift(SdeSpec{&flow, &zero, 0.15, true}, x, t, out);
  EXPECT_EQ(out, v);
  drift(SdeSpec{&flow, &zero, 0.15, false}, x, t, out);
  EXPECT_EQ(out, v);

  // Unscaled network outputs s; scaled convention expects (sigma^2/2) s.
  drift(SdeSpec{&flow, &score, 0.15, false}, x, t, out);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(out[j], v[j] + 0.5 * 0.0225 * s[j], 1e-12);
  drift(SdeSpec{&flow, nullptr, 0.15, true}, x, t, out);
  EXPECT_EQ(out, v);
}

TEST(Sde, ZeroAndConstantDrift) {
  const Matrix x0 = start_points(10);
  const auto grid = uniform_time_grid(0.0, 1.0, 100);
  const auto still = integrate_sde([](auto, double, std::span<double> o) { std::fill(o.begin(), o.end(), 0.0); },
                                   0.0, x0, grid, 1);
  for (std::size_t p = 0; p < 10; ++p)
    for (std::size_t s = 0; s < grid.size(); ++s)
      for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(still.state(p, s)[j], x0(p, j));

  const auto moved = integrate_sde(
      [](auto, double, std::span<double> o) {
        o[0] = 1.5;
        o[1] = -0.25;
      },
      0.0, x0, grid, 1);
  for (std::size_t p = 0; p < 10; ++p) {
    EXPECT_NEAR(moved.state(p, 100)[0], x0(p, 0) + 1.5, 1e-12);
    EXPECT_NEAR(moved.state(p, 100)[1], x0(p, 1) - 0.25, 1e-12);
  }
}

TEST(Sde, BrownianVariance) {
  const std::size_t n = 10000;
  const Matrix x0(n, 1);
  const double sigma = 0.15;
  const auto traj = integrate_sde([](auto, double, std::span<double> o) { o[0] = 0.0; }, sigma, x0,
                                  uniform_time_grid(0.0, 1.0, 100), 7);
  double m = 0, s2 = 0;
  for (std::size_t p = 0; p < n; ++p) m += traj.state(p, 100)[0];
  m /= n;
  for (std::size_t p = 0; p < n; ++p) s2 += std::pow(traj.state(p, 100)[0] - m, 2);
  s2 /= (n - 1);
  const double target = sigma * sigma;
  const double sd = target * std::sqrt(2.0 / (n - 1));
  EXPECT_LT(std::abs(s2 - target), 3 * sd);
}

TEST(Sde, DeterministicAndThreadIndependent) {
  const Mlp flow = random_net(3), score = random_net(4);
  const SdeSpec spec{&flow, &score, 0.15, true};
  const Matrix x0 = start_points(37);
  const auto grid = uniform_time_grid(0.0, 1.0, 50);
  ::setenv("MMSFM_THREADS", "1", 1);
  const auto a = integrate_sde(spec, x0, grid, 11);
  ::setenv("MMSFM_THREADS", "4", 1);
  const auto b = integrate_sde(spec, x0, grid, 11);
  ::unsetenv("MMSFM_THREADS");
  EXPECT_EQ(a, b);
  EXPECT_NE(integrate_sde(spec, x0, grid, 12), a);
}

TEST(Sde, ZeroDiffusionEqualsEuler) {
  const Mlp flow = random_net(5), score = random_net(6);
  const Matrix x0 = start_points(8);
  const auto grid = uniform_time_grid(0.0, 1.0, 100);
  const auto sde = integrate_sde(SdeSpec{&flow, &score, 0.0, false}, x0, grid, 3);
  const auto ode = integrate_euler(flow_field(flow), x0, grid);
  ASSERT_EQ(sde.states.size(), ode.states.size());
  for (std::size_t k = 0; k < sde.states.size(); ++k) EXPECT_NEAR(sde.states[k], ode.states[k], 1e-12);
}

TEST(Sde, DivergenceIsReported) {
  const Matrix x0 = start_points(2);
  try {
    integrate_sde([](std::span<const double> x, double, std::span<double> o) {
      for (std::size_t j = 0; j < x.size(); ++j) o[j] = 1e200 * (std::abs(x[j]) + 1.0);
    }, 0.0, x0, uniform_time_grid(0, 1, 10), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::integration_diverged);
    EXPECT_GE(e.index(), 0);
  }
}

TEST(Ode, ZeroNetIsConstant) {
  const Mlp zero({3, 8, 2});
  const Matrix x0 = start_points(4);
  const auto traj = integrate_ode(zero, x0, uniform_time_grid(0, 1, 10));
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(traj.state(p, 10)[j], x0(p, j));
}

TEST(Ode, Rk4ExponentialAndOrder) {
  const VectorField grow = [](std::span<const double> x, double, std::span<double> o) {
    for (std::size_t j = 0; j < x.size(); ++j) o[j] = x[j];
  };
  const Matrix x0{{1.0}, {-2.0}};
  const auto fine = integrate_ode(grow, x0, uniform_time_grid(0, 1, 1000));
  EXPECT_NEAR(fine.state(0, 1000)[0], std::exp(1.0), 1e-6);
  EXPECT_NEAR(fine.state(1, 1000)[0], -2 * std::exp(1.0), 1e-6);

  const double e10 = std::abs(integrate_ode(grow, x0, uniform_time_grid(0, 1, 10)).state(0, 10)[0] - std::exp(1.0));
  const double e20 = std::abs(integrate_ode(grow, x0, uniform_time_grid(0, 1, 20)).state(0, 20)[0] - std::exp(1.0));
  EXPECT_GT(e10 / e20, 14.0);
  EXPECT_LT(e10 / e20, 18.0);
}

TEST(Ode, EulerIsFirstOrder) {
  const VectorField grow = [](std::span<const double> x, double t, std::span<double> o) {
    o[0] = x[0] * std::cos(t);
  };
  const Matrix x0{{1.0}};
  const double exact = std::exp(std::sin(1.0));
  const double e1 = std::abs(integrate_euler(grow, x0, uniform_time_grid(0, 1, 200)).state(0, 200)[0] - exact);
  const double e2 = std::abs(integrate_euler(grow, x0, uniform_time_grid(0, 1, 400)).state(0, 400)[0] - exact);
  EXPECT_NEAR(e1 / e2, 2.0, 0.1);
}

TEST(Trajectory, GridAndNearestStep) {
  const auto g = uniform_time_grid(0.0, 1.0, 100);
  ASSERT_EQ(g.size(), 101u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  const auto traj = integrate_euler([](auto, double, std::span<double> o) { o[0] = 0; }, Matrix{{0.0}}, g);
  EXPECT_EQ(traj.nearest_step(0.83), 83u);
  EXPECT_EQ(traj.nearest_step(0.834), 83u);
  EXPECT_THROW(traj.nearest_step(1.2), Error);
}

TEST(Trajectory, CsvRoundTrip) {
  const Mlp flow = random_net(8), score = random_net(9);
  const auto traj = integrate_sde(SdeSpec{&flow, &score, 0.15, true}, start_points(5),
                                  uniform_time_grid(0, 1, 20), 2);
  const auto path = std::filesystem::temp_directory_path() / "mmsfm_sim_traj.csv";
  save_trajectories(path.string(), traj);
  EXPECT_EQ(load_trajectories(path.string()), traj);
  std::filesystem::remove(path);
}
