#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nn.hpp"

using namespace mmsfm;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = scale * standard_normal(rng);
  return m;
}

std::vector<double> random_times(Rng& rng, std::size_t n) {
  std::vector<double> t(n);
  for (double& v : t) v = uniform01(rng);
  return t;
}

double weighted_output(const Mlp& net, const Matrix& x, std::span<const double> t, const Matrix& w) {
  const Matrix y = net.forward(x, t);
  double s = 0;
  for (std::size_t k = 0; k < y.data().size(); ++k) s += w.data()[k] * y.data()[k];
  return s;
}

double nearest_kink(const Mlp::Tape& tape) {
  double m = 1e300;
  for (std::size_t l = 0; l + 1 < tape.preactivations.size(); ++l)
    for (double v : tape.preactivations[l].data()) m = std::min(m, std::abs(v));
  return m;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mmsfm_nn_" + name);
}

}  // namespace

TEST(Mlp, ParameterCountForPlaneData) {
  const Mlp net(Mlp::default_widths(2));
  EXPECT_EQ(net.widths(), (std::vector<std::size_t>{3, 64, 64, 2}));
  EXPECT_EQ(net.parameter_count(), 4546u);
}

TEST(Mlp, ZeroLastLayerGivesZeroOutput) {
  Rng rng(1);
  Mlp net = Mlp::lecun_normal(Mlp::default_widths(3), rng);
  const std::size_t last = net.layers() - 1;
  for (double& w : net.weights(last)) w = 0.0;
  for (double& b : net.bias(last)) b = 0.0;
  const Matrix x = random_matrix(rng, 5, 3);
  const auto t = random_times(rng, 5);
  Mlp::Tape tape;
  const Matrix y = net.forward(x, t, tape);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);

  // d|f|^2/dy = 2y = 0, so the last bias gradient is zero.
  std::vector<double> grad(net.parameter_count(), 0.0);
  Matrix dy(5, 3);
  for (std::size_t k = 0; k < y.data().size(); ++k) dy.data()[k] = 2 * y.data()[k];
  net.backward(tape, dy, grad);
  const std::size_t bias_begin = net.parameter_count() - 3;
  for (std::size_t k = bias_begin; k < grad.size(); ++k) EXPECT_EQ(grad[k], 0.0);
}

TEST(Mlp, BatchedForwardEqualsPerRow) {
  Rng rng(2);
  const Mlp net = Mlp::lecun_normal(Mlp::default_widths(2), rng);
  const Matrix x = random_matrix(rng, 16, 2, 3.0);
  const auto t = random_times(rng, 16);
  const Matrix y = net.forward(x, t);
  for (std::size_t n = 0; n < 16; ++n) {
    const auto row = net.forward(x.row(n), t[n]);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(y(n, j), row[j], 1e-12);
  }
}

TEST(Mlp, ContinuousInTime) {
  Rng rng(3);
  const Mlp net = Mlp::lecun_normal(Mlp::default_widths(2), rng);
  for (int n = 0; n < 20; ++n) {
    const std::vector<double> x{standard_normal(rng), standard_normal(rng)};
    const double t = 0.9 * uniform01(rng);
    const auto a = net.forward(x, t), b = net.forward(x, t + 1e-7);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_LT(std::abs(a[j] - b[j]), 1e-4);
  }
}

TEST(Mlp, RejectsBadInput) {
  const Mlp net(Mlp::default_widths(2));
  EXPECT_THROW(net.forward(std::vector<double>{1.0, NAN}, 0.5), Error);
  EXPECT_THROW(net.forward(std::vector<double>{1.0, 2.0, 3.0}, 0.5), Error);
  const std::vector<double> t{0.1};
  EXPECT_THROW(net.forward(Matrix(2, 2), t), Error);
}

TEST(Mlp, GradientsMatchCentralDifferences) {
  Rng rng(4);
  Mlp net = Mlp::lecun_normal({3, 16, 16, 2}, rng);
  for (double& b : net.parameters()) b += 0.05 * standard_normal(rng);
  Matrix x;
  std::vector<double> t;
  Mlp::Tape tape;
  do {
    x = random_matrix(rng, 4, 2);
    t = random_times(rng, 4);
    net.forward(x, t, tape);
  } while (nearest_kink(tape) < 1e-3);
  const Matrix w = random_matrix(rng, 4, 2);
  std::vector<double> grad(net.parameter_count(), 0.0);
  net.backward(tape, w, grad);

  const double h = 1e-6;
  double worst = 0;
  for (std::size_t k = 0; k < net.parameter_count(); ++k) {
    const double saved = net.parameters()[k];
    net.parameters()[k] = saved + h;
    const double up = weighted_output(net, x, t, w);
    net.parameters()[k] = saved - h;
    const double down = weighted_output(net, x, t, w);
    net.parameters()[k] = saved;
    const double fd = (up - down) / (2 * h);
    const double rel = std::abs(fd - grad[k]) / std::max({std::abs(fd), std::abs(grad[k]), 1e-3});
    worst = std::max(worst, rel);
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Mlp, BatchGradientIsSumOfSampleGradients) {
  Rng rng(5);
  const Mlp net = Mlp::lecun_normal(Mlp::default_widths(2), rng);
  const Matrix x = random_matrix(rng, 6, 2);
  const auto t = random_times(rng, 6);
  const Matrix w = random_matrix(rng, 6, 2);
  Mlp::Tape tape;
  net.forward(x, t, tape);
  std::vector<double> total(net.parameter_count(), 0.0), summed(net.parameter_count(), 0.0);
  net.backward(tape, w, total);
  for (std::size_t n = 0; n < 6; ++n) {
    Matrix xn(1, 2), wn(1, 2);
    std::copy(x.row(n).begin(), x.row(n).end(), xn.row(0).begin());
    std::copy(w.row(n).begin(), w.row(n).end(), wn.row(0).begin());
    const std::vector<double> tn{t[n]};
    Mlp::Tape tn_tape;
    net.forward(xn, tn, tn_tape);
    net.backward(tn_tape, wn, summed);
  }
  for (std::size_t k = 0; k < total.size(); ++k) EXPECT_NEAR(total[k], summed[k], 1e-10);
}

TEST(Mlp, InitializationDeterministicPerSeed) {
  Rng a(9), b(9);
  EXPECT_EQ(Mlp::lecun_normal(Mlp::default_widths(2), a), Mlp::lecun_normal(Mlp::default_widths(2), b));
}

TEST(AdamW, ZeroGradientNoDecayKeepsParameters) {
  AdamW opt(3, {0.1, 0.9, 0.999, 1e-8, 0.0});
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  for (int i = 0; i < 10; ++i) opt.step(p, g);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
  EXPECT_EQ(opt.steps(), 10u);
}

TEST(AdamW, DescendsAndConverges) {
  AdamW one(1, {0.1, 0.9, 0.999, 1e-8, 0.0});
  std::vector<double> theta{1.0};
  one.step(theta, std::vector<double>{2.0 * theta[0]});
  EXPECT_LT(theta[0], 1.0);

  // f = (a - 1)^2 + 3 (b + 2)^2
  AdamW opt(2, {0.05, 0.9, 0.999, 1e-8, 0.0});
  std::vector<double> p{4.0, 1.0};
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> g{2 * (p[0] - 1), 6 * (p[1] + 2)};
    opt.step(p, g);
  }
  EXPECT_LT(std::hypot(p[0] - 1, p[1] + 2), 1e-3);
}

TEST(AdamW, DecoupledDecay) {
  AdamW opt(1, {0.1, 0.9, 0.999, 1e-8, 0.5});
  std::vector<double> p{2.0};
  opt.step(p, std::vector<double>{0.0});
  EXPECT_NEAR(p[0], 2.0 * (1 - 0.1 * 0.5), 1e-15);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(6);
  Mlp net = Mlp::lecun_normal(Mlp::default_widths(2), rng);
  AdamW opt(net.parameter_count(), {});
  std::vector<double> g(net.parameter_count());
  for (double& v : g) v = standard_normal(rng);
  opt.step(net.parameters(), g);
  const auto path = temp_file("roundtrip.ckpt");
  save_checkpoint(path.string(), net, &opt);
  const Checkpoint c = load_checkpoint(path.string());
  EXPECT_EQ(c.net, net);
  ASSERT_TRUE(c.optimizer.has_value());
  EXPECT_EQ(*c.optimizer, opt);

  save_checkpoint(path.string(), net);
  EXPECT_FALSE(load_checkpoint(path.string()).optimizer.has_value());
  std::filesystem::remove(path);
}

TEST(Checkpoint, VersionMismatchAndCorruption) {
  const Mlp net(Mlp::default_widths(2));
  const auto path = temp_file("version.ckpt");
  save_checkpoint(path.string(), net);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const char v2[4] = {2, 0, 0, 0};
    f.write(v2, 4);
  }
  try {
    load_checkpoint(path.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::checkpoint_mismatch);
  }
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACHECKPOINT";
  }
  try {
    load_checkpoint(path.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
  }
  save_checkpoint(path.string(), net);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 16);
  EXPECT_THROW(load_checkpoint(path.string()), Error);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path.string()), Error);
}
