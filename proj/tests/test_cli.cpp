#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <set>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    const auto d = fs::temp_directory_path() / "mmsfm_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Run {
  int code;
  std::string err;
};

Run cli(const std::string& args) {
  const auto err = work() / "stderr.txt";
  const std::string cmd = std::string(MMSFM_CLI_PATH) + " " + args + " >" +
                          (work() / "stdout.txt").string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string s; std::getline(in, s);) ++n;
  return n;
}

std::string w(const std::string& name) { return (work() / name).string(); }

// Shared small model: synth + short training.
void prepare() {
  static bool done = false;
  if (done) return;
  ASSERT_EQ(cli("synth --dataset s-shape --grid T1 --seed 7 --out " + w("d")).code, 0);
  ASSERT_EQ(cli("train --data " + w("d") + " --out " + w("m") + " --steps 30 --batch 20 --hold-out 5 --seed 1").code, 0);
  done = true;
}

}  // namespace

TEST(Cli, SynthWritesFilesDeterministically) {
  ASSERT_EQ(cli("synth --dataset s-shape --grid T2 --seed 7 --out " + w("s1")).code, 0);
  ASSERT_EQ(cli("synth --dataset s-shape --grid T2 --seed 7 --out " + w("s2")).code, 0);
  for (const char* f : {"marginals.csv", "grid.json", "x0.csv", "config.json"}) {
    ASSERT_TRUE(fs::exists(work() / "s1" / f)) << f;
    EXPECT_EQ(slurp(work() / "s1" / f), slurp(work() / "s2" / f).substr(0)) << f;
  }
  const auto grid = json::parse(slurp(work() / "s1" / "grid.json"));
  EXPECT_EQ(grid["times"][1].get<double>(), 0.08);
  EXPECT_EQ(slurp(work() / "s1" / "marginals.csv").substr(0, 10), "t,x_0,x_1\n");
  EXPECT_EQ(lines(work() / "s1" / "marginals.csv"), 1u + 7 * 200);
}

TEST(Cli, UsageErrors) {
  const auto bad_grid = cli("synth --grid T9 --out " + w("x"));
  EXPECT_EQ(bad_grid.code, 2);
  EXPECT_NE(bad_grid.err.find("T1"), std::string::npos);
  EXPECT_EQ(cli("synth --dataset spiral --out " + w("x")).code, 2);
  EXPECT_EQ(cli("train --data " + w("d")).code, 2);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, TrainOutputsAndConfigPrecedence) {
  prepare();
  for (const char* f : {"flow.ckpt", "score.ckpt", "loss.csv", "config.json"})
    EXPECT_TRUE(fs::exists(work() / "m" / f)) << f;
  EXPECT_EQ(lines(work() / "m" / "loss.csv"), 31u);
  EXPECT_EQ(slurp(work() / "m" / "loss.csv").substr(0, 35), "step,window,flow_loss,score_loss\n0,");
  const auto cfg = json::parse(slurp(work() / "m" / "config.json"));
  EXPECT_EQ(cfg["k"], 2);
  EXPECT_EQ(cfg["hold-out"], 5);
  EXPECT_EQ(cfg["parameters"], 4546);

  std::ofstream(w("cfg.json")) << R"({"k": 1, "steps": 12, "batch": 10, "sigma": 0.2})";
  ASSERT_EQ(cli("train --data " + w("d") + " --out " + w("m2") + " --config " + w("cfg.json") + " --steps 8").code, 0);
  const auto c2 = json::parse(slurp(work() / "m2" / "config.json"));
  EXPECT_EQ(c2["k"], 1);
  EXPECT_EQ(c2["steps"], 8);
  EXPECT_EQ(c2["batch"], 10);
  EXPECT_EQ(c2["sigma"], 0.2);
  EXPECT_EQ(c2["lr"], 1e-4);
}

TEST(Cli, TrainFailures) {
  prepare();
  EXPECT_EQ(cli("train --data " + w("d") + " --out " + w("bad") + " --steps 5 --lr 1e300 --batch 10").code, 3);
  EXPECT_EQ(cli("train --data " + w("d") + " --out " + w("bad") + " --hold-out 0").code, 2);
  EXPECT_EQ(cli("train --data " + w("d") + " --out " + w("bad") + " --k 9 --steps 1").code, 1);
}

TEST(Cli, GenerateRowsAndDeterminism) {
  prepare();
  const std::string base = "generate --model " + w("m") + " --x0 " + w("d/x0.csv") +
                           " --steps-per-unit 100 --particles 200 --seed 1 --out ";
  ASSERT_EQ(cli(base + w("g1.csv")).code, 0);
  ASSERT_EQ(cli(base + w("g2.csv")).code, 0);
  EXPECT_EQ(lines(work() / "g1.csv"), 1u + 200 * 101);
  EXPECT_EQ(slurp(work() / "g1.csv"), slurp(work() / "g2.csv"));
  EXPECT_TRUE(fs::exists(w("g1.csv") + ".config.json"));
  EXPECT_EQ(cli(base + w("g3.csv") + " --particles 500").code, 2);
}

TEST(Cli, ZeroSigmaSdeEqualsEulerOde) {
  prepare();
  const std::string base = "generate --model " + w("m") + " --x0 " + w("d/x0.csv") + " --particles 20 ";
  ASSERT_EQ(cli(base + "--sigma 0 --unscaled-score --out " + w("sde0.csv")).code, 0);
  ASSERT_EQ(cli(base + "--sigma 0 --deterministic --ode-method euler --out " + w("ode.csv")).code, 0);
  EXPECT_EQ(slurp(work() / "sde0.csv"), slurp(work() / "ode.csv"));
}

TEST(Cli, CheckpointMismatchExit) {
  prepare();
  fs::create_directories(work() / "broken");
  fs::copy_file(work() / "m" / "score.ckpt", work() / "broken" / "score.ckpt", fs::copy_options::overwrite_existing);
  std::string flow = slurp(work() / "m" / "flow.ckpt");
  flow[8] = 7;
  std::ofstream(work() / "broken" / "flow.ckpt", std::ios::binary) << flow;
  EXPECT_EQ(cli("generate --model " + w("broken") + " --x0 " + w("d/x0.csv") + " --out " + w("x.csv")).code, 4);
}

TEST(Cli, EvaluateReports) {
  prepare();
  ASSERT_EQ(cli("generate --model " + w("m") + " --x0 " + w("d/x0.csv") + " --seed 2 --out " + w("e.csv")).code, 0);
  ASSERT_EQ(cli("evaluate --traj " + w("e.csv") + " --data " + w("d") + " --time-index 5 --out " + w("r.json")).code, 0);
  const auto r = json::parse(slurp(work() / "r.json"));
  for (const char* k : {"w1", "w2_sq", "mmd_gaussian", "mmd_mixture", "gaussian_gamma", "mixture_gammas"})
    EXPECT_TRUE(r.contains(k)) << k;
  EXPECT_EQ(r["time"], 0.83);
  EXPECT_EQ(r["mixture_gammas"].size(), 5u);

  ASSERT_EQ(cli("evaluate --traj " + w("e.csv") + " --data " + w("d") + " --all --out " + w("all.json")).code, 0);
  const auto all = json::parse(slurp(work() / "all.json"));
  EXPECT_EQ(all["per_time"].size(), 6u);

  ASSERT_EQ(cli("generate --model " + w("m") + " --x0 " + w("d/x0.csv") + " --t-end 0.5 --out " + w("half.csv")).code, 0);
  EXPECT_EQ(cli("evaluate --traj " + w("half.csv") + " --data " + w("d") + " --time-index 5").code, 5);
  EXPECT_EQ(cli("evaluate --traj " + w("half.csv") + " --data " + w("d")).code, 2);
}

TEST(Cli, EvaluateGroundTruthAgainstItself) {
  prepare();
  // A trajectory file whose states at t = 0.83 are exactly marginal 5.
  std::ifstream in(work() / "d" / "marginals.csv");
  std::ofstream out(work() / "truth.csv");
  out << "particle_id,t,x_0,x_1\n";
  std::string line;
  std::getline(in, line);
  std::size_t p = 0;
  while (std::getline(in, line)) {
    if (line.rfind("0.83,", 0) != 0) continue;
    const std::string xs = line.substr(5);
    out << p << ",0," << xs << '\n' << p << ",0.83," << xs << '\n' << p << ",1," << xs << '\n';
    ++p;
  }
  out.close();
  ASSERT_EQ(cli("evaluate --traj " + w("truth.csv") + " --data " + w("d") + " --time-index 5 --out " + w("t.json")).code, 0)
      << cli("evaluate --traj " + w("truth.csv") + " --data " + w("d") + " --time-index 5").err;
  const auto r = json::parse(slurp(work() / "t.json"));
  EXPECT_NEAR(r["w1"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(r["w2_sq"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(r["mmd_gaussian"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(r["mmd_mixture"].get<double>(), 0.0, 1e-12);
}

TEST(Cli, SplinesOvershootOnlyForNatural) {
  std::ofstream(w("pts.csv")) << "x_0,x_1\n0,0\n5,7\n10,7\n15,0\n20,-7\n25,-7\n30,0\n";
  ASSERT_EQ(cli("splines --points " + w("pts.csv") + " --grid T3 --k 2 --samples-per-interval 200 --out " + w("sp.csv")).code, 0);
  std::ifstream in(work() / "sp.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,window_id,family,x_0,x_1");
  std::set<int> windows;
  // Long interval 0.3 -> 0.88 joins y = 0 and y = -7.
  double nat_excess = 0, her_excess = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string t, wid, fam, x0, x1;
    std::getline(ss, t, ',');
    std::getline(ss, wid, ',');
    std::getline(ss, fam, ',');
    std::getline(ss, x0, ',');
    std::getline(ss, x1, ',');
    windows.insert(std::stoi(wid));
    const double tv = std::stod(t), y = std::stod(x1);
    if (tv > 0.3 && tv < 0.88) {
      const double excess = std::max(y - 0.0, -7.0 - y);
      double& slot = fam == "natural" ? nat_excess : her_excess;
      slot = std::max(slot, excess);
    }
  }
  EXPECT_EQ(windows.size(), 5u);
  EXPECT_GT(nat_excess, 1e-6);
  EXPECT_LE(her_excess, 1e-12);
  EXPECT_EQ(cli("splines --points " + w("pts.csv") + " --out " + w("sp2.csv")).code, 2);
}
