#include <dlgp/cli.hpp>

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "test_support.hpp"

namespace {

using namespace dlgp;
namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "dlgp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dlgp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// Smooth 1-d toy data, optionally without noise.
  fs::path toy_xy(const std::string& name, int n, double noise, std::uint64_t seed = 1) const {
    Rng rng(seed);
    Matrix x(n, 1), y(n, 1);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = -2.0 + 4.0 * i / (n - 1);
      y(i, 0) = std::sin(2.0 * x(i, 0)) + noise * rng.normal();
    }
    write_xy_csv(dir_ / name, x, y);
    return dir_ / name;
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"train", "--bogus"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, BinaryExitCodes) {
  const std::string bin = DLGP_CLI_PATH;
  EXPECT_EQ(std::system((bin + " --help > /dev/null").c_str()), 0);
  const int missing = std::system((bin + " prep-quantiles /nonexistent/reps.csv 2> /dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(missing));
  EXPECT_EQ(WEXITSTATUS(missing), 2);
}

TEST_F(CliTest, SimulateDeskScaleAndDeterminism) {
  const auto a = run({"simulate", "--m", "4", "--replicates", "2", "--horizon", "8", "--seed", "3", "--out",
                      path("a.csv")});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto table = read_replicate_csv(dir_ / "a.csv");
  EXPECT_EQ(table.rows(), 8);
  EXPECT_EQ(table.horizon(), 8);
  EXPECT_EQ(read_design_csv(dir_ / "a.design.csv").rows(), 4);
  ASSERT_EQ(run({"simulate", "--m", "4", "--replicates", "2", "--horizon", "8", "--seed", "3", "--out",
                 path("b.csv")})
                .code,
            0);
  EXPECT_EQ(slurp(dir_ / "a.csv"), slurp(dir_ / "b.csv"));
  EXPECT_EQ(slurp(dir_ / "a.design.csv"), slurp(dir_ / "b.design.csv"));
}

TEST_F(CliTest, SimulateOddMSuggestsNext) {
  const auto r = run({"simulate", "--m", "5", "--out", path("x.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("try 6"), std::string::npos);
}

TEST_F(CliTest, PrepQuantilesRowCounts) {
  ASSERT_EQ(run({"simulate", "--m", "4", "--replicates", "3", "--horizon", "6", "--out", path("reps.csv")}).code, 0);
  const auto r = run({"prep-quantiles", path("reps.csv"), "--out", path("q.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto design = read_quantile_design(dir_ / "q.csv");
  EXPECT_EQ(design.rows(), 20);
  EXPECT_EQ(design.trajectory.cols(), 6);
  EXPECT_NE(r.out.find("20 quantile rows"), std::string::npos);
}

TEST_F(CliTest, PrepQuantilesErrors) {
  const auto missing = run({"prep-quantiles", path("nope.csv"), "--out", path("q.csv")});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("file not found: " + path("nope.csv")), std::string::npos);

  ASSERT_EQ(run({"simulate", "--m", "2", "--replicates", "2", "--horizon", "4", "--out", path("reps.csv")}).code, 0);
  const auto cfg = write("bad.ini", "[quantiles]\nlevels = 0.5, 0.2\n");
  const auto bad = run({"prep-quantiles", path("reps.csv"), "--config", cfg.string(), "--out", path("q.csv")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("config"), std::string::npos);
}

TEST_F(CliTest, TrainSmallConfigIsFastAndDeterministic) {
  toy_xy("toy.csv", 30, 0.1);
  const auto cfg = write("toy.ini",
                         "[data]\ntrain = toy.csv\n[network]\nlayers = 4:tanh, 1:tanh\n"
                         "[train]\nlearning_rate = 0.1\nsteps = 500\nslice_interval = 25\nseed = 7\n");
  const auto start = std::chrono::steady_clock::now();
  const auto a = run({"train", "--config", cfg.string(), "--out", path("m1.json")});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_LT(seconds, 60.0);
  EXPECT_NE(a.out.find("final log likelihood"), std::string::npos);
  ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", path("m2.json")}).code, 0);
  EXPECT_EQ(slurp(dir_ / "m1.json"), slurp(dir_ / "m2.json"));
  EXPECT_EQ(slurp(dir_ / "m1.trace.csv"), slurp(dir_ / "m2.trace.csv"));
  const auto trace = csv::read_numeric(dir_ / "m1.trace.csv");
  EXPECT_EQ(trace.rows.size(), 500u);
  EXPECT_GT(trace.rows.back()[1], trace.rows.front()[1]);
}

TEST_F(CliTest, LatentDimMismatchFailsBeforeTraining) {
  toy_xy("toy.csv", 10, 0.1);
  const auto cfg = write("q.ini", "[network]\nlayers = 4:tanh, 2:tanh\n[model]\nlatent_dim = 3\n");
  const auto r = run({"train", path("toy.csv"), "--config", cfg.string(), "--out", path("m.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("latent_dim"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "m.trace.csv"));
}

TEST_F(CliTest, DivergenceKeepsPartialTrace) {
  toy_xy("toy.csv", 12, 0.1);
  const auto cfg = write("hot.ini", "[train]\nlearning_rate = 1e12\nsteps = 50\n");
  const auto r = run({"train", path("toy.csv"), "--config", cfg.string(), "--out", path("m.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("diverged"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "m.trace.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "m.json"));
}

TEST_F(CliTest, PredictInterpolatesNoiselessToy) {
  toy_xy("toy.csv", 15, 0.0);
  const auto cfg = write("t.ini",
                         "[network]\nlayers = 1:identity\n[model]\nnoise_sd = 0.01\n"
                         "[train]\nlearning_rate = 0.05\nsteps = 300\nslice_interval = 10\n");
  ASSERT_EQ(run({"train", path("toy.csv"), "--config", cfg.string(), "--out", path("m.json")}).code, 0);
  const auto r = run({"predict", path("m.json"), path("toy.csv"), "--out", path("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto truth = load_xy_csv(dir_ / "toy.csv");
  const auto pred = csv::read_numeric(dir_ / "p.csv");
  ASSERT_EQ(pred.header, (std::vector<std::string>{"y_1_mean", "y_1_lo", "y_1_hi"}));
  for (std::size_t i = 0; i < pred.rows.size(); ++i) {
    EXPECT_NEAR(pred.rows[i][0], truth.y(static_cast<Eigen::Index>(i), 0), 0.1);
    EXPECT_LE(pred.rows[i][1], pred.rows[i][0]);
    EXPECT_LE(pred.rows[i][0], pred.rows[i][2]);
  }
}

TEST_F(CliTest, PredictIntervalMatchesCovarianceDump) {
  toy_xy("toy.csv", 12, 0.2);
  ASSERT_EQ(run({"train", path("toy.csv"), "--out", path("m.json"), "--seed", "2"}).code, 0);
  const auto r = run({"predict", path("m.json"), path("toy.csv"), "--out", path("p.csv"), "--level", "0.90",
                      "--covariance", path("cov.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pred = csv::read_numeric(dir_ / "p.csv");
  const auto cov = csv::read_numeric(dir_ / "cov.csv");
  ASSERT_EQ(cov.rows.size(), pred.rows.size());
  for (std::size_t i = 0; i < pred.rows.size(); ++i) {
    const double width = pred.rows[i][2] - pred.rows[i][1];
    EXPECT_NEAR(width, 2.0 * 1.6448536269514722 * std::sqrt(cov.rows[i][3]), 1e-9 * (1.0 + width));
  }
}

TEST_F(CliTest, PredictRejectsBadQueries) {
  toy_xy("toy.csv", 8, 0.1);
  ASSERT_EQ(run({"train", path("toy.csv"), "--out", path("m.json")}).code, 0);
  write("empty.csv", "x_1\n");
  EXPECT_EQ(run({"predict", path("m.json"), path("empty.csv"), "--out", path("p.csv")}).code, 2);
  write("wide.csv", "x_1,x_2\n0.1,0.2\n");
  const auto r = run({"predict", path("m.json"), path("wide.csv"), "--out", path("p.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("d = 1"), std::string::npos);
  EXPECT_EQ(run({"predict", path("missing.json"), path("wide.csv")}).code, 2);
}

TEST_F(CliTest, BenchmarkModelFilter) {
  const std::string data = std::string(DLGP_SOURCE_DIR) + "/data/motorcycle.csv";
  const auto r =
      run({"benchmark-motorcycle", data, "--models", "gp", "--splits", "3", "--out", path("b.csv"), "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string report = slurp(dir_ / "b.csv");
  EXPECT_NE(report.find("GP,mean,"), std::string::npos);
  EXPECT_EQ(report.find("DL-GP,"), std::string::npos);
  EXPECT_NE(r.out.find("GP "), std::string::npos);
  EXPECT_NE(r.out.find("published:"), std::string::npos);
  EXPECT_EQ(run({"benchmark-motorcycle", data, "--models", "svm", "--splits", "1"}).code, 2);
}

TEST_F(CliTest, BenchmarkReducedRunEmitsEveryModel) {
  const std::string data = std::string(DLGP_SOURCE_DIR) + "/data/motorcycle.csv";
  const auto cfg = write("b.ini",
                         "[train]\nlearning_rate = 0.1\nsteps = 40\nslice_interval = 5\n"
                         "[benchmark]\nqdl_steps = 300\n");
  const auto r = run({"benchmark-motorcycle", data, "--config", cfg.string(), "--splits", "2", "--seed", "1", "--out",
                      path("b.csv"), "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string report = slurp(dir_ / "b.csv");
  for (const char* model : {"DL-GP,mean,", "GP,mean,", "Q-DL,mean,", "mean,mean,"})
    EXPECT_NE(report.find(model), std::string::npos) << model;
  const auto again = run({"benchmark-motorcycle", data, "--config", cfg.string(), "--splits", "2", "--seed", "1",
                          "--out", path("c.csv"), "--quiet"});
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(report, slurp(dir_ / "c.csv"));
}

TEST_F(CliTest, EvaluateCountsBandHits) {
  write("truth.csv", "x_1,y_1,y_2\n0,1,5\n1,2,9\n");
  write("pred.csv", "y_1_mean,y_1_lo,y_1_hi,y_2_mean,y_2_lo,y_2_hi\n1,0,2,5,4,6\n2,1,3,5,4,6\n");
  const auto r = run({"evaluate", "--pred", path("pred.csv"), "--truth", path("truth.csv"), "--out", path("e.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto e = csv::read_numeric(dir_ / "e.csv");
  EXPECT_DOUBLE_EQ(e.rows[0][1], 1.0);
  EXPECT_DOUBLE_EQ(e.rows[1][1], 0.5);
  EXPECT_DOUBLE_EQ(e.rows[1][2], std::sqrt(8.0));
  write("short.csv", "y_1_mean,y_1_lo,y_1_hi\n1,0,2\n");
  EXPECT_EQ(run({"evaluate", "--pred", path("short.csv"), "--truth", path("truth.csv")}).code, 2);
}

TEST_F(CliTest, FullPipelineFromOneConfig) {
  const auto cfg = write("pipe.ini",
                         "[scenario]\nm = 6\nreplicates = 8\nhorizon = 10\nseed = 2\n"
                         "[data]\nreplicates = out/reps.csv\ntrain = out/quantiles.csv\nlog1p_outputs = true\n"
                         "holdout = 1\n"
                         "[network]\nlayers = 4:tanh, 2:tanh\n[model]\nmode = per_output\n"
                         "[train]\nlearning_rate = 0.1\nsteps = 60\nslice_interval = 10\n"
                         "[output]\ndir = out\n");
  const std::string c = cfg.string();
  ASSERT_EQ(run({"simulate", "--config", c}).code, 0);
  ASSERT_EQ(run({"prep-quantiles", "--config", c}).code, 0);
  const auto t = run({"train", "--config", c});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto held = dir_ / "out" / "model.holdout.csv";
  EXPECT_EQ(read_quantile_design(held).rows(), 5);
  const auto p = run({"predict", path("out/model.json"), held.string(), "--config", c});
  ASSERT_EQ(p.code, 0) << p.err;
  const auto e = run({"evaluate", "--pred", path("out/predictions.csv"), "--truth", held.string(), "--out",
                      path("out/eval.csv")});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto pred = csv::read_numeric(dir_ / "out" / "predictions.csv");
  EXPECT_EQ(pred.header.size(), 30u);
  for (const auto& row : pred.rows)
    for (std::size_t i = 0; i < row.size(); i += 3) {
      EXPECT_LE(row[i + 1], row[i]);
      EXPECT_LE(row[i], row[i + 2]);
    }
}

TEST(Config, ParsesSectionsAndResolvesPaths) {
  const auto cfg = parse_config(
      "[data]\ntrain = sub/t.csv\nholdout = 3, 17\nlog1p_outputs = yes\n"
      "[network]\nlayers = 8:tanh, 4, 2:relu\n[model]\nmode = per_output\n"
      "[train]\nsteps = 12\n[quantiles]\nlevels = 0.1, 0.9\n[benchmark]\nmodels = GP, mean\n"
      "[scenario]\ntheta_5 = 0, 0.5\n",
      "/base");
  EXPECT_EQ(cfg.train_path, fs::path("/base/sub/t.csv"));
  EXPECT_EQ(cfg.holdout, (std::vector<long long>{3, 17}));
  EXPECT_TRUE(cfg.log1p_outputs);
  ASSERT_EQ(cfg.init.layers.size(), 3u);
  EXPECT_EQ(cfg.init.layers[1].width, 4);
  EXPECT_EQ(cfg.init.layers[1].activation, net::Activation::tanh);
  EXPECT_EQ(cfg.init.layers[2].activation, net::Activation::relu);
  EXPECT_EQ(format_layers(cfg.init.layers), "8:tanh, 4:tanh, 2:relu");
  EXPECT_EQ(cfg.init.mode, CovarianceMode::per_output);
  EXPECT_EQ(cfg.train.n_steps, 12u);
  EXPECT_TRUE(cfg.levels_from_file);
  EXPECT_EQ(cfg.models, (std::vector<std::string>{"gp", "mean"}));
  EXPECT_EQ(cfg.scenario.parameters[4].hi, 0.5);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("[train]\nstepz = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[train]\nsteps = -3\n"), ConfigError);
  EXPECT_THROW(parse_config("[train]\nlearning_rate = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("[network]\nlayers = 8:sigmoid\n"), ConfigError);
  EXPECT_THROW(parse_config("[quantiles]\nlevels = 0.5, 1.5\n"), ConfigError);
  EXPECT_THROW(parse_config("[scenario]\ntheta_1 = 2, 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nmode = diagonal\n"), ConfigError);
  EXPECT_THROW(parse_config("[data\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/x.ini"), InputError);
}

}  // namespace
