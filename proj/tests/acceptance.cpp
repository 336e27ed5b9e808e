// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// only with --strict; the default run reports and records the lines in
// acceptance_report.txt next to the binary's working directory.

#include <dlgp/adapters.hpp>
#include <dlgp/cli.hpp>
#include <dlgp/config.hpp>
#include <dlgp/dataset.hpp>
#include <dlgp/dlgp.hpp>
#include <dlgp/gp_core.hpp>
#include <dlgp/metrics.hpp>
#include <dlgp/net.hpp>
#include <dlgp/quantile.hpp>
#include <dlgp/sampler.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "model_fixtures.hpp"

namespace {

using namespace dlgp;
namespace fs = std::filesystem;

struct Reporter {
  std::ofstream file;
  int failures = 0;

  void line(int id, const std::string& name, bool ok, const std::string& detail) {
    std::ostringstream s;
    s << (ok ? "PASS" : "FAIL") << " " << id << " " << name << ": " << detail;
    std::cout << s.str() << std::endl;
    file << s.str() << "\n";
    file.flush();
    if (!ok) ++failures;
  }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::vector<const char*> argv{"dlgp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (code != 0) {
    std::cerr << "dlgp";
    for (const auto& a : args) std::cerr << " " << a;
    std::cerr << " -> exit " << code << "\n" << e.str();
  }
  return code;
}

// ---------------------------------------------------------------------------

void motorcycle(Reporter& rep, const fs::path& source, std::size_t splits, const fs::path& work) {
  ExperimentConfig cfg = load_config(source / "configs" / "motorcycle.ini");
  cfg.models = {"dlgp", "gp", "mean"};
  cfg.splits = splits;
  const TrainingDataset data = load_motorcycle(source / "data" / "motorcycle.csv");
  const auto plan = make_splits(static_cast<std::size_t>(data.size()), cfg.train_fraction, cfg.splits,
                                cfg.benchmark_seed);
  const auto report = benchmark(cli::make_factories(cfg, kMotorcycleQuantiles), data, plan);
  write_benchmark_csv(work / "motorcycle_benchmark.csv", report);
  print_benchmark_table(std::cout, report);

  const auto& dl = report.summary("DL-GP");
  const auto& gp = report.summary("GP");
  rep.line(1, "motorcycle NMSE", dl.nmse.mean <= 0.30 && gp.nmse.mean >= 0.15 && gp.nmse.mean <= 0.40,
           std::to_string(splits) + " splits, DL-GP " + fmt(dl.nmse.mean) + " (<= 0.30), GP " + fmt(gp.nmse.mean) +
               " (in [0.15, 0.40])");

  const auto dl_nlpd = report.column("DL-GP", &SplitResult::nlpd);
  const auto mean_nlpd = report.column("mean", &SplitResult::nlpd);
  std::size_t beaten = 0;
  for (std::size_t s = 0; s < dl_nlpd.size(); ++s) beaten += mean_nlpd[s] > dl_nlpd[s];
  const double frac = static_cast<double>(beaten) / static_cast<double>(dl_nlpd.size());
  const bool finite = std::isfinite(dl.nlpd.mean) && std::isfinite(dl.nlpd_std.mean) && dl.failures == 0;
  const bool vs_gp = dl.nlpd_std.mean <= gp.nlpd_std.mean;
  rep.line(2, "motorcycle NLPD", finite && vs_gp && frac >= 0.80,
           "DL-GP NLPD " + fmt(dl.nlpd.mean) + " original / " + fmt(dl.nlpd_std.mean) + " standardized; GP " +
               fmt(gp.nlpd_std.mean) + " standardized (DL-GP must be <=); mean baseline worse in " +
               fmt(100.0 * frac, 3) + "% of splits (>= 80%)");
}

void exact_reduction(Reporter& rep) {
  Rng rng(301);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.below(20));
    const double ell = 0.2 + 2.0 * rng.uniform(), nug = 1e-3 + 0.3 * rng.uniform(), noise = 0.05 + 0.5 * rng.uniform();
    const auto m = oracle::single_gp_model(ell, nug, noise);
    const Matrix x = oracle::random_matrix(rng, n, 1);
    const Matrix y = oracle::random_matrix(rng, n, 1);
    const Matrix query = oracle::random_matrix(rng, 5, 1, 1.5);
    PredictOptions opt;
    opt.original_scale = false;
    const auto preds = predict(m, TrainingDataset::from_standardized(x, y), query, opt);
    const auto post = gp::gp_posterior(x.col(0), y.col(0), query.col(0), {ell, nug + noise * noise}, 0.0, true);
    for (Eigen::Index r = 0; r < query.rows(); ++r) {
      const auto& pr = preds[static_cast<std::size_t>(r)];
      worst = std::max({worst, std::abs(pr.mean[0] - post.mean[r]), std::abs(pr.covariance(0, 0) - post.covariance(r, r))});
    }
  }
  rep.line(3, "exact GP reduction", worst <= 1e-8, "100 datasets, max |diff| " + fmt(worst, 3) + " (<= 1e-8)");
}

void conditioning(Reporter& rep) {
  Rng rng(302);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const int p = 1 + static_cast<int>(rng.below(3));
    const int q = 1 + static_cast<int>(rng.below(2));
    const auto n = static_cast<Eigen::Index>(1 + rng.below(8));
    const auto m = oracle::random_model(rng, d, p, q);
    const Matrix theta = oracle::random_matrix(rng, n, d);
    const Matrix y = oracle::random_matrix(rng, n, p);
    const Matrix query = oracle::random_matrix(rng, 1, d);
    const auto pred = predict(m, TrainingDataset::from_standardized(theta, y), query).front();
    const auto post = oracle::brute_force_posterior(m, theta, y, query);
    worst = std::max({worst, (pred.mean - post.mean).cwiseAbs().maxCoeff(),
                      (pred.covariance - post.cov).cwiseAbs().maxCoeff()});
  }
  rep.line(4, "conditioning oracle", worst <= 1e-8, "50 instances, max |diff| " + fmt(worst, 3) + " (<= 1e-8)");
}

// Normwise relative error of one gradient evaluation: the largest entry-wise
// difference over the largest finite-difference entry.
struct GradientError {
  double diff = 0.0, scale = 0.0;
  void add(double analytic, double fd) {
    diff = std::max(diff, std::abs(analytic - fd));
    scale = std::max(scale, std::abs(fd));
  }
  double relative() const { return diff / scale; }
};

void gradients(Reporter& rep) {
  double net_worst = 0.0;
  for (int point = 0; point < 20; ++point) {
    Rng rng(400 + static_cast<std::uint64_t>(point));
    auto params = net::init_network({{2, 4, net::Activation::tanh}, {4, 3, net::Activation::tanh},
                                     {3, 2, net::Activation::identity}},
                                    rng.bits());
    for (auto& layer : params.layers) layer.bias = oracle::random_vector(rng, layer.bias.size(), 0.3);
    const Matrix theta = oracle::random_matrix(rng, 5, 2), g = oracle::random_matrix(rng, 5, 2);
    net::ForwardCache cache;
    net::forward(params, theta, &cache);
    const auto back = net::backward(params, cache, g);
    GradientError err;
    auto loss = [&](const net::NetworkParams& p) { return net::forward(p, theta).cwiseProduct(g).sum(); };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      for (Eigen::Index i = 0; i < params.layers[l].weight.size(); ++i) {
        const double fd = oracle::central_difference(
            [&](double v) {
              auto p = params;
              p.layers[l].weight.data()[i] = v;
              return loss(p);
            },
            params.layers[l].weight.data()[i]);
        err.add(back.grads.layers[l].weight.data()[i], fd);
      }
      for (Eigen::Index i = 0; i < params.layers[l].bias.size(); ++i) {
        const double fd = oracle::central_difference(
            [&](double v) {
              auto p = params;
              p.layers[l].bias[i] = v;
              return loss(p);
            },
            params.layers[l].bias[i]);
        err.add(back.grads.layers[l].bias[i], fd);
      }
    }
    net_worst = std::max(net_worst, err.relative());
  }

  double dl_worst = 0.0;
  for (int point = 0; point < 20; ++point) {
    Rng rng(500 + static_cast<std::uint64_t>(point));
    const auto mode = point % 2 ? CovarianceMode::per_output : CovarianceMode::full;
    const auto m = oracle::random_model(rng, 2, 3, 2, mode);
    const auto data =
        TrainingDataset::from_standardized(oracle::random_matrix(rng, 6, 2), oracle::random_matrix(rng, 6, 3));
    const auto g = dlgp_gradients(m, data);
    GradientError err;
    auto check = [&](double analytic, const std::function<void(DlgpModel&, double)>& set, double x0) {
      const double fd = oracle::central_difference(
          [&](double v) {
            DlgpModel mm = m;
            set(mm, v);
            return dlgp_log_marginal(mm, data);
          },
          x0);
      err.add(analytic, fd);
    };
    for (Eigen::Index i = 0; i < m.mixture.size(); ++i)
      check(g.mixture.data()[i], [i](DlgpModel& x, double v) { x.mixture.data()[i] = v; }, m.mixture.data()[i]);
    for (Eigen::Index i = 0; i < m.bias.size(); ++i)
      check(g.bias[i], [i](DlgpModel& x, double v) { x.bias[i] = v; }, m.bias[i]);
    for (Eigen::Index i = 0; i < m.noise_sd.size(); ++i)
      check(g.log_noise_sd[i], [i](DlgpModel& x, double v) { x.noise_sd[i] = std::exp(v); }, std::log(m.noise_sd[i]));
    for (std::size_t l = 0; l < m.network.layers.size(); ++l) {
      for (Eigen::Index i = 0; i < m.network.layers[l].weight.size(); ++i)
        check(g.network.layers[l].weight.data()[i],
              [l, i](DlgpModel& x, double v) { x.network.layers[l].weight.data()[i] = v; },
              m.network.layers[l].weight.data()[i]);
      for (Eigen::Index i = 0; i < m.network.layers[l].bias.size(); ++i)
        check(g.network.layers[l].bias[i], [l, i](DlgpModel& x, double v) { x.network.layers[l].bias[i] = v; },
              m.network.layers[l].bias[i]);
    }
    dl_worst = std::max(dl_worst, err.relative());
  }
  rep.line(5, "gradient suite", net_worst < 1e-5 && dl_worst < 1e-4,
           "20 points each, normwise rel err: network " + fmt(net_worst, 3) + " (< 1e-5), likelihood " +
               fmt(dl_worst, 3) + " (< 1e-4)");
}

void slice_sampler(Reporter& rep) {
  bool membership = true;
  Rng rng(600);
  const auto normal = [](double x) { return -0.5 * x * x; };
  double x = 0.0, sum = 0.0, sq = 0.0;
  const int n = 20000;
  try {
    for (int i = 0; i < n; ++i) {
      const auto d = sampler::slice_sample_1d(normal, x, {}, rng);
      membership = membership && d.log_density >= d.log_height && normal(d.value) == d.log_density;
      x = d.value;
      sum += x;
      sq += x * x;
    }
  } catch (const InternalError&) {
    membership = false;
  }
  const double mean = sum / n, var = sq / n - mean * mean;

  const double rho = 0.95;
  const auto corr = [rho](const Vector& v) {
    return -0.5 * (v[0] * v[0] - 2 * rho * v[0] * v[1] + v[1] * v[1]) / (1 - rho * rho);
  };
  Vector v = Vector::Zero(2);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const int m = 50000;
  try {
    for (int i = 0; i < m; ++i) {
      const auto d = sampler::slice_sample_hypercube(corr, v, {}, rng);
      membership = membership && d.log_density >= d.log_height;
      v = d.value;
      sx += v[0];
      sy += v[1];
      sxx += v[0] * v[0];
      syy += v[1] * v[1];
      sxy += v[0] * v[1];
    }
  } catch (const InternalError&) {
    membership = false;
  }
  const double mx = sx / m, my = sy / m;
  const double emp = (sxy / m - mx * my) / std::sqrt((sxx / m - mx * mx) * (syy / m - my * my));
  rep.line(6, "slice sampler",
           std::abs(mean) <= 0.05 && var >= 0.9 && var <= 1.1 && std::abs(emp - rho) <= 0.05 && membership,
           "N(0,1) 20000 draws mean " + fmt(mean, 3) + " var " + fmt(var) + "; 2d rho " + fmt(emp) +
               " (0.95 +- 0.05); membership " + (membership ? "held" : "violated"));
}

// Three regimes on x in [0, 3]: flat with tiny noise, volatile with large
// noise, then a decay with moderate noise.
struct Regime {
  double lo, hi, sd;
};
const Regime kRegimes[] = {{0.0, 1.0, 0.05}, {1.0, 2.0, 0.6}, {2.0, 3.0, 0.2}};

double regime_mean(double x) {
  if (x < 1.0) return 0.0;
  if (x < 2.0) return std::sin(6.0 * (x - 1.0)) * 1.2;
  return std::sin(6.0) * 1.2 * std::exp(-2.0 * (x - 2.0));
}

int regime_of(double x) { return x < 1.0 ? 0 : (x < 2.0 ? 1 : 2); }

void heteroskedastic(Reporter& rep, const fs::path& source) {
  const ExperimentConfig cfg = load_config(source / "configs" / "motorcycle.ini");
  Rng rng(700);
  const int sites = 60, train_reps = 4, test_reps = 5;
  std::vector<double> xs;
  for (int s = 0; s < sites; ++s) xs.push_back(3.0 * (s + rng.uniform()) / sites);
  auto draw = [&](int reps, Matrix& x, Matrix& y) {
    x.resize(sites * reps, 1);
    y.resize(sites * reps, 1);
    for (int s = 0; s < sites; ++s)
      for (int r = 0; r < reps; ++r) {
        const double xv = xs[static_cast<std::size_t>(s)];
        x(s * reps + r, 0) = xv;
        y(s * reps + r, 0) = regime_mean(xv) + kRegimes[regime_of(xv)].sd * rng.normal();
      }
  };
  Matrix x_train, y_train, x_test, y_test;
  draw(train_reps, x_train, y_train);
  draw(test_reps, x_test, y_test);
  const TrainingDataset train = TrainingDataset::raw(x_train, y_train);

  ModelInit init = cfg.init;
  TrainConfig tc = cfg.train;
  init.seed = tc.seed = 7;
  DlgpAdapter dl(init, tc, 0.90);
  PlainGpAdapter gp(0.90);
  dl.fit(train);
  gp.fit(train);

  auto per_regime = [&](const AdapterPrediction& pred, double& overall) {
    std::array<double, 3> hit{}, count{};
    for (Eigen::Index r = 0; r < x_test.rows(); ++r) {
      const int g = regime_of(x_test(r, 0));
      hit[g] += (y_test(r, 0) >= pred.lo(r, 0) && y_test(r, 0) <= pred.hi(r, 0));
      count[g] += 1;
    }
    overall = (hit[0] + hit[1] + hit[2]) / (count[0] + count[1] + count[2]);
    return std::array<double, 3>{hit[0] / count[0], hit[1] / count[1], hit[2] / count[2]};
  };
  double dl_all = 0, gp_all = 0;
  const auto dl_reg = per_regime(dl.predict(x_test), dl_all);
  const auto gp_reg = per_regime(gp.predict(x_test), gp_all);
  const double gap = 100.0 * std::abs(gp_reg[0] - gp_reg[1]);
  auto pct = [](double v) { return fmt(100.0 * v, 3) + "%"; };
  rep.line(7, "heteroskedastic coverage", dl_all >= 0.80 && dl_all <= 0.97 && gap > 15.0,
           "DL-GP 90% coverage " + pct(dl_all) + " (in [80%, 97%]; low/high/moderate " + pct(dl_reg[0]) + "/" +
               pct(dl_reg[1]) + "/" + pct(dl_reg[2]) + "), GP low/high-noise gap " + fmt(gap, 3) +
               " points (> 15; GP " + pct(gp_reg[0]) + "/" + pct(gp_reg[1]) + "/" + pct(gp_reg[2]) + ")");
}

// Runs the desk-scale trajectory pipeline into `dir`. Returns false when a
// step exits nonzero.
bool trajectory_pipeline(const fs::path& config, const fs::path& dir, std::string* summary) {
  fs::create_directories(dir);
  const std::string c = config.string();
  const auto at = [&](const char* name) { return (dir / name).string(); };
  return cli({"simulate", "--config", c, "--out", at("replicates.csv")}) == 0 &&
         cli({"prep-quantiles", at("replicates.csv"), "--config", c, "--out", at("quantiles.csv")}) == 0 &&
         cli({"train", at("quantiles.csv"), "--config", c, "--out", at("model.json")}) == 0 &&
         cli({"predict", at("model.json"), at("model.holdout.csv"), "--config", c, "--out", at("predictions.csv")}) ==
             0 &&
         cli({"evaluate", "--pred", at("predictions.csv"), "--truth", at("model.holdout.csv"), "--out",
              at("evaluation.csv")},
             summary) == 0;
}

void trajectory(Reporter& rep, const fs::path& source, const fs::path& work) {
  const fs::path config = source / "configs" / "trajectory.ini";
  const ExperimentConfig cfg = load_config(config);
  std::string summary;
  if (!trajectory_pipeline(config, work / "trajectory", &summary)) {
    rep.line(8, "trajectory experiment", false, "pipeline step failed (see stderr)");
    return;
  }
  const auto table = csv::read_numeric(work / "trajectory" / "evaluation.csv");
  std::set<long long> scenarios;
  double worst = 1.0;
  std::ostringstream rows;
  for (const auto& r : table.rows) {
    scenarios.insert(static_cast<long long>(r[1]));
    worst = std::min(worst, r[3]);
    rows << " s" << r[1] << "/a" << r[2] << "=" << fmt(100.0 * r[3], 3) << "%";
  }
  const bool shape = cfg.scenarios == 20 && cfg.replicates == 50 && cfg.horizon == 56 && scenarios.size() == 2;
  rep.line(8, "trajectory experiment", shape && worst >= 0.60,
           "m=" + std::to_string(cfg.scenarios) + " n=" + std::to_string(cfg.replicates) +
               " T=" + std::to_string(cfg.horizon) + ", " + std::to_string(scenarios.size()) +
               " held-out scenarios, worst row " + fmt(100.0 * worst, 3) + "% (>= 60%);" + rows.str());
}

void determinism(Reporter& rep, const fs::path& source, const fs::path& work) {
  const fs::path config = source / "configs" / "trajectory.ini";
  bool ok = trajectory_pipeline(config, work / "trajectory_rerun", nullptr);
  std::vector<std::string> differing;
  std::size_t compared = 0;
  if (ok)
    for (const auto& entry : fs::directory_iterator(work / "trajectory")) {
      const fs::path other = work / "trajectory_rerun" / entry.path().filename();
      ++compared;
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) differing.push_back(entry.path().filename().string());
    }

  const std::string moto = (source / "configs" / "motorcycle.ini").string();
  const std::string data = (source / "data" / "motorcycle.csv").string();
  for (const char* name : {"bench_a.csv", "bench_b.csv"})
    ok = ok && cli({"benchmark-motorcycle", data, "--config", moto, "--splits", "2", "--quiet", "--out",
                    (work / name).string()}) == 0;
  if (ok) {
    ++compared;
    if (slurp(work / "bench_a.csv") != slurp(work / "bench_b.csv")) differing.push_back("benchmark report");
  }
  std::string detail = std::to_string(compared) + " artifacts from simulate, prep-quantiles, train, predict, "
                       "evaluate and benchmark-motorcycle compared byte for byte";
  for (const auto& d : differing) detail += "; differs: " + d;
  if (!ok) detail += "; a command failed";
  rep.line(9, "determinism", ok && differing.empty() && compared > 0, detail);
}

void quantile_invariants(Reporter& rep) {
  Rng rng(900);
  bool monotone = true;
  for (int trial = 0; trial < 200 && monotone; ++trial) {
    const auto reps = static_cast<Eigen::Index>(1 + rng.below(40));
    const auto t = static_cast<Eigen::Index>(1 + rng.below(10));
    Matrix r = oracle::random_matrix(rng, reps, t, 10.0);
    if (trial % 3 == 0) r = r.array().round();
    std::vector<double> qs;
    const auto k = 1 + rng.below(7);
    for (std::size_t i = 0; i < k; ++i) qs.push_back((i + 0.5 + 0.49 * (rng.uniform() - 0.5)) / static_cast<double>(k));
    const Matrix out = empirical_quantiles(r, qs);
    for (Eigen::Index a = 1; a < out.rows(); ++a)
      for (Eigen::Index c = 0; c < out.cols(); ++c) monotone = monotone && out(a, c) >= out(a - 1, c);
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      monotone = monotone && out(0, c) >= r.col(c).minCoeff() && out(out.rows() - 1, c) <= r.col(c).maxCoeff();
  }
  const bool hand = pinball_mse_loss(2.0, 2.0, 0.3) == 0.0 && pinball_mse_loss(1.0, 0.0, 0.5) == 1.5 &&
                    pinball_mse_loss(0.0, 1.0, 0.95) == 1.95;
  rep.line(10, "quantile invariants", monotone && hand,
           std::string("empirical quantiles monotone over 200 random tables: ") + (monotone ? "yes" : "no") +
               "; loss hand values 0, 1.5, 1.95: " + (hand ? "exact" : "mismatch"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::size_t splits = 30;
  bool strict = false;
  std::string work_dir = "acceptance_work", only;
  app.add_option("--splits", splits, "motorcycle benchmark splits (300 for the full protocol)");
  app.add_option("--work", work_dir, "scratch directory for pipeline artifacts");
  app.add_option("--only", only, "comma list of criterion numbers");
  app.add_flag("--strict", strict, "exit nonzero when any criterion fails");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected;
  std::stringstream ss(only);
  for (std::string tok; std::getline(ss, tok, ',');) selected.insert(std::stoi(tok));
  const auto want = [&](int id) { return selected.empty() || selected.count(id) > 0; };

  const fs::path source = DLGP_SOURCE_DIR;
  const fs::path work = fs::absolute(work_dir);
  fs::remove_all(work);
  fs::create_directories(work);
  Reporter rep{std::ofstream("acceptance_report.txt")};
  const auto start = std::chrono::steady_clock::now();

  auto guarded = [&](int id, const std::string& name, const std::function<void()>& f) {
    if (!want(id)) return;
    try {
      f();
    } catch (const std::exception& e) {
      rep.line(id, name, false, std::string("threw: ") + e.what());
      if (id == 1) rep.line(2, "motorcycle NLPD", false, "benchmark did not complete");
    }
  };
  guarded(1, "motorcycle NMSE", [&] { motorcycle(rep, source, splits, work); });
  guarded(3, "exact GP reduction", [&] { exact_reduction(rep); });
  guarded(4, "conditioning oracle", [&] { conditioning(rep); });
  guarded(5, "gradient suite", [&] { gradients(rep); });
  guarded(6, "slice sampler", [&] { slice_sampler(rep); });
  guarded(7, "heteroskedastic coverage", [&] { heteroskedastic(rep, source); });
  guarded(8, "trajectory experiment", [&] { trajectory(rep, source, work); });
  guarded(9, "determinism", [&] {
    if (!fs::exists(work / "trajectory")) trajectory_pipeline(source / "configs" / "trajectory.ini", work / "trajectory", nullptr);
    determinism(rep, source, work);
  });
  guarded(10, "quantile invariants", [&] { quantile_invariants(rep); });

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << rep.failures << " criteria failed, " << fmt(secs, 4) << " s\n";
  return strict && rep.failures > 0 ? 1 : 0;
}
