#ifndef DLGP_CLI_HPP
#define DLGP_CLI_HPP

// Command-line driver. Exit status 0 on success, 2 on a user or
// configuration error, 1 on an internal failure. Data goes to files or
// `out`; diagnostics go to `err`.

#include "adapters.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "dataset.hpp"
#include "design.hpp"
#include "dlgp.hpp"
#include "epidemic.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "model_io.hpp"
#include "quantile.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dlgp::cli {

namespace fs = std::filesystem;

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// ---------------------------------------------------------------------------
// Shared helpers

inline ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_config(path);
}

inline fs::path output_path(const std::string& flag, const ExperimentConfig& cfg, const std::string& fallback) {
  if (!flag.empty()) return flag;
  return cfg.output_dir / fallback;
}

inline void ensure_parent(const fs::path& path) {
  const auto dir = path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
}

/// `<dir>/<stem><suffix>` next to `path`.
inline fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

inline std::vector<std::string> read_header(const fs::path& path) {
  auto in = csv::open_input(path);
  std::string line;
  while (std::getline(in, line))
    if (!csv::trim(line).empty() && line.front() != '#') return csv::split(line);
  throw InputError(path.string() + " is empty");
}

inline DataFormat detect_format(const fs::path& path, DataFormat requested) {
  if (requested != DataFormat::auto_detect) return requested;
  const auto header = read_header(path);
  if (std::find(header.begin(), header.end(), "alpha") != header.end()) return DataFormat::quantile_design;
  if (!header.empty() && has_prefix(header.front(), "x_")) return DataFormat::xy;
  if (header.size() == 2) return DataFormat::motorcycle;
  throw InputError(path.string() + ": cannot tell the file format from its header; set data.format");
}

inline Matrix log1p_checked(const Matrix& y) {
  if ((y.array() <= -1.0).any()) throw DomainError("log1p_outputs needs every output above -1");
  return y.array().log1p().matrix();
}

struct TrainingInput {
  TrainingDataset data;  // raw units, after any output transform
  QuantileDesign holdout;
  bool quantile_design = false;
};

inline TrainingInput load_training(const fs::path& path, const ExperimentConfig& cfg) {
  TrainingInput in;
  switch (detect_format(path, cfg.format)) {
    case DataFormat::quantile_design: {
      const QuantileDesign all = read_quantile_design(path);
      for (long long id : cfg.holdout)
        if (std::find(all.scenario_id.begin(), all.scenario_id.end(), id) == all.scenario_id.end())
          throw ConfigError("holdout scenario " + std::to_string(id) + " is not in " + path.string());
      auto [kept, held] = all.split_out(cfg.holdout);
      in.data = kept.to_dataset();
      in.holdout = std::move(held);
      in.quantile_design = true;
      break;
    }
    case DataFormat::motorcycle: in.data = load_motorcycle(path); break;
    default: in.data = load_xy_csv(path); break;
  }
  if (!cfg.holdout.empty() && !in.quantile_design) throw ConfigError("data.holdout needs a quantile-design file");
  if (in.data.size() == 0) throw InputError(path.string() + ": no training rows");
  if (cfg.log1p_outputs) in.data.y = log1p_checked(in.data.y);
  return in;
}

/// Query inputs: x_ columns of an xy CSV, or theta and alpha of a
/// quantile-design CSV.
inline Matrix load_query(const fs::path& path) {
  const auto header = read_header(path);
  if (std::find(header.begin(), header.end(), "alpha") != header.end())
    return read_quantile_design(path).to_dataset().theta;
  const csv::Table table = csv::read_numeric(path);
  std::vector<std::size_t> xcols;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (has_prefix(table.header[c], "x_")) xcols.push_back(c);
  if (xcols.empty()) throw InputError(path.string() + ": query needs x_1..x_d columns (or a quantile-design file)");
  if (table.rows.empty()) throw InputError(path.string() + ": query has no rows");
  Matrix q(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(xcols.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t c = 0; c < xcols.size(); ++c)
      q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table.rows[r][xcols[c]];
  return q;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> m, replicates, horizon;
};

inline int cmd_simulate(const SimulateArgs& a, Context& ctx) {
  ExperimentConfig cfg = config_or_default(a.config);
  const std::uint64_t seed = a.seed.value_or(cfg.scenario_seed);
  const std::size_t m = a.m.value_or(cfg.scenarios);
  const std::size_t n = a.replicates.value_or(cfg.replicates);
  const std::size_t horizon = a.horizon.value_or(cfg.horizon);
  if (cfg.scenario.parameters.size() != 5) throw ConfigError("the epidemic simulator needs five parameters");
  const Matrix design = symmetric_lhs(m, cfg.scenario, seed);
  const ReplicateTable table = simulate_design(design, n, horizon, seed, cfg.scenario);
  const fs::path out =
      a.out.empty() && !cfg.replicates_path.empty() ? cfg.replicates_path : output_path(a.out, cfg, "replicates.csv");
  ensure_parent(out);
  write_replicate_csv(out, table);
  write_design_csv(sibling(out, ".design.csv"), design);
  ctx.out << "wrote " << table.rows() << " trajectories (" << m << " scenarios x " << n << " replicates, " << horizon
          << " weeks) to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// prep-quantiles

struct PrepArgs {
  std::string config, input, out;
};

inline int cmd_prep_quantiles(const PrepArgs& a, Context& ctx) {
  ExperimentConfig cfg = config_or_default(a.config);
  const fs::path input = a.input.empty() ? cfg.replicates_path : fs::path(a.input);
  if (input.empty()) throw ConfigError("no replicate file given (positional argument or data.replicates)");
  validate_quantile_levels(cfg.levels);
  const ReplicateTable table = read_replicate_csv(input);
  const auto scenarios = table.by_scenario();
  Matrix designs(static_cast<Eigen::Index>(scenarios.size()), table.theta.cols());
  std::vector<Matrix> blocks;
  std::vector<long long> ids;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    designs.row(static_cast<Eigen::Index>(s)) = scenarios[s].theta.transpose();
    blocks.push_back(empirical_quantiles(scenarios[s].trajectories, cfg.levels));
    ids.push_back(scenarios[s].id);
  }
  const QuantileDesign design = augment_with_alpha(designs, blocks, cfg.levels, ids);
  const fs::path out =
      a.out.empty() && !cfg.train_path.empty() ? cfg.train_path : output_path(a.out, cfg, "quantiles.csv");
  ensure_parent(out);
  write_quantile_design(out, design);
  ctx.out << "read " << table.rows() << " trajectories in " << scenarios.size() << " scenarios; wrote "
          << design.rows() << " quantile rows to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config, data, out;
  std::optional<std::uint64_t> seed;
};

inline void write_trace(const fs::path& path, const std::vector<double>& trace) {
  csv::Writer w(path);
  w.header({"step", "log_likelihood"});
  for (std::size_t s = 0; s < trace.size(); ++s) {
    w.cell(s + 1).cell(trace[s]);
    w.end_row();
  }
  w.close();
}

inline int cmd_train(const TrainArgs& a, Context& ctx) {
  ExperimentConfig cfg = config_or_default(a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  cfg.init.seed = cfg.train.seed;
  const fs::path data_path = a.data.empty() ? cfg.train_path : fs::path(a.data);
  if (data_path.empty()) throw ConfigError("no training file given (positional argument or data.train)");
  const TrainingInput input = load_training(data_path, cfg);
  const TrainingDataset data = standardize(input.data);
  for (const auto& w : data.warnings) ctx.err << "warning: " << w << "\n";

  const fs::path out = output_path(a.out, cfg, "model.json");
  ensure_parent(out);
  const fs::path trace_path = sibling(out, ".trace.csv");
  const DlgpModel start = init_model(data, cfg.init);
  if (cfg.init.mode == CovarianceMode::full) detail::check_cap(start, data.size());

  TrainResult result;
  try {
    result = train(start, data, cfg.train);
  } catch (const TrainingError& e) {
    write_trace(trace_path, e.partial_trace());
    ctx.err << "error: training diverged at " << e.what() << "\n";
    ctx.err << "partial trace: " << trace_path.string() << "\n";
    ctx.err << "hint: lower train.learning_rate (now " << cfg.train.learning_rate << ")\n";
    return 1;
  }
  write_trace(trace_path, result.trace);
  for (const auto& d : result.diagnostics) ctx.err << "warning: " << d << "\n";
  const std::string transform = cfg.log1p_outputs ? "log1p" : "none";
  save_model(out, result.model, data, transform);
  if (input.quantile_design && input.holdout.rows() > 0) {
    const fs::path held = sibling(out, ".holdout.csv");
    write_quantile_design(held, input.holdout);
    ctx.out << "held out " << input.holdout.rows() << " rows to " << held.string() << "\n";
  }
  const double final_ll = dlgp_log_marginal(result.model, data);
  ctx.out << "trained on " << data.size() << " rows (d = " << data.input_dim() << ", p = " << data.output_dim()
          << ", q = " << result.model.latent_dim() << ") for " << cfg.train.n_steps
          << " steps; final log likelihood " << csv::format_double(final_ll) << "\n";
  ctx.out << "model: " << out.string() << "\ntrace: " << trace_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string config, model, query, out, covariance;
  std::optional<double> level;
  bool latent = false;
};

inline int cmd_predict(const PredictArgs& a, Context& ctx) {
  ExperimentConfig cfg = config_or_default(a.config);
  if (a.model.empty()) throw ConfigError("predict needs a model file");
  const SavedModel saved = load_model(a.model);
  for (const auto& w : saved.warnings) ctx.err << "warning: " << w << "\n";
  const fs::path query_path = a.query.empty() ? cfg.query_path : fs::path(a.query);
  if (query_path.empty()) throw ConfigError("no query file given (positional argument or data.query)");
  const Matrix query = load_query(query_path);
  if (query.rows() == 0) throw InputError(query_path.string() + ": query has no rows");

  PredictOptions opt;
  opt.level = a.level.value_or(cfg.predict_level);
  if (!(opt.level > 0.0 && opt.level < 1.0)) throw ConfigError("--level must lie in (0, 1)");
  opt.include_noise = cfg.include_noise && !a.latent;
  const auto preds = predict(saved.model, saved.data, query, opt);
  const bool back = saved.output_transform == "log1p";
  auto map = [&](double v) { return back ? std::expm1(v) : v; };

  const auto p = static_cast<std::size_t>(saved.model.output_dim());
  const fs::path out = output_path(a.out, cfg, "predictions.csv");
  ensure_parent(out);
  csv::Writer w(out);
  std::vector<std::string> header;
  for (std::size_t i = 1; i <= p; ++i)
    for (const char* part : {"_mean", "_lo", "_hi"}) header.push_back("y_" + std::to_string(i) + part);
  w.header(header);
  for (const auto& pr : preds) {
    for (Eigen::Index i = 0; i < pr.mean.size(); ++i) w.cell(map(pr.mean[i])).cell(map(pr.lo[i])).cell(map(pr.hi[i]));
    w.end_row();
  }
  w.close();

  if (!a.covariance.empty()) {
    csv::Writer c(a.covariance);
    c.header({"row", "i", "j", "covariance"});
    for (std::size_t r = 0; r < preds.size(); ++r)
      for (Eigen::Index i = 0; i < preds[r].covariance.rows(); ++i)
        for (Eigen::Index j = 0; j < preds[r].covariance.cols(); ++j) {
          c.cell(r).cell(static_cast<std::size_t>(i + 1)).cell(static_cast<std::size_t>(j + 1));
          c.cell(preds[r].covariance(i, j));
          c.end_row();
        }
    c.close();
  }
  ctx.out << "wrote " << preds.size() << " predictions (" << p << " outputs, level " << opt.level
          << (back ? ", mapped back through expm1" : "") << ") to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// benchmark-motorcycle

struct BenchmarkArgs {
  std::string config, data, out, models;
  std::optional<std::size_t> splits;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

inline std::vector<AdapterFactory> make_factories(const ExperimentConfig& cfg, const std::vector<double>& levels) {
  std::vector<AdapterFactory> out;
  for (const auto& name : cfg.models) {
    if (name == "dlgp") {
      out.push_back({"DL-GP", [init = cfg.init, train = cfg.train, level = cfg.predict_level](std::uint64_t s) {
                       ModelInit i = init;
                       TrainConfig t = train;
                       i.seed = s;
                       t.seed = s;
                       return std::make_unique<DlgpAdapter>(i, t, level);
                     }});
    } else if (name == "gp") {
      out.push_back({"GP", [level = cfg.predict_level](std::uint64_t) {
                       return std::make_unique<PlainGpAdapter>(level);
                     }});
    } else if (name == "qdl") {
      out.push_back({"Q-DL", [levels, hidden = cfg.qdl_hidden, qdl = cfg.qdl](std::uint64_t s) {
                       QuantileTrainConfig c = qdl;
                       c.seed = s;
                       return std::make_unique<QuantileDlAdapter>(levels, hidden, c);
                     }});
    } else if (name == "mean") {
      out.push_back({"mean", [level = cfg.predict_level](std::uint64_t) {
                       return std::make_unique<MeanAdapter>(level);
                     }});
    }
  }
  return out;
}

inline fs::path default_motorcycle_path() {
  if (const char* cache = std::getenv("DLGP_CACHE_DIR"); cache && *cache) return fs::path(cache) / "motorcycle.csv";
  return fs::path("data") / "motorcycle.csv";
}

inline int cmd_benchmark(const BenchmarkArgs& a, Context& ctx) {
  ExperimentConfig cfg = config_or_default(a.config);
  if (!a.models.empty()) cfg.models = parse_models(a.models);
  if (a.splits) cfg.splits = *a.splits;
  if (a.seed) cfg.benchmark_seed = *a.seed;
  if (cfg.splits < 1) throw ConfigError("--splits must be positive");
  fs::path data_path = a.data;
  if (data_path.empty()) data_path = cfg.motorcycle_path.empty() ? default_motorcycle_path() : cfg.motorcycle_path;
  if (!fs::exists(data_path))
    throw InputError("file not found: " + data_path.string() + " (run tools/fetch_motorcycle.sh)");
  const TrainingDataset data = load_motorcycle(data_path);
  for (const auto& w : data.warnings) ctx.err << "warning: " << w << "\n";

  const auto plan = make_splits(static_cast<std::size_t>(data.size()), cfg.train_fraction, cfg.splits,
                                cfg.benchmark_seed);
  const auto levels = cfg.levels_from_file ? cfg.levels : kMotorcycleQuantiles;
  ProgressFn progress;
  if (!a.quiet)
    progress = [&](const SplitResult& r) {
      ctx.err << r.model << " split " << r.split_id + 1 << "/" << cfg.splits
              << (r.ok ? " nmse " + csv::format_double(r.nmse) : " failed: " + r.error) << "\n";
    };
  const BenchmarkReport report = benchmark(make_factories(cfg, levels), data, plan, progress);
  const fs::path out = output_path(a.out, cfg, "benchmark.csv");
  ensure_parent(out);
  write_benchmark_csv(out, report);
  print_benchmark_table(ctx.out, report);
  ctx.out << "report: " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string predictions, truth, out;
};

inline int cmd_evaluate(const EvaluateArgs& a, Context& ctx) {
  if (a.predictions.empty() || a.truth.empty()) throw ConfigError("evaluate needs --pred and --truth");
  const auto header = read_header(a.truth);
  const bool quantile = std::find(header.begin(), header.end(), "alpha") != header.end();
  QuantileDesign design;
  Matrix truth;
  if (quantile) {
    design = read_quantile_design(a.truth);
    truth = design.trajectory;
  } else {
    truth = load_xy_csv(a.truth).y;
  }
  const csv::Table pred = csv::read_numeric(a.predictions);
  const auto p = static_cast<std::size_t>(truth.cols());
  if (pred.header.size() != 3 * p)
    throw InputError(a.predictions + ": expected " + std::to_string(3 * p) + " columns (mean, lo, hi for " +
                     std::to_string(p) + " outputs), found " + std::to_string(pred.header.size()));
  if (pred.rows.size() != static_cast<std::size_t>(truth.rows()))
    throw InputError(a.predictions + " has " + std::to_string(pred.rows.size()) + " rows but " + a.truth + " has " +
                     std::to_string(truth.rows()));

  const fs::path out = a.out.empty() ? fs::path("evaluation.csv") : fs::path(a.out);
  ensure_parent(out);
  csv::Writer w(out);
  if (quantile)
    w.header({"row", "scenario_id", "alpha", "band_coverage", "rmse"});
  else
    w.header({"row", "band_coverage", "rmse"});
  double total_cov = 0.0, worst = 1.0;
  for (std::size_t r = 0; r < pred.rows.size(); ++r) {
    std::size_t inside = 0;
    double sq = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      const double y = truth(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
      const double mean = pred.rows[r][3 * i], lo = pred.rows[r][3 * i + 1], hi = pred.rows[r][3 * i + 2];
      inside += (y >= lo && y <= hi);
      sq += (y - mean) * (y - mean);
    }
    const double cov = static_cast<double>(inside) / static_cast<double>(p);
    total_cov += cov;
    worst = std::min(worst, cov);
    w.cell(r);
    if (quantile) w.cell(design.scenario_id[r]).cell(design.alpha[static_cast<Eigen::Index>(r)]);
    w.cell(cov).cell(std::sqrt(sq / static_cast<double>(p)));
    w.end_row();
  }
  w.close();
  ctx.out << "rows " << pred.rows.size() << ", mean band coverage "
          << csv::format_double(total_cov / static_cast<double>(pred.rows.size())) << ", worst row "
          << csv::format_double(worst) << "\nevaluation: " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Context ctx{out, err};
  CLI::App app{"Deep-latent Gaussian process surrogates", "dlgp"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "symmetric LHS design and replicate epidemic trajectories");
  c_sim->add_option("--config", sim.config, "experiment INI file");
  c_sim->add_option("--out", sim.out, "replicate CSV (a .design.csv is written alongside)");
  c_sim->add_option("--seed", sim.seed);
  c_sim->add_option("--m", sim.m, "number of scenarios (even)");
  c_sim->add_option("--replicates", sim.replicates);
  c_sim->add_option("--horizon", sim.horizon, "weeks");

  PrepArgs prep;
  auto* c_prep = app.add_subcommand("prep-quantiles", "collapse replicates into empirical quantile trajectories");
  c_prep->add_option("input", prep.input, "replicate CSV");
  c_prep->add_option("--config", prep.config);
  c_prep->add_option("--out", prep.out);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "fit a DL-GP and write the model file and likelihood trace");
  c_train->add_option("data", tr.data, "training CSV (xy, quantile design or motorcycle)");
  c_train->add_option("--config", tr.config);
  c_train->add_option("--out", tr.out, "model file");
  c_train->add_option("--seed", tr.seed);

  PredictArgs pr;
  auto* c_pred = app.add_subcommand("predict", "posterior means and intervals at query inputs");
  c_pred->add_option("model", pr.model, "model file")->required();
  c_pred->add_option("query", pr.query, "query CSV (x_ columns or a quantile design)");
  c_pred->add_option("--config", pr.config);
  c_pred->add_option("--out", pr.out);
  c_pred->add_option("--level", pr.level, "central interval probability");
  c_pred->add_option("--covariance", pr.covariance, "also write each row's output covariance here");
  c_pred->add_flag("--latent", pr.latent, "intervals for the latent function, without observation noise");

  BenchmarkArgs bm;
  auto* c_bench = app.add_subcommand("benchmark-motorcycle", "repeated random-split benchmark on the motorcycle data");
  c_bench->add_option("data", bm.data, "motorcycle CSV");
  c_bench->add_option("--config", bm.config);
  c_bench->add_option("--out", bm.out, "report CSV");
  c_bench->add_option("--models", bm.models, "comma list from dlgp, gp, qdl, mean");
  c_bench->add_option("--splits", bm.splits);
  c_bench->add_option("--seed", bm.seed);
  c_bench->add_flag("--quiet", bm.quiet, "no per-split progress");

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "band coverage and error of predictions against held-out truth");
  c_eval->add_option("--pred", ev.predictions, "predictions CSV from predict")->required();
  c_eval->add_option("--truth", ev.truth, "xy CSV or quantile design with the true outputs")->required();
  c_eval->add_option("--out", ev.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*c_sim) return cmd_simulate(sim, ctx);
    if (*c_prep) return cmd_prep_quantiles(prep, ctx);
    if (*c_train) return cmd_train(tr, ctx);
    if (*c_pred) return cmd_predict(pr, ctx);
    if (*c_bench) return cmd_benchmark(bm, ctx);
    if (*c_eval) return cmd_evaluate(ev, ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.user_error() ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace dlgp::cli

#endif
