#ifndef DLGP_METRICS_HPP
#define DLGP_METRICS_HPP

// Evaluation protocol: NMSE, NLPD, interval coverage, random train/test
// splits and a benchmark harness over model adapters.

#include "csv.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "rng.hpp"
#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace dlgp {

/// Squared error normalized by the spread of the targets around the
/// training mean.
inline double nmse(const Vector& y_test, const Vector& y_hat, double y_train_mean) {
  if (y_test.size() != y_hat.size()) throw InputError("nmse: length mismatch");
  if (y_test.size() == 0) throw MetricError("nmse: empty test set");
  const double num = (y_test - y_hat).squaredNorm();
  const double den = (y_test.array() - y_train_mean).square().sum();
  if (!(den > 0.0)) throw MetricError("nmse: test targets all equal the training mean");
  return num / den;
}

/// Mean negative Gaussian log predictive density.
inline double nlpd(const Vector& y_test, const Vector& means, const Vector& vars) {
  if (y_test.size() != means.size() || y_test.size() != vars.size()) throw InputError("nlpd: length mismatch");
  if (y_test.size() == 0) throw MetricError("nlpd: empty test set");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y_test.size(); ++i) {
    if (!(vars[i] > 0.0)) throw DomainError("nlpd: predictive variance must be positive");
    total -= normal_log_density(y_test[i], means[i], vars[i]);
  }
  return total / static_cast<double>(y_test.size());
}

inline double interval_coverage(const Vector& y_test, const Vector& lo, const Vector& hi) {
  if (y_test.size() != lo.size() || y_test.size() != hi.size())
    throw InputError("interval_coverage: length mismatch");
  if (y_test.size() == 0) throw MetricError("interval_coverage: empty test set");
  Eigen::Index inside = 0;
  for (Eigen::Index i = 0; i < y_test.size(); ++i) {
    if (lo[i] > hi[i]) throw InputError("interval_coverage: lower bound above upper bound at " + std::to_string(i));
    if (y_test[i] >= lo[i] && y_test[i] <= hi[i]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(y_test.size());
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct SplitPlan {
  std::vector<Split> splits;
  double fraction = 0.9;
  std::uint64_t seed = 0;
};

/// Independent uniform partitions; split s uses its own derived stream.
inline SplitPlan make_splits(std::size_t n, double fraction, std::size_t n_splits, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  if (n < 2) throw InputError("need at least 2 rows to split");
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train >= n)
    throw InputError("fraction " + std::to_string(fraction) + " of " + std::to_string(n) +
                     " rows leaves an empty train or test set");
  SplitPlan plan;
  plan.fraction = fraction;
  plan.seed = seed;
  std::vector<std::size_t> order(n);
  for (std::size_t s = 0; s < n_splits; ++s) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x73706c00 + s));
    rng.shuffle(order.begin(), order.end());
    Split split;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    plan.splits.push_back(std::move(split));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Adapters and the benchmark harness

/// Per query row and output: mean, predictive variance, central interval.
/// Variance is NaN for models without a predictive density.
struct AdapterPrediction {
  Matrix mean;
  Matrix var;
  Matrix lo;
  Matrix hi;
  bool has_density = true;
};

class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual std::string name() const = 0;
  /// Training data arrives in original units.
  virtual void fit(const TrainingDataset& train) = 0;
  virtual AdapterPrediction predict(const Matrix& query_theta) const = 0;
};

/// Builds a fresh adapter for one split; the argument is a split-specific seed.
struct AdapterFactory {
  std::string name;
  std::function<std::unique_ptr<ModelAdapter>(std::uint64_t)> make;
};

struct SplitResult {
  std::string model;
  std::size_t split_id = 0;
  double nmse = std::numeric_limits<double>::quiet_NaN();
  double nlpd = std::numeric_limits<double>::quiet_NaN();      // original units
  double nlpd_std = std::numeric_limits<double>::quiet_NaN();  // training-standardized units
  double coverage = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string error;
};

struct MetricSummary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
};

/// Mean and sample sd over the finite entries; NaN when none are finite.
inline MetricSummary summarize(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values)
    if (std::isfinite(x)) v.push_back(x);
  MetricSummary s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  } else {
    s.sd = 0.0;
  }
  return s;
}

struct ModelSummary {
  std::string model;
  MetricSummary nmse, nlpd, nlpd_std, coverage;
  std::size_t failures = 0;
  std::size_t splits = 0;
};

struct BenchmarkReport {
  std::vector<SplitResult> rows;
  std::vector<ModelSummary> summaries;

  std::vector<double> column(const std::string& model, double SplitResult::*field) const {
    std::vector<double> out;
    for (const auto& r : rows)
      if (r.model == model) out.push_back(r.*field);
    return out;
  }

  const ModelSummary& summary(const std::string& model) const {
    for (const auto& s : summaries)
      if (s.model == model) return s;
    throw InputError("no benchmark results for model '" + model + "'");
  }
};

/// Scores one prediction block against held-out targets; multi-output
/// metrics are averaged over output columns.
inline SplitResult score_split(const AdapterPrediction& pred, const Matrix& y_test, const ColumnStats& train_stats) {
  SplitResult r;
  const Eigen::Index p = y_test.cols();
  double nm = 0.0, nl = 0.0, nls = 0.0, cov = 0.0;
  for (Eigen::Index c = 0; c < p; ++c) {
    nm += nmse(y_test.col(c), pred.mean.col(c), train_stats.mean[c]);
    cov += interval_coverage(y_test.col(c), pred.lo.col(c), pred.hi.col(c));
    if (pred.has_density) {
      nl += nlpd(y_test.col(c), pred.mean.col(c), pred.var.col(c));
      const double sd = train_stats.sd[c];
      const Vector ys = (y_test.col(c).array() - train_stats.mean[c]) / sd;
      const Vector ms = (pred.mean.col(c).array() - train_stats.mean[c]) / sd;
      const Vector vs = pred.var.col(c) / (sd * sd);
      nls += nlpd(ys, ms, vs);
    }
  }
  const double inv = 1.0 / static_cast<double>(p);
  r.nmse = nm * inv;
  r.coverage = cov * inv;
  if (pred.has_density) {
    r.nlpd = nl * inv;
    r.nlpd_std = nls * inv;
  }
  r.ok = true;
  return r;
}

using ProgressFn = std::function<void(const SplitResult&)>;

/// Runs every adapter on every split. A failing split is recorded and the
/// run continues; a model failing on 10% or more of the splits raises.
inline BenchmarkReport benchmark(const std::vector<AdapterFactory>& models, const TrainingDataset& data,
                                 const SplitPlan& plan, const ProgressFn& progress = {}) {
  if (data.standardized) throw InputError("benchmark expects data in original units");
  BenchmarkReport report;
  for (const auto& factory : models) {
    ModelSummary summary;
    summary.model = factory.name;
    for (std::size_t s = 0; s < plan.splits.size(); ++s) {
      const Split& split = plan.splits[s];
      SplitResult result;
      try {
        const TrainingDataset train = subset(data, split.train);
        const TrainingDataset test = subset(data, split.test);
        auto adapter = factory.make(derive_seed(plan.seed, 0x6d6f64656c00 + s));
        adapter->fit(train);
        const AdapterPrediction pred = adapter->predict(test.theta);
        result = score_split(pred, test.y, column_stats(train.y));
      } catch (const std::exception& e) {
        result = SplitResult{};
        result.error = std::string(e.what()) + " (split " + std::to_string(s) + ", plan seed " +
                       std::to_string(plan.seed) + ")";
        ++summary.failures;
      }
      result.model = factory.name;
      result.split_id = s;
      if (progress) progress(result);
      report.rows.push_back(result);
    }
    summary.splits = plan.splits.size();
    if (summary.splits > 0 && static_cast<double>(summary.failures) >= 0.1 * static_cast<double>(summary.splits)) {
      std::string first;
      for (const auto& r : report.rows)
        if (r.model == factory.name && !r.ok) {
          first = r.error;
          break;
        }
      throw MetricError("model " + factory.name + " failed on " + std::to_string(summary.failures) + " of " +
                        std::to_string(summary.splits) + " splits; first failure: " + first);
    }
    summary.nmse = summarize(report.column(factory.name, &SplitResult::nmse));
    summary.nlpd = summarize(report.column(factory.name, &SplitResult::nlpd));
    summary.nlpd_std = summarize(report.column(factory.name, &SplitResult::nlpd_std));
    summary.coverage = summarize(report.column(factory.name, &SplitResult::coverage));
    report.summaries.push_back(summary);
  }
  return report;
}

struct PublishedResult {
  const char* model;
  double nmse_mean, nmse_sd;
  double nlpd_mean, nlpd_sd;  // NaN where the source reports none
};

/// Motorcycle benchmark figures as published, for report footnotes.
inline const std::vector<PublishedResult>& published_motorcycle_results() {
  static const double na = std::numeric_limits<double>::quiet_NaN();
  static const std::vector<PublishedResult> rows = {
      {"DL-GP", 0.20, 0.07, 0.68, 0.18},  {"Q-DL", 0.31, 0.21, na, na},     {"WHGP", 0.28, 0.21, 4.26, 0.31},
      {"GP", 0.26, 0.18, 4.59, 0.22},     {"MAPHGP", 0.26, 0.17, 4.32, 0.60}, {"VHGP", 0.26, 0.17, 4.32, 0.30},
  };
  return rows;
}

inline std::string format_metric(double v) { return std::isfinite(v) ? csv::format_double(v) : "NA"; }

inline void write_benchmark_csv(const std::filesystem::path& path, const BenchmarkReport& report,
                                bool published_footnotes = true) {
  csv::Writer w(path);
  w.header({"model", "split_id", "nmse", "nlpd", "nlpd_std", "coverage90"});
  for (const auto& r : report.rows) {
    w.cell(r.model).cell(r.split_id).cell(format_metric(r.nmse)).cell(format_metric(r.nlpd));
    w.cell(format_metric(r.nlpd_std)).cell(format_metric(r.coverage));
    w.end_row();
  }
  for (const auto& s : report.summaries) {
    w.cell(s.model).cell(std::string("mean")).cell(format_metric(s.nmse.mean)).cell(format_metric(s.nlpd.mean));
    w.cell(format_metric(s.nlpd_std.mean)).cell(format_metric(s.coverage.mean));
    w.end_row();
    w.cell(s.model).cell(std::string("sd")).cell(format_metric(s.nmse.sd)).cell(format_metric(s.nlpd.sd));
    w.cell(format_metric(s.nlpd_std.sd)).cell(format_metric(s.coverage.sd));
    w.end_row();
  }
  for (const auto& r : report.rows)
    if (!r.ok) w.comment("failure: " + r.model + " split " + std::to_string(r.split_id) + ": " + r.error);
  if (published_footnotes)
    for (const auto& p : published_motorcycle_results())
      w.comment(std::string("published ") + p.model + ": NMSE " + format_metric(p.nmse_mean) + " +- " +
                format_metric(p.nmse_sd) + ", NLPD " +
                (std::isfinite(p.nlpd_mean) ? format_metric(p.nlpd_mean) + " +- " + format_metric(p.nlpd_sd)
                                            : std::string("N/A")));
  w.close();
}

inline std::string plus_minus(const MetricSummary& s) {
  if (!std::isfinite(s.mean)) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f +- %.3f", s.mean, s.sd);
  return buf;
}

inline void print_benchmark_table(std::ostream& out, const BenchmarkReport& report, bool published = true) {
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %-18s %-18s %-18s %-9s %s\n", "model", "NMSE", "NLPD", "NLPD (std)",
                "cover90", "failed");
  out << line;
  for (const auto& s : report.summaries) {
    char cov[32];
    std::snprintf(cov, sizeof cov, "%.3f", s.coverage.mean);
    std::snprintf(line, sizeof line, "%-8s %-18s %-18s %-18s %-9s %zu/%zu\n", s.model.c_str(),
                  plus_minus(s.nmse).c_str(), plus_minus(s.nlpd).c_str(), plus_minus(s.nlpd_std).c_str(), cov,
                  s.failures, s.splits);
    out << line;
  }
  if (!published) return;
  out << "published:\n";
  for (const auto& p : published_motorcycle_results()) {
    std::snprintf(line, sizeof line, "  %-8s NMSE %.2f +- %.2f", p.model, p.nmse_mean, p.nmse_sd);
    out << line;
    if (std::isfinite(p.nlpd_mean)) {
      std::snprintf(line, sizeof line, "   NLPD %.2f +- %.2f\n", p.nlpd_mean, p.nlpd_sd);
      out << line;
    } else {
      out << "   NLPD N/A\n";
    }
  }
}

}  // namespace dlgp

#endif
