#ifndef DLGP_QUANTILE_HPP
#define DLGP_QUANTILE_HPP

// Replicate-to-quantile preprocessing with a latent quantile index alpha, and
// the quantile deep-learner baseline (one network, one head per quantile).

#include "csv.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "net.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dlgp {

inline const std::vector<double> kMotorcycleQuantiles = {0.05, 0.20, 0.5, 0.80, 0.95};
inline const std::vector<double> kTrajectoryQuantiles = {0.05, 0.275, 0.5, 0.725, 0.95};

inline void validate_quantile_levels(const std::vector<double>& qs) {
  if (qs.empty()) throw ConfigError("quantile list is empty");
  for (std::size_t k = 0; k < qs.size(); ++k) {
    if (!(qs[k] > 0.0 && qs[k] < 1.0)) throw ConfigError("quantile levels must lie in (0, 1)");
    if (k > 0 && !(qs[k] > qs[k - 1])) throw ConfigError("quantile levels must be strictly increasing");
  }
}

/// Linear interpolation between order statistics: h = (n - 1) q.
inline double type7_quantile(const std::vector<double>& sorted, double q) {
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

/// Per time column quantiles of an n x T replicate block; rows follow qs.
inline Matrix empirical_quantiles(const Matrix& replicates, const std::vector<double>& qs) {
  if (replicates.rows() < 1 || replicates.cols() < 1) throw InputError("empirical_quantiles needs at least one replicate");
  validate_quantile_levels(qs);
  Matrix out(static_cast<Eigen::Index>(qs.size()), replicates.cols());
  std::vector<double> column(static_cast<std::size_t>(replicates.rows()));
  for (Eigen::Index t = 0; t < replicates.cols(); ++t) {
    for (Eigen::Index r = 0; r < replicates.rows(); ++r) column[static_cast<std::size_t>(r)] = replicates(r, t);
    std::sort(column.begin(), column.end());
    for (std::size_t k = 0; k < qs.size(); ++k) out(static_cast<Eigen::Index>(k), t) = type7_quantile(column, qs[k]);
  }
  return out;
}

/// Rows of (theta, alpha, trajectory); scenario ids travel with the rows so
/// holdouts can be selected later.
struct QuantileDesign {
  std::vector<long long> scenario_id;
  Matrix theta;        // rows x d
  Vector alpha;        // rows
  Matrix trajectory;   // rows x T

  Eigen::Index rows() const { return theta.rows(); }

  /// Inputs (theta_1..theta_d, alpha) and trajectory outputs.
  TrainingDataset to_dataset() const {
    Matrix x(theta.rows(), theta.cols() + 1);
    x << theta, alpha;
    return TrainingDataset::raw(std::move(x), trajectory);
  }

  QuantileDesign select(const std::vector<std::size_t>& rows_) const {
    QuantileDesign out;
    const auto n = static_cast<Eigen::Index>(rows_.size());
    out.theta.resize(n, theta.cols());
    out.alpha.resize(n);
    out.trajectory.resize(n, trajectory.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(rows_[static_cast<std::size_t>(i)]);
      out.scenario_id.push_back(scenario_id[static_cast<std::size_t>(r)]);
      out.theta.row(i) = theta.row(r);
      out.alpha[i] = alpha[r];
      out.trajectory.row(i) = trajectory.row(r);
    }
    return out;
  }

  /// Splits rows into (kept, held out) by scenario id.
  std::pair<QuantileDesign, QuantileDesign> split_out(const std::vector<long long>& holdout_ids) const {
    const std::set<long long> held(holdout_ids.begin(), holdout_ids.end());
    std::vector<std::size_t> keep, out;
    for (std::size_t r = 0; r < scenario_id.size(); ++r) (held.count(scenario_id[r]) ? out : keep).push_back(r);
    return {select(keep), select(out)};
  }
};

/// One row per (design, quantile) pair. `ids` defaults to 0..m-1.
inline QuantileDesign augment_with_alpha(const Matrix& designs, const std::vector<Matrix>& quantile_trajs,
                                         const std::vector<double>& qs, std::vector<long long> ids = {}) {
  validate_quantile_levels(qs);
  const Eigen::Index m = designs.rows();
  if (static_cast<Eigen::Index>(quantile_trajs.size()) != m)
    throw InputError("augment_with_alpha: " + std::to_string(m) + " designs but " +
                     std::to_string(quantile_trajs.size()) + " quantile blocks");
  if (ids.empty())
    for (Eigen::Index i = 0; i < m; ++i) ids.push_back(i);
  if (static_cast<Eigen::Index>(ids.size()) != m) throw InputError("augment_with_alpha: scenario id count mismatch");
  const auto nq = static_cast<Eigen::Index>(qs.size());
  const Eigen::Index horizon = m > 0 ? quantile_trajs.front().cols() : 0;
  QuantileDesign out;
  out.theta.resize(m * nq, designs.cols());
  out.alpha.resize(m * nq);
  out.trajectory.resize(m * nq, horizon);
  std::set<std::pair<std::vector<double>, double>> seen;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Matrix& block = quantile_trajs[static_cast<std::size_t>(i)];
    if (block.rows() != nq || block.cols() != horizon)
      throw InputError("augment_with_alpha: quantile block " + std::to_string(i) + " has shape " +
                       std::to_string(block.rows()) + "x" + std::to_string(block.cols()) + ", expected " +
                       std::to_string(nq) + "x" + std::to_string(horizon));
    const std::vector<double> key(designs.row(i).begin(), designs.row(i).end());
    for (Eigen::Index k = 0; k < nq; ++k) {
      if (!seen.insert({key, qs[static_cast<std::size_t>(k)]}).second) continue;
      const auto r = static_cast<Eigen::Index>(out.scenario_id.size());
      out.scenario_id.push_back(ids[static_cast<std::size_t>(i)]);
      out.theta.row(r) = designs.row(i);
      out.alpha[r] = qs[static_cast<std::size_t>(k)];
      out.trajectory.row(r) = block.row(k);
    }
  }
  const auto kept = static_cast<Eigen::Index>(out.scenario_id.size());
  out.theta.conservativeResize(kept, designs.cols());
  out.alpha.conservativeResize(kept);
  out.trajectory.conservativeResize(kept, horizon);
  return out;
}

inline void write_quantile_design(const std::filesystem::path& path, const QuantileDesign& design) {
  csv::Writer w(path);
  std::vector<std::string> header{"scenario_id"};
  for (const auto& h : csv::numbered("theta_", static_cast<std::size_t>(design.theta.cols()))) header.push_back(h);
  header.push_back("alpha");
  for (const auto& h : csv::numbered("t_", static_cast<std::size_t>(design.trajectory.cols()), 0)) header.push_back(h);
  w.header(header);
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    w.cell(design.scenario_id[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < design.theta.cols(); ++c) w.cell(design.theta(r, c));
    w.cell(design.alpha[r]);
    for (Eigen::Index c = 0; c < design.trajectory.cols(); ++c) w.cell(design.trajectory(r, c));
    w.end_row();
  }
  w.close();
}

inline QuantileDesign read_quantile_design(const std::filesystem::path& path) {
  const csv::Table table = csv::read_numeric(path);
  const std::size_t alpha_col = table.column("alpha");
  if (table.column("scenario_id") != 0 || alpha_col == csv::Table::npos)
    throw InputError(path.string() + ": expected columns scenario_id, theta_1..theta_d, alpha, t_0..t_{T-1}");
  const auto d = static_cast<Eigen::Index>(alpha_col - 1);
  const auto horizon = static_cast<Eigen::Index>(table.header.size() - alpha_col - 1);
  if (d < 1 || horizon < 1) throw InputError(path.string() + ": need at least one theta and one t_ column");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  QuantileDesign out;
  out.theta.resize(n, d);
  out.alpha.resize(n);
  out.trajectory.resize(n, horizon);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    out.scenario_id.push_back(static_cast<long long>(std::llround(row[0])));
    for (Eigen::Index c = 0; c < d; ++c) out.theta(r, c) = row[static_cast<std::size_t>(c + 1)];
    out.alpha[r] = row[alpha_col];
    for (Eigen::Index c = 0; c < horizon; ++c) out.trajectory(r, c) = row[alpha_col + 1 + static_cast<std::size_t>(c)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quantile deep learner

/// Squared error plus the pinball term written as max(q e, (q - 1) e) with
/// e = y_hat - y. In this form the pinball part alone is minimized at the
/// (1 - q) quantile, so a head meant to track level q is trained with 1 - q.
inline double pinball_mse_loss(double y, double y_hat, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  const double e = y_hat - y;
  return e * e + std::max(q * e, (q - 1.0) * e);
}

/// d loss / d y_hat, taking the right derivative at the kink.
inline double pinball_mse_grad(double y, double y_hat, double q) {
  const double e = y_hat - y;
  return 2.0 * e + (e >= 0.0 ? q : q - 1.0);
}

/// Monotone rearrangement of head outputs.
inline Vector quantile_crossing_fix(Vector preds) {
  std::sort(preds.data(), preds.data() + preds.size());
  return preds;
}

struct QuantileNetwork {
  net::NetworkParams network;  // last layer has one unit per quantile level
  std::vector<double> levels;
  ColumnStats input_stats;
  ColumnStats output_stats;

  bool operator==(const QuantileNetwork&) const = default;
};

struct QuantileTrainConfig {
  double learning_rate = 0.05;
  std::size_t n_steps = 3000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  }
};

/// Hidden layers d -> widths...; a linear head layer with |qs| units is appended.
inline std::vector<net::LayerSpec> quantile_specs(int input_dim, const std::vector<int>& hidden, std::size_t heads,
                                                  net::Activation activation = net::Activation::tanh) {
  std::vector<net::LayerSpec> specs;
  int in = input_dim;
  for (int w : hidden) {
    specs.push_back({in, w, activation});
    in = w;
  }
  specs.push_back({in, static_cast<int>(heads), net::Activation::identity});
  return specs;
}

inline double quantile_loss(const Matrix& heads, const Vector& y, const std::vector<double>& qs) {
  double total = 0.0;
  for (Eigen::Index n = 0; n < heads.rows(); ++n)
    for (Eigen::Index k = 0; k < heads.cols(); ++k)
      total += pinball_mse_loss(y[n], heads(n, k), 1.0 - qs[static_cast<std::size_t>(k)]);
  return total / static_cast<double>(heads.size());
}

/// Full-batch gradient descent on the mean pinball-plus-squared-error loss
/// over all heads, on standardized data with a single output column.
inline QuantileNetwork train_quantile_dl(const TrainingDataset& data, const std::vector<double>& qs,
                                         const std::vector<net::LayerSpec>& specs, const QuantileTrainConfig& config,
                                         std::vector<double>* loss_trace = nullptr) {
  validate_quantile_levels(qs);
  config.validate();
  net::validate_specs(specs);
  if (data.output_dim() != 1) throw InputError("the quantile learner handles a single output column");
  if (data.size() < 1) throw InputError("the quantile learner needs training data");
  if (specs.front().input_width != data.input_dim())
    throw ConfigError("network input width does not match the data dimension");
  if (specs.back().output_width != static_cast<int>(qs.size()))
    throw ConfigError("network needs one output unit per quantile level");
  const TrainingDataset scaled = standardize(data);

  QuantileNetwork model;
  model.network = net::init_network(specs, derive_seed(config.seed, 0x71646c));
  model.levels = qs;
  model.input_stats = scaled.input_stats;
  model.output_stats = scaled.output_stats;
  const Vector y = scaled.y.col(0);
  const double count = static_cast<double>(y.size() * static_cast<Eigen::Index>(qs.size()));

  for (std::size_t s = 1; s <= config.n_steps; ++s) {
    net::ForwardCache cache;
    const Matrix heads = net::forward(model.network, scaled.theta, &cache);
    Matrix grad(heads.rows(), heads.cols());
    for (Eigen::Index n = 0; n < heads.rows(); ++n)
      for (Eigen::Index k = 0; k < heads.cols(); ++k)
        grad(n, k) = pinball_mse_grad(y[n], heads(n, k), 1.0 - qs[static_cast<std::size_t>(k)]) / count;
    if (loss_trace) loss_trace->push_back(quantile_loss(heads, y, qs));
    const auto back = net::backward(model.network, cache, grad);
    net::axpy(model.network, -config.learning_rate, back.grads);
    for (const auto& layer : model.network.layers)
      if (!layer.weight.allFinite() || !layer.bias.allFinite()) throw TrainingError(s, "quantile network diverged");
  }
  return model;
}

/// Rows x |qs| predictions on the original output scale, sorted per row.
inline Matrix predict_quantiles(const QuantileNetwork& model, const Matrix& query_theta) {
  if (query_theta.cols() != model.network.input_dim())
    throw InputError("query has " + std::to_string(query_theta.cols()) + " columns, model expects d = " +
                     std::to_string(model.network.input_dim()));
  Matrix heads = net::forward(model.network, apply_standardize(query_theta, model.input_stats));
  for (Eigen::Index r = 0; r < heads.rows(); ++r)
    heads.row(r) = quantile_crossing_fix(heads.row(r).transpose()).transpose();
  return (heads.array() * model.output_stats.sd[0] + model.output_stats.mean[0]).matrix();
}

}  // namespace dlgp

#endif
