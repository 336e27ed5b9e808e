#ifndef DLGP_DATASET_HPP
#define DLGP_DATASET_HPP

// Training data containers, z-score standardization and the xy / motorcycle
// CSV loaders.

#include "csv.hpp"
#include "error.hpp"
#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace dlgp {

/// Per-column affine map: standardized = (raw - mean) / sd.
struct ColumnStats {
  Vector mean;
  Vector sd;
  std::vector<bool> constant;  // columns whose population sd was zero

  static ColumnStats identity(Eigen::Index n) {
    return {Vector::Zero(n), Vector::Ones(n), std::vector<bool>(static_cast<std::size_t>(n), false)};
  }

  bool operator==(const ColumnStats& o) const {
    return mean.size() == o.mean.size() && sd.size() == o.sd.size() && mean == o.mean && sd == o.sd &&
           constant == o.constant;
  }
};

/// Population (1/N) mean and sd per column; zero-sd columns get sd = 1.
inline ColumnStats column_stats(const Matrix& m) {
  const Eigen::Index n = m.rows();
  ColumnStats s;
  s.mean = Vector::Zero(m.cols());
  s.sd = Vector::Ones(m.cols());
  s.constant.assign(static_cast<std::size_t>(m.cols()), false);
  if (n == 0) return s;
  s.mean = m.colwise().mean().transpose();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double var = (m.col(c).array() - s.mean[c]).square().mean();
    if (var > 0.0) {
      s.sd[c] = std::sqrt(var);
    } else {
      s.sd[c] = 1.0;
      s.constant[static_cast<std::size_t>(c)] = true;
    }
  }
  return s;
}

inline Matrix apply_standardize(const Matrix& raw, const ColumnStats& s) {
  if (raw.cols() != s.mean.size()) throw InputError("column count does not match the standardization stats");
  Matrix out = raw;
  for (Eigen::Index c = 0; c < raw.cols(); ++c) out.col(c) = (raw.col(c).array() - s.mean[c]) / s.sd[c];
  return out;
}

inline Matrix destandardize(const Matrix& values, const ColumnStats& s) {
  if (values.cols() != s.mean.size()) throw InputError("column count does not match the standardization stats");
  Matrix out = values;
  for (Eigen::Index c = 0; c < values.cols(); ++c) out.col(c) = values.col(c).array() * s.sd[c] + s.mean[c];
  return out;
}

struct TrainingDataset {
  Matrix theta;  // N x d
  Matrix y;      // N x p
  ColumnStats input_stats;
  ColumnStats output_stats;
  bool standardized = false;
  std::vector<std::string> warnings;

  Eigen::Index size() const { return theta.rows(); }
  Eigen::Index input_dim() const { return theta.cols(); }
  Eigen::Index output_dim() const { return y.cols(); }

  /// Values that are already on the model scale; stats are the identity.
  static TrainingDataset from_standardized(Matrix theta, Matrix y) {
    TrainingDataset ds;
    if (theta.rows() != y.rows()) throw InputError("theta and y row counts differ");
    ds.input_stats = ColumnStats::identity(theta.cols());
    ds.output_stats = ColumnStats::identity(y.cols());
    ds.theta = std::move(theta);
    ds.y = std::move(y);
    ds.standardized = true;
    return ds;
  }

  static TrainingDataset raw(Matrix theta, Matrix y) {
    TrainingDataset ds;
    if (theta.rows() != y.rows()) throw InputError("theta and y row counts differ");
    if (!theta.allFinite() || !y.allFinite()) throw InputError("dataset contains non-finite values");
    ds.input_stats = ColumnStats::identity(theta.cols());
    ds.output_stats = ColumnStats::identity(y.cols());
    ds.theta = std::move(theta);
    ds.y = std::move(y);
    return ds;
  }

  Matrix raw_theta() const { return standardized ? destandardize(theta, input_stats) : theta; }
  Matrix raw_y() const { return standardized ? destandardize(y, output_stats) : y; }
};

inline TrainingDataset standardize(const TrainingDataset& ds) {
  if (ds.standardized) return ds;
  TrainingDataset out;
  out.input_stats = column_stats(ds.theta);
  out.output_stats = column_stats(ds.y);
  out.theta = apply_standardize(ds.theta, out.input_stats);
  out.y = apply_standardize(ds.y, out.output_stats);
  out.standardized = true;
  out.warnings = ds.warnings;
  for (std::size_t c = 0; c < out.input_stats.constant.size(); ++c)
    if (out.input_stats.constant[c]) out.warnings.push_back("input column " + std::to_string(c + 1) + " is constant");
  for (std::size_t c = 0; c < out.output_stats.constant.size(); ++c)
    if (out.output_stats.constant[c])
      out.warnings.push_back("output column " + std::to_string(c + 1) + " is constant");
  return out;
}

/// Rows of `ds` selected by index, keeping its scale and stats.
inline TrainingDataset subset(const TrainingDataset& ds, const std::vector<std::size_t>& rows) {
  TrainingDataset out = ds;
  out.theta.resize(static_cast<Eigen::Index>(rows.size()), ds.theta.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()), ds.y.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.theta.row(static_cast<Eigen::Index>(i)) = ds.theta.row(static_cast<Eigen::Index>(rows[i]));
    out.y.row(static_cast<Eigen::Index>(i)) = ds.y.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

inline bool has_prefix(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

/// xy CSV: header row, columns x_1..x_d then y_1..y_p.
inline TrainingDataset load_xy_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read_numeric(path);
  std::vector<std::size_t> xcols, ycols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (has_prefix(table.header[c], "x_"))
      xcols.push_back(c);
    else if (has_prefix(table.header[c], "y_"))
      ycols.push_back(c);
    else
      throw InputError(path.string() + ": unexpected column '" + table.header[c] + "' (expected x_i or y_j)");
  }
  if (xcols.empty() || ycols.empty()) throw InputError(path.string() + ": need at least one x_ and one y_ column");
  if (table.rows.empty()) throw InputError(path.string() + ": no data rows");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Matrix theta(n, static_cast<Eigen::Index>(xcols.size()));
  Matrix y(n, static_cast<Eigen::Index>(ycols.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < xcols.size(); ++c) theta(r, static_cast<Eigen::Index>(c)) = row[xcols[c]];
    for (std::size_t c = 0; c < ycols.size(); ++c) y(r, static_cast<Eigen::Index>(c)) = row[ycols[c]];
  }
  return TrainingDataset::raw(std::move(theta), std::move(y));
}

inline void write_xy_csv(const std::filesystem::path& path, const Matrix& theta, const Matrix& y) {
  csv::Writer w(path);
  auto header = csv::numbered("x_", static_cast<std::size_t>(theta.cols()));
  auto yh = csv::numbered("y_", static_cast<std::size_t>(y.cols()));
  header.insert(header.end(), yh.begin(), yh.end());
  w.header(header);
  for (Eigen::Index r = 0; r < theta.rows(); ++r) {
    for (Eigen::Index c = 0; c < theta.cols(); ++c) w.cell(theta(r, c));
    for (Eigen::Index c = 0; c < y.cols(); ++c) w.cell(y(r, c));
    w.end_row();
  }
  w.close();
}

inline constexpr Eigen::Index kMotorcycleRows = 133;

/// Number of rows whose input value appears more than once beyond its first
/// occurrence (N minus the count of distinct inputs).
inline Eigen::Index replicate_input_count(const Vector& x) {
  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  const auto distinct = std::unique(v.begin(), v.end()) - v.begin();
  return x.size() - distinct;
}

/// Two numeric columns (time in ms, acceleration in g) under any header.
inline TrainingDataset load_motorcycle(const std::filesystem::path& path) {
  const csv::Table table = csv::read_numeric(path);
  if (table.header.size() != 2)
    throw InputError(path.string() + ": expected 2 columns (time_ms, acceleration_g), found " +
                     std::to_string(table.header.size()));
  if (table.rows.empty()) throw InputError(path.string() + ": no data rows");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Matrix theta(n, 1), y(n, 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    theta(r, 0) = table.rows[static_cast<std::size_t>(r)][0];
    y(r, 0) = table.rows[static_cast<std::size_t>(r)][1];
  }
  auto ds = TrainingDataset::raw(std::move(theta), std::move(y));
  if (n != kMotorcycleRows)
    ds.warnings.push_back("motorcycle file has " + std::to_string(n) + " rows, the canonical dataset has 133");
  return ds;
}

}  // namespace dlgp

#endif
