#ifndef DLGP_ADAPTERS_HPP
#define DLGP_ADAPTERS_HPP

// Benchmark adapters: DL-GP, a homoskedastic GP, the quantile deep learner
// and the training-mean predictor.

#include "dlgp.hpp"
#include "gp_core.hpp"
#include "metrics.hpp"
#include "quantile.hpp"
#include "stats.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace dlgp {

class DlgpAdapter : public ModelAdapter {
 public:
  DlgpAdapter(ModelInit init, TrainConfig train, double level = 0.90)
      : init_(std::move(init)), train_(train), level_(level) {}

  std::string name() const override { return "DL-GP"; }

  void fit(const TrainingDataset& data) override {
    data_ = standardize(data);
    const DlgpModel start = init_model(data_, init_);
    model_ = train(start, data_, train_).model;
  }

  AdapterPrediction predict(const Matrix& query) const override {
    PredictOptions opt;
    opt.level = level_;
    const auto preds = dlgp::predict(model_, data_, query, opt);
    const Eigen::Index p = model_.output_dim();
    const auto rows = static_cast<Eigen::Index>(preds.size());
    AdapterPrediction out{Matrix(rows, p), Matrix(rows, p), Matrix(rows, p), Matrix(rows, p), true};
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& pr = preds[static_cast<std::size_t>(r)];
      out.mean.row(r) = pr.mean.transpose();
      out.var.row(r) = pr.covariance.diagonal().transpose();
      out.lo.row(r) = pr.lo.transpose();
      out.hi.row(r) = pr.hi.transpose();
    }
    return out;
  }

  const DlgpModel& model() const { return model_; }

 private:
  ModelInit init_;
  TrainConfig train_;
  double level_;
  TrainingDataset data_;
  DlgpModel model_;
};

/// Stationary SE-kernel GP on a scalar input, one per output column, with a
/// homoskedastic nugget.
/// Hyperparameters maximize the marginal likelihood with the signal
/// amplitude profiled out, over a coarse then a fine log grid.
class PlainGpAdapter : public ModelAdapter {
 public:
  struct Fit {
    double lengthscale = 1.0;
    double nugget = 0.1;  // relative to the signal amplitude
    double amplitude = 1.0;
  };

  explicit PlainGpAdapter(double level = 0.90) : level_(level) {}

  std::string name() const override { return "GP"; }

  /// Profiled log likelihood: amplitude s^2 = y' K0^-1 y / N.
  static double profiled_log_likelihood(const Vector& x, const Vector& y, double log_ell, double log_g,
                                        double* amplitude = nullptr) {
    const auto chol = gp::chol_psd(gp::gram(x, {std::exp(log_ell), std::exp(log_g)}));
    const Vector alpha = chol.solve(y);
    const double n = static_cast<double>(y.size());
    const double s2 = std::max(y.dot(alpha) / n, 1e-300);
    if (amplitude) *amplitude = s2;
    return -0.5 * n * std::log(s2) - 0.5 * chol.log_det();
  }

  static Fit fit_column(const Vector& x, const Vector& y) {
    double best = -std::numeric_limits<double>::infinity(), bl = 0.0, bg = -2.0;
    auto consider = [&](double ll, double lg) {
      double value;
      try {
        value = profiled_log_likelihood(x, y, ll, lg);
      } catch (const NumericalError&) {
        return;
      }
      if (value > best) {
        best = value;
        bl = ll;
        bg = lg;
      }
    };
    for (double ll = -4.0; ll <= 3.0 + 1e-9; ll += 0.25)
      for (double lg = -10.0; lg <= 2.0 + 1e-9; lg += 0.5) consider(ll, lg);
    const double cl = bl, cg = bg;
    for (double ll = cl - 0.25; ll <= cl + 0.25 + 1e-9; ll += 0.025)
      for (double lg = cg - 0.5; lg <= cg + 0.5 + 1e-9; lg += 0.05) consider(ll, lg);
    if (!std::isfinite(best)) throw NumericalError("plain GP: no hyperparameter setting gave a usable factorization");
    Fit f;
    f.lengthscale = std::exp(bl);
    f.nugget = std::exp(bg);
    profiled_log_likelihood(x, y, bl, bg, &f.amplitude);
    return f;
  }

  void fit(const TrainingDataset& data) override {
    if (data.input_dim() != 1) throw InputError("the plain GP adapter takes a single input column");
    data_ = standardize(data);
    fits_.clear();
    for (Eigen::Index c = 0; c < data_.output_dim(); ++c)
      fits_.push_back(fit_column(data_.theta.col(0), data_.y.col(c)));
  }

  AdapterPrediction predict(const Matrix& query) const override {
    const Vector xq = apply_standardize(query, data_.input_stats).col(0);
    const Eigen::Index rows = query.rows(), p = data_.output_dim();
    AdapterPrediction out{Matrix(rows, p), Matrix(rows, p), Matrix(rows, p), Matrix(rows, p), true};
    const double z = central_z(level_);
    for (Eigen::Index c = 0; c < p; ++c) {
      const Fit& f = fits_[static_cast<std::size_t>(c)];
      const double scale = std::sqrt(f.amplitude);
      const Vector y = data_.y.col(c) / scale;
      const auto post = gp::gp_posterior(data_.theta.col(0), y, xq, {f.lengthscale, f.nugget}, 0.0, true);
      const double sd = data_.output_stats.sd[c], mean = data_.output_stats.mean[c];
      for (Eigen::Index r = 0; r < rows; ++r) {
        const double m = post.mean[r] * scale * sd + mean;
        const double v = std::max(post.covariance(r, r), 0.0) * f.amplitude * sd * sd;
        out.mean(r, c) = m;
        out.var(r, c) = v;
        out.lo(r, c) = m - z * std::sqrt(v);
        out.hi(r, c) = m + z * std::sqrt(v);
      }
    }
    return out;
  }

  const std::vector<Fit>& fits() const { return fits_; }

 private:
  double level_;
  TrainingDataset data_;
  std::vector<Fit> fits_;
};

/// Quantile heads; the median head (or the middle level) gives the point
/// prediction and the outermost heads the interval. No predictive density.
class QuantileDlAdapter : public ModelAdapter {
 public:
  QuantileDlAdapter(std::vector<double> levels, std::vector<int> hidden, QuantileTrainConfig config)
      : levels_(std::move(levels)), hidden_(std::move(hidden)), config_(config) {
    validate_quantile_levels(levels_);
  }

  std::string name() const override { return "Q-DL"; }

  void fit(const TrainingDataset& data) override {
    const auto specs = quantile_specs(static_cast<int>(data.input_dim()), hidden_, levels_.size());
    model_ = train_quantile_dl(data, levels_, specs, config_);
  }

  AdapterPrediction predict(const Matrix& query) const override {
    const Matrix q = predict_quantiles(model_, query);
    const Eigen::Index rows = q.rows();
    std::size_t mid = levels_.size() / 2;
    for (std::size_t k = 0; k < levels_.size(); ++k)
      if (std::abs(levels_[k] - 0.5) < std::abs(levels_[mid] - 0.5)) mid = k;
    AdapterPrediction out;
    out.mean = q.col(static_cast<Eigen::Index>(mid));
    out.var = Matrix::Constant(rows, 1, std::numeric_limits<double>::quiet_NaN());
    out.lo = q.col(0);
    out.hi = q.col(q.cols() - 1);
    out.has_density = false;
    return out;
  }

 private:
  std::vector<double> levels_;
  std::vector<int> hidden_;
  QuantileTrainConfig config_;
  QuantileNetwork model_;
};

/// Predicts the training mean with the training variance everywhere.
class MeanAdapter : public ModelAdapter {
 public:
  explicit MeanAdapter(double level = 0.90) : level_(level) {}

  std::string name() const override { return "mean"; }

  void fit(const TrainingDataset& data) override {
    stats_ = column_stats(data.y);
    for (Eigen::Index c = 0; c < stats_.sd.size(); ++c)
      if (stats_.constant[static_cast<std::size_t>(c)]) stats_.sd[c] = 1e-12;
  }

  AdapterPrediction predict(const Matrix& query) const override {
    const Eigen::Index rows = query.rows();
    const double z = central_z(level_);
    AdapterPrediction out;
    out.mean = stats_.mean.transpose().replicate(rows, 1);
    out.var = stats_.sd.array().square().matrix().transpose().replicate(rows, 1);
    out.lo = (stats_.mean - z * stats_.sd).transpose().replicate(rows, 1);
    out.hi = (stats_.mean + z * stats_.sd).transpose().replicate(rows, 1);
    return out;
  }

 private:
  double level_;
  ColumnStats stats_;
};

}  // namespace dlgp

#endif
