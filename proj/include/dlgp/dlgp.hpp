#ifndef DLGP_DLGP_HPP
#define DLGP_DLGP_HPP

// Deep-feature linear model of coregionalization:
//
//   psi = phi_W(theta),  F(theta) = b + Wmix f(psi) + e,
//   f_j ~ GP(0, k_j + r_j I) on coordinate psi_j,  e_i ~ N(0, sigma_i^2).
//
// Stacked outputs are ordered output-major: entry (i, n) of the joint vector
// sits at i * N + n, so C = sum_j (w_j w_j^T) kron K_j + diag(sigma^2) kron I_N.

#include "dataset.hpp"
#include "error.hpp"
#include "gp_core.hpp"
#include "linalg.hpp"
#include "net.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "stats.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace dlgp {

enum class CovarianceMode {
  full,        // dense joint covariance across outputs
  per_output,  // approximation: cross-output blocks dropped
};

inline const char* to_string(CovarianceMode m) { return m == CovarianceMode::full ? "full" : "per_output"; }

inline constexpr std::size_t kDefaultDenseCap = 4000;

// Slice-sampling box on the log-hyperparameters.
inline constexpr double kLogLengthscaleMin = -5.0;
inline constexpr double kLogLengthscaleMax = 5.0;
inline constexpr double kLogNuggetMin = -12.0;
inline constexpr double kLogNuggetMax = 2.0;

struct DlgpModel {
  net::NetworkParams network;
  Matrix mixture;                       // p x q
  Vector bias;                          // p
  Vector noise_sd;                      // p, strictly positive
  std::vector<gp::KernelHyper> kernels; // q
  ColumnStats input_stats;
  ColumnStats output_stats;
  CovarianceMode mode = CovarianceMode::full;
  std::size_t dense_cap = kDefaultDenseCap;

  Eigen::Index input_dim() const { return network.input_dim(); }
  Eigen::Index output_dim() const { return mixture.rows(); }
  Eigen::Index latent_dim() const { return mixture.cols(); }

  void validate() const {
    net::check_params(network);
    const Eigen::Index q = latent_dim();
    if (q < 1) throw ConfigError("mixture matrix needs at least one column");
    if (network.latent_dim() != q)
      throw ConfigError("network latent width " + std::to_string(network.latent_dim()) +
                        " does not match mixture columns " + std::to_string(q));
    if (bias.size() != output_dim() || noise_sd.size() != output_dim())
      throw ConfigError("bias / noise vectors do not match the output dimension");
    if (static_cast<Eigen::Index>(kernels.size()) != q) throw ConfigError("need one kernel per latent feature");
    for (Eigen::Index i = 0; i < noise_sd.size(); ++i)
      if (!(noise_sd[i] > 0.0) || !std::isfinite(noise_sd[i])) throw ConfigError("output noise must be positive");
    for (const auto& k : kernels) gp::validate(k);
    if (!mixture.allFinite() || !bias.allFinite()) throw ConfigError("non-finite model parameters");
    if (input_stats.mean.size() != input_dim() || output_stats.mean.size() != output_dim())
      throw ConfigError("standardization stats do not match the model dimensions");
  }

  bool operator==(const DlgpModel& o) const {
    return network == o.network && mixture.rows() == o.mixture.rows() && mixture.cols() == o.mixture.cols() &&
           mixture == o.mixture && bias.size() == o.bias.size() && bias == o.bias &&
           noise_sd.size() == o.noise_sd.size() && noise_sd == o.noise_sd && kernels == o.kernels &&
           input_stats == o.input_stats && output_stats == o.output_stats && mode == o.mode &&
           dense_cap == o.dense_cap;
  }
};

struct HiddenLayer {
  int width = 1;
  net::Activation activation = net::Activation::tanh;
};

struct ModelInit {
  std::vector<HiddenLayer> layers;  // last width is the latent dimension q
  double noise_sd = 0.5;
  double lengthscale = 1.0;
  double nugget = 1e-2;
  CovarianceMode mode = CovarianceMode::full;
  std::size_t dense_cap = kDefaultDenseCap;
  std::uint64_t seed = 0;
};

inline std::vector<net::LayerSpec> layer_specs(int input_dim, const std::vector<HiddenLayer>& layers) {
  std::vector<net::LayerSpec> specs;
  int in = input_dim;
  for (const auto& l : layers) {
    specs.push_back({in, l.width, l.activation});
    in = l.width;
  }
  return specs;
}

/// Fresh model for standardized data of the given shape. Mixture entries are
/// drawn N(0, 1/q) so the prior output variance starts near one.
inline DlgpModel init_model(const TrainingDataset& data, const ModelInit& init) {
  if (init.layers.empty()) throw ConfigError("network needs at least one layer");
  const int d = static_cast<int>(data.input_dim());
  const Eigen::Index p = data.output_dim();
  if (d < 1 || p < 1) throw ConfigError("dataset needs at least one input and one output column");
  DlgpModel m;
  m.network = net::init_network(layer_specs(d, init.layers), init.seed);
  const Eigen::Index q = m.network.latent_dim();
  Rng rng(derive_seed(init.seed, 0x6d6978));
  m.mixture.resize(p, q);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q));
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < q; ++j) m.mixture(i, j) = scale * rng.normal();
  m.bias = Vector::Zero(p);
  m.noise_sd = Vector::Constant(p, init.noise_sd);
  m.kernels.assign(static_cast<std::size_t>(q), gp::KernelHyper{init.lengthscale, init.nugget});
  m.input_stats = data.input_stats;
  m.output_stats = data.output_stats;
  m.mode = init.mode;
  m.dense_cap = init.dense_cap;
  m.validate();
  return m;
}

namespace detail {

/// K_j on the latent coordinate j, with the nugget on the diagonal when asked.
inline std::vector<Matrix> latent_grams(const Matrix& psi, const DlgpModel& m, bool with_nugget) {
  std::vector<Matrix> out;
  out.reserve(m.kernels.size());
  for (Eigen::Index j = 0; j < psi.cols(); ++j) {
    gp::KernelHyper h = m.kernels[static_cast<std::size_t>(j)];
    if (!with_nugget) h.nugget = 0.0;
    out.push_back(gp::gram(psi.col(j), h));
  }
  return out;
}

inline Vector stacked_residual(const Matrix& y, const Vector& bias) {
  const Eigen::Index n = y.rows(), p = y.cols();
  Vector r(n * p);
  for (Eigen::Index i = 0; i < p; ++i) r.segment(i * n, n) = y.col(i).array() - bias[i];
  return r;
}

inline void check_cap(const DlgpModel& m, Eigen::Index n) {
  const auto size = static_cast<std::size_t>(n * m.output_dim());
  if (size > m.dense_cap)
    throw ResourceError("joint covariance of size " + std::to_string(size) + " exceeds the dense cap " +
                        std::to_string(m.dense_cap) + "; use covariance = per_output (approximation)");
}

inline Matrix output_block(const std::vector<Matrix>& grams, const DlgpModel& m, Eigen::Index a, Eigen::Index b) {
  const Eigen::Index n = grams.empty() ? 0 : grams.front().rows();
  Matrix block = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < grams.size(); ++j) {
    const double w = m.mixture(a, static_cast<Eigen::Index>(j)) * m.mixture(b, static_cast<Eigen::Index>(j));
    if (w != 0.0) block += w * grams[j];
  }
  return block;
}

inline Matrix assemble_joint(const std::vector<Matrix>& grams, const DlgpModel& m, Eigen::Index n,
                             bool include_noise) {
  const Eigen::Index p = m.output_dim();
  Matrix c(n * p, n * p);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b <= a; ++b) {
      Matrix block = output_block(grams, m, a, b);
      if (a == b && include_noise) block.diagonal().array() += m.noise_sd[a] * m.noise_sd[a];
      c.block(a * n, b * n, n, n) = block;
      if (a != b) c.block(b * n, a * n, n, n) = block.transpose();
    }
  return c;
}

inline Matrix output_covariance(const std::vector<Matrix>& grams, const DlgpModel& m, Eigen::Index a) {
  Matrix block = output_block(grams, m, a, a);
  block.diagonal().array() += m.noise_sd[a] * m.noise_sd[a];
  return block;
}

}  // namespace detail

/// Prior covariance of the stacked outputs at the latent points `psi`.
inline Matrix joint_covariance(const Matrix& psi, const DlgpModel& model, bool include_noise) {
  if (psi.cols() != model.latent_dim()) throw InputError("psi width does not match the latent dimension");
  detail::check_cap(model, psi.rows());
  return detail::assemble_joint(detail::latent_grams(psi, model, include_noise), model, psi.rows(), include_noise);
}

inline void check_data(const DlgpModel& model, const TrainingDataset& data) {
  if (data.input_dim() != model.input_dim())
    throw InputError("dataset has " + std::to_string(data.input_dim()) + " inputs, model expects " +
                     std::to_string(model.input_dim()));
  if (data.output_dim() != model.output_dim())
    throw InputError("dataset has " + std::to_string(data.output_dim()) + " outputs, model expects " +
                     std::to_string(model.output_dim()));
}

/// Training matrix on the model scale.
inline TrainingDataset model_scale(const DlgpModel& model, const TrainingDataset& data) {
  check_data(model, data);
  if (data.standardized) return data;
  TrainingDataset out = data;
  out.theta = apply_standardize(data.theta, model.input_stats);
  out.y = apply_standardize(data.y, model.output_stats);
  out.input_stats = model.input_stats;
  out.output_stats = model.output_stats;
  out.standardized = true;
  return out;
}

/// Log marginal likelihood of standardized outputs y given latent points psi.
inline double log_marginal_at(const Matrix& psi, const DlgpModel& model, const Matrix& y) {
  const Eigen::Index n = psi.rows();
  const Eigen::Index p = model.output_dim();
  const auto grams = detail::latent_grams(psi, model, true);
  if (model.mode == CovarianceMode::full) {
    detail::check_cap(model, n);
    const auto chol = gp::chol_psd(detail::assemble_joint(grams, model, n, true));
    return gp::log_marginal(detail::stacked_residual(y, model.bias), chol);
  }
  double total = 0.0;
  for (Eigen::Index a = 0; a < p; ++a) {
    const auto chol = gp::chol_psd(detail::output_covariance(grams, model, a));
    total += gp::log_marginal((y.col(a).array() - model.bias[a]).matrix(), chol);
  }
  return total;
}

inline double dlgp_log_marginal(const DlgpModel& model, const TrainingDataset& data) {
  const TrainingDataset scaled = model_scale(model, data);
  return log_marginal_at(net::forward(model.network, scaled.theta), model, scaled.y);
}

struct DlgpGradients {
  double log_likelihood = 0.0;
  net::NetworkGrads network;
  Matrix mixture;       // p x q
  Vector bias;          // p
  Vector log_noise_sd;  // p
};

/// Exact gradients of the log marginal likelihood with respect to the network,
/// the mixture matrix, the bias and log sigma_e. Kernel hyperparameters are
/// deliberately left out; they are updated by slice sampling.
inline DlgpGradients dlgp_gradients(const DlgpModel& model, const TrainingDataset& data) {
  const TrainingDataset scaled = model_scale(model, data);
  net::ForwardCache cache;
  const Matrix psi = net::forward(model.network, scaled.theta, &cache);
  const Eigen::Index n = psi.rows(), p = model.output_dim(), q = model.latent_dim();
  const auto grams = detail::latent_grams(psi, model, true);

  DlgpGradients g;
  g.mixture = Matrix::Zero(p, q);
  g.bias = Vector::Zero(p);
  g.log_noise_sd = Vector::Zero(p);
  // inner[j](a, b) = <A_ab, K_j>, adjoint[j] = sum_ab W_aj W_bj A_ab,
  // where A = alpha alpha^T - C^{-1} and dL = 1/2 tr(A dC).
  std::vector<Matrix> inner(static_cast<std::size_t>(q), Matrix::Zero(p, p));
  std::vector<Matrix> adjoint(static_cast<std::size_t>(q), Matrix::Zero(n, n));

  auto accumulate_block = [&](Eigen::Index a, Eigen::Index b, const Matrix& a_block) {
    for (Eigen::Index j = 0; j < q; ++j) {
      const auto js = static_cast<std::size_t>(j);
      inner[js](a, b) = a_block.cwiseProduct(grams[js]).sum();
      adjoint[js] += model.mixture(a, j) * model.mixture(b, j) * a_block;
    }
  };

  if (model.mode == CovarianceMode::full) {
    detail::check_cap(model, n);
    const auto chol = gp::chol_psd(detail::assemble_joint(grams, model, n, true));
    const Vector resid = detail::stacked_residual(scaled.y, model.bias);
    const Vector alpha = chol.solve(resid);
    g.log_likelihood = -0.5 * resid.dot(alpha) - 0.5 * chol.log_det() - 0.5 * static_cast<double>(n * p) * kLog2Pi;
    Matrix a_full = alpha * alpha.transpose() - chol.inverse();
    symmetrize(a_full);
    for (Eigen::Index a = 0; a < p; ++a) {
      g.bias[a] = alpha.segment(a * n, n).sum();
      const double s2 = model.noise_sd[a] * model.noise_sd[a];
      g.log_noise_sd[a] = s2 * a_full.block(a * n, a * n, n, n).trace();
      for (Eigen::Index b = 0; b < p; ++b) accumulate_block(a, b, a_full.block(a * n, b * n, n, n));
    }
  } else {
    for (Eigen::Index a = 0; a < p; ++a) {
      const auto chol = gp::chol_psd(detail::output_covariance(grams, model, a));
      const Vector resid = (scaled.y.col(a).array() - model.bias[a]).matrix();
      const Vector alpha = chol.solve(resid);
      g.log_likelihood += -0.5 * resid.dot(alpha) - 0.5 * chol.log_det() - 0.5 * static_cast<double>(n) * kLog2Pi;
      Matrix a_block = alpha * alpha.transpose() - chol.inverse();
      symmetrize(a_block);
      g.bias[a] = alpha.sum();
      g.log_noise_sd[a] = model.noise_sd[a] * model.noise_sd[a] * a_block.trace();
      accumulate_block(a, a, a_block);
    }
  }

  for (Eigen::Index j = 0; j < q; ++j) g.mixture.col(j) = inner[static_cast<std::size_t>(j)] * model.mixture.col(j);

  Matrix grad_psi = Matrix::Zero(n, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const Matrix& adj = adjoint[static_cast<std::size_t>(j)];
    const double ell = model.kernels[static_cast<std::size_t>(j)].lengthscale;
    for (Eigen::Index l = 0; l < n; ++l) {
      double acc = 0.0;
      for (Eigen::Index m = 0; m < n; ++m)
        if (m != l) acc += adj(l, m) * gp::se_kernel_input_grad(psi(l, j), psi(m, j), ell);
      grad_psi(l, j) = acc;
    }
  }
  g.network = net::backward(model.network, cache, grad_psi).grads;
  return g;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t n_steps = 1000;
  std::size_t slice_interval = 25;
  sampler::SliceConfig slice{};
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (slice_interval < 1) throw ConfigError("slice_interval must be positive");
    slice.validate();
  }
};

/// Packs {log lambda_j} then {log r_j}.
inline Vector pack_log_hypers(const DlgpModel& m) {
  const auto q = static_cast<Eigen::Index>(m.kernels.size());
  Vector x(2 * q);
  for (Eigen::Index j = 0; j < q; ++j) {
    x[j] = std::log(m.kernels[static_cast<std::size_t>(j)].lengthscale);
    x[q + j] = std::log(m.kernels[static_cast<std::size_t>(j)].nugget);
  }
  return x;
}

inline void unpack_log_hypers(DlgpModel& m, const Vector& x) {
  const auto q = static_cast<Eigen::Index>(m.kernels.size());
  for (Eigen::Index j = 0; j < q; ++j) {
    m.kernels[static_cast<std::size_t>(j)].lengthscale = std::exp(x[j]);
    m.kernels[static_cast<std::size_t>(j)].nugget = std::exp(x[q + j]);
  }
}

inline bool within_hyper_box(const Vector& x) {
  const Eigen::Index q = x.size() / 2;
  for (Eigen::Index j = 0; j < q; ++j) {
    if (x[j] < kLogLengthscaleMin || x[j] > kLogLengthscaleMax) return false;
    if (x[q + j] < kLogNuggetMin || x[q + j] > kLogNuggetMax) return false;
  }
  return true;
}

/// One hypercube slice-sampling update of all kernel hyperparameters with
/// the network, mixture and noise held fixed.
inline void resample_kernel_hypers(DlgpModel& model, const Matrix& psi, const Matrix& y,
                                   const sampler::SliceConfig& config, Rng& rng) {
  DlgpModel trial = model;
  auto target = [&](const Vector& x) -> double {
    if (!within_hyper_box(x)) return -std::numeric_limits<double>::infinity();
    unpack_log_hypers(trial, x);
    try {
      const double v = log_marginal_at(psi, trial, y);
      return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  Vector x0 = pack_log_hypers(model);
  // Initial values outside the box are pulled onto its boundary.
  const Eigen::Index q = x0.size() / 2;
  for (Eigen::Index j = 0; j < q; ++j) {
    x0[j] = std::clamp(x0[j], kLogLengthscaleMin, kLogLengthscaleMax);
    x0[q + j] = std::clamp(x0[q + j], kLogNuggetMin, kLogNuggetMax);
  }
  const auto draw = sampler::slice_sample_hypercube(target, x0, config, rng);
  unpack_log_hypers(model, draw.value);
}

struct TrainResult {
  DlgpModel model;
  std::vector<double> trace;  // log likelihood before each gradient step
  std::vector<std::string> diagnostics;
};

/// Names latent features whose values are (nearly) constant over the data.
inline std::vector<std::string> feature_diagnostics(const DlgpModel& model, const Matrix& psi) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < psi.cols() && psi.rows() > 1; ++j) {
    const double mean = psi.col(j).mean();
    const double sd = std::sqrt((psi.col(j).array() - mean).square().mean());
    const double ell = model.kernels[static_cast<std::size_t>(j)].lengthscale;
    if (sd < 1e-3 * ell)
      out.push_back("latent feature " + std::to_string(j + 1) + " is nearly constant (sd " + std::to_string(sd) +
                    ", lengthscale " + std::to_string(ell) + ")");
  }
  return out;
}

/// Gradient ascent on the per-observation log likelihood for the network,
/// mixture, bias and log noise, with a slice-sampling sweep over the kernel
/// hyperparameters after every `slice_interval` steps.
inline TrainResult train(DlgpModel model, const TrainingDataset& data, const TrainConfig& config) {
  config.validate();
  model.validate();
  const TrainingDataset scaled = model_scale(model, data);
  TrainResult result;
  result.trace.reserve(config.n_steps);
  Rng rng(derive_seed(config.seed, 0x747261696e));
  const double count = std::max<double>(1.0, static_cast<double>(scaled.size() * scaled.output_dim()));
  const double step = config.learning_rate / count;

  try {
    for (std::size_t s = 1; s <= config.n_steps; ++s) {
      DlgpGradients g;
      try {
        g = dlgp_gradients(model, scaled);
      } catch (const NumericalError& e) {
        throw TrainingError(s, e.what());
      }
      if (!std::isfinite(g.log_likelihood)) throw TrainingError(s, "log likelihood is not finite");
      result.trace.push_back(g.log_likelihood);

      net::axpy(model.network, step, g.network);
      model.mixture += step * g.mixture;
      model.bias += step * g.bias;
      model.noise_sd = (model.noise_sd.array().log() + step * g.log_noise_sd.array()).exp().matrix();
      if (!model.mixture.allFinite() || !model.bias.allFinite() || !model.noise_sd.allFinite() ||
          (model.noise_sd.array() <= 0.0).any())
        throw TrainingError(s, "parameters diverged");
      for (const auto& layer : model.network.layers)
        if (!layer.weight.allFinite() || !layer.bias.allFinite()) throw TrainingError(s, "network weights diverged");

      if (s % config.slice_interval == 0) {
        const Matrix psi = net::forward(model.network, scaled.theta);
        try {
          resample_kernel_hypers(model, psi, scaled.y, config.slice, rng);
        } catch (const Error& e) {
          throw TrainingError(s, std::string("hyperparameter sampling failed: ") + e.what());
        }
      }
    }
  } catch (TrainingError& e) {
    e.set_partial_trace(std::move(result.trace));
    throw;
  }
  result.diagnostics = feature_diagnostics(model, net::forward(model.network, scaled.theta));
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Prediction

struct PosteriorPrediction {
  Vector mean;        // p
  Matrix covariance;  // p x p
  Vector lo;          // p
  Vector hi;          // p
};

struct PredictOptions {
  double level = 0.90;
  bool include_noise = true;
  bool original_scale = true;
};

namespace detail {

/// Prior covariance between the outputs at one latent point.
inline Matrix query_prior(const DlgpModel& m, bool include_noise) {
  const Eigen::Index p = m.output_dim();
  Matrix s = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < m.latent_dim(); ++j) {
    const double amp = 1.0 + (include_noise ? m.kernels[static_cast<std::size_t>(j)].nugget : 0.0);
    s += amp * m.mixture.col(j) * m.mixture.col(j).transpose();
  }
  if (include_noise) s.diagonal() += m.noise_sd.array().square().matrix();
  return s;
}

inline void finish(PosteriorPrediction& pred, const DlgpModel& m, const PredictOptions& opt) {
  gp::tidy_covariance(pred.covariance);
  if (opt.original_scale) {
    const Vector& sd = m.output_stats.sd;
    pred.mean = (pred.mean.array() * sd.array() + m.output_stats.mean.array()).matrix();
    pred.covariance = sd.asDiagonal() * pred.covariance * sd.asDiagonal();
  }
  const double z = central_z(opt.level);
  const Vector half = z * pred.covariance.diagonal().cwiseSqrt();
  pred.lo = pred.mean - half;
  pred.hi = pred.mean + half;
}

}  // namespace detail

/// Conditional Gaussian of the outputs at each query row given the training
/// data. Queries are in original input units.
inline std::vector<PosteriorPrediction> predict(const DlgpModel& model, const TrainingDataset& data,
                                                const Matrix& query_theta, const PredictOptions& opt = {}) {
  model.validate();
  const TrainingDataset scaled = model_scale(model, data);
  if (query_theta.rows() < 1) throw InputError("predict needs at least one query row");
  if (query_theta.cols() != model.input_dim())
    throw InputError("query has " + std::to_string(query_theta.cols()) + " columns, model expects d = " +
                     std::to_string(model.input_dim()));
  const Matrix query_psi = net::forward(model.network, apply_standardize(query_theta, model.input_stats));
  const Matrix psi = net::forward(model.network, scaled.theta);
  const Eigen::Index n = psi.rows(), p = model.output_dim(), q = model.latent_dim();
  const Matrix prior = detail::query_prior(model, opt.include_noise);

  std::vector<PosteriorPrediction> out(static_cast<std::size_t>(query_psi.rows()));
  auto cross_features = [&](Eigen::Index row) {
    Matrix k(n, q);  // k(psi*_j, psi_nj)
    for (Eigen::Index j = 0; j < q; ++j) {
      const double ell = model.kernels[static_cast<std::size_t>(j)].lengthscale;
      for (Eigen::Index t = 0; t < n; ++t) k(t, j) = gp::se_kernel(query_psi(row, j), psi(t, j), ell);
    }
    return k;
  };

  if (n == 0) {
    for (auto& pred : out) {
      pred.mean = model.bias;
      pred.covariance = prior;
      detail::finish(pred, model, opt);
    }
    return out;
  }

  const auto grams = detail::latent_grams(psi, model, true);
  if (model.mode == CovarianceMode::full) {
    detail::check_cap(model, n);
    const auto chol = gp::chol_psd(detail::assemble_joint(grams, model, n, true));
    const Vector alpha = chol.solve(detail::stacked_residual(scaled.y, model.bias));
    for (Eigen::Index r = 0; r < query_psi.rows(); ++r) {
      const Matrix k = cross_features(r);
      Matrix cross(p, n * p);  // Cov(F_i(query), F_a(train_n))
      for (Eigen::Index a = 0; a < p; ++a) {
        const Matrix weights = model.mixture.array().rowwise() * model.mixture.row(a).array();  // p x q
        cross.block(0, a * n, p, n) = weights * k.transpose();
      }
      PosteriorPrediction& pred = out[static_cast<std::size_t>(r)];
      pred.mean = model.bias + cross * alpha;
      const Matrix v = chol.half_solve(cross.transpose());
      pred.covariance = prior - v.transpose() * v;
      detail::finish(pred, model, opt);
    }
    return out;
  }

  std::vector<gp::Cholesky> chols;
  std::vector<Vector> alphas;
  for (Eigen::Index a = 0; a < p; ++a) {
    chols.push_back(gp::chol_psd(detail::output_covariance(grams, model, a)));
    alphas.push_back(chols.back().solve((scaled.y.col(a).array() - model.bias[a]).matrix()));
  }
  for (Eigen::Index r = 0; r < query_psi.rows(); ++r) {
    const Matrix k = cross_features(r);
    PosteriorPrediction& pred = out[static_cast<std::size_t>(r)];
    pred.mean.resize(p);
    pred.covariance = Matrix::Zero(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
      const Vector kx = k * model.mixture.row(a).array().square().matrix().transpose();
      pred.mean[a] = model.bias[a] + kx.dot(alphas[static_cast<std::size_t>(a)]);
      const Vector v = chols[static_cast<std::size_t>(a)].half_solve(kx);
      pred.covariance(a, a) = prior(a, a) - v.squaredNorm();
    }
    detail::finish(pred, model, opt);
  }
  return out;
}

}  // namespace dlgp

#endif
