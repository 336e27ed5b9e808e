#ifndef DLGP_GP_CORE_HPP
#define DLGP_GP_CORE_HPP

// Univariate Gaussian process building blocks: unit-amplitude squared
// exponential kernel, nugget-augmented Gram matrices, jittered Cholesky,
// marginal likelihood and the conditional posterior.

#include "error.hpp"
#include "linalg.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>
#include <string>

namespace dlgp::gp {

struct KernelHyper {
  double lengthscale = 1.0;
  double nugget = 0.0;

  bool operator==(const KernelHyper&) const = default;
};

inline void validate(const KernelHyper& h) {
  if (!(h.lengthscale > 0.0) || !std::isfinite(h.lengthscale))
    throw DomainError("lengthscale must be positive and finite, got " + std::to_string(h.lengthscale));
  if (!(h.nugget >= 0.0) || !std::isfinite(h.nugget))
    throw DomainError("nugget must be non-negative and finite, got " + std::to_string(h.nugget));
}

inline double se_kernel(double x, double x2, double lengthscale) {
  if (!(lengthscale > 0.0)) throw DomainError("lengthscale must be positive");
  const double z = (x - x2) / lengthscale;
  return std::exp(-0.5 * z * z);
}

/// d k(x, x2) / dx.
inline double se_kernel_input_grad(double x, double x2, double lengthscale) {
  if (!(lengthscale > 0.0)) throw DomainError("lengthscale must be positive");
  const double diff = x - x2;
  const double z = diff / lengthscale;
  return -(diff / (lengthscale * lengthscale)) * std::exp(-0.5 * z * z);
}

/// k(xs_i, ys_j) without any nugget.
inline Matrix cross_kernel(const Vector& xs, const Vector& ys, double lengthscale) {
  if (!(lengthscale > 0.0)) throw DomainError("lengthscale must be positive");
  Matrix k(xs.size(), ys.size());
  const double inv = 1.0 / lengthscale;
  for (Eigen::Index i = 0; i < xs.size(); ++i)
    for (Eigen::Index j = 0; j < ys.size(); ++j) {
      const double z = (xs[i] - ys[j]) * inv;
      k(i, j) = std::exp(-0.5 * z * z);
    }
  return k;
}

inline Matrix gram(const Vector& xs, const KernelHyper& hyper) {
  validate(hyper);
  if (!xs.allFinite()) throw InputError("non-finite input passed to gram");
  const Eigen::Index n = xs.size();
  Matrix k(n, n);
  const double inv = 1.0 / hyper.lengthscale;
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0 + hyper.nugget;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double z = (xs[i] - xs[j]) * inv;
      k(i, j) = k(j, i) = std::exp(-0.5 * z * z);
    }
  }
  return k;
}

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-4;

struct Cholesky {
  Matrix lower;
  double jitter = 0.0;

  Eigen::Index size() const { return lower.rows(); }

  double log_det() const { return 2.0 * lower.diagonal().array().log().sum(); }

  /// K^{-1} b.
  template <typename Rhs>
  Matrix solve(const Rhs& b) const {
    Matrix x = lower.triangularView<Eigen::Lower>().solve(b);
    lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  /// L^{-1} b.
  template <typename Rhs>
  Matrix half_solve(const Rhs& b) const {
    return lower.triangularView<Eigen::Lower>().solve(b);
  }

  Matrix inverse() const { return solve(Matrix::Identity(size(), size())); }
};

/// Cholesky factor of K, escalating a diagonal jitter geometrically from
/// 1e-10 to at most 1e-4 only when the plain factorization fails.
inline Cholesky chol_psd(const Matrix& k) {
  if (k.rows() != k.cols()) throw InputError("chol_psd needs a square matrix");
  if (!k.allFinite()) throw NumericalError("matrix passed to chol_psd has non-finite entries");
  const Eigen::Index n = k.rows();
  Cholesky out;
  if (n == 0) {
    out.lower.resize(0, 0);
    return out;
  }
  double jitter = 0.0;
  for (;;) {
    Eigen::LLT<Matrix> llt(n);
    if (jitter == 0.0) {
      llt.compute(k);
    } else {
      Matrix kj = k;
      kj.diagonal().array() += jitter;
      llt.compute(kj);
    }
    if (llt.info() == Eigen::Success) {
      out.lower = llt.matrixL();
      if (out.lower.diagonal().minCoeff() > 0.0) {
        out.jitter = jitter;
        return out;
      }
    }
    if (jitter >= kJitterMax) break;
    jitter = jitter == 0.0 ? kJitterStart : std::min(jitter * 10.0, kJitterMax);
  }
  Matrix kj = k;
  kj.diagonal().array() += kJitterMax;
  Eigen::LDLT<Matrix> ldlt(kj);
  const Vector d = ldlt.vectorD();
  Eigen::Index worst = 0;
  const double pivot = d.minCoeff(&worst);
  std::ostringstream msg;
  msg << "Cholesky failed at maximum jitter " << kJitterMax << "; smallest pivot " << pivot << " at index "
      << worst;
  throw NumericalError(msg.str());
}

/// log N(y | 0, K).
inline double log_marginal(const Vector& y, const Cholesky& chol) {
  if (y.size() != chol.size()) throw InputError("log_marginal: y and K sizes differ");
  const Vector half = chol.half_solve(y);
  return -0.5 * half.squaredNorm() - 0.5 * chol.log_det() - 0.5 * static_cast<double>(y.size()) * kLog2Pi;
}

inline double log_marginal(const Vector& y, const Matrix& k) {
  if (y.size() != k.rows() || k.rows() != k.cols()) throw InputError("log_marginal: y and K sizes differ");
  if (!y.allFinite()) throw InputError("log_marginal: non-finite targets");
  return log_marginal(y, chol_psd(k));
}

struct Posterior {
  Vector mean;
  Matrix covariance;
};

/// Clamp tiny negative variances produced by cancellation.
inline void tidy_covariance(Matrix& cov) {
  symmetrize(cov);
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    if (cov(i, i) < 0.0) cov(i, i) = 0.0;
}

/// Posterior of a constant-mean GP. The query covariance carries the nugget
/// when include_noise is set (observation-level prediction).
inline Posterior gp_posterior(const Vector& train_x, const Vector& train_y, const Vector& query_x,
                              const KernelHyper& hyper, double mean_fn, bool include_noise = true) {
  validate(hyper);
  if (train_x.size() != train_y.size()) throw InputError("gp_posterior: train_x and train_y differ in length");
  if (query_x.size() < 1) throw InputError("gp_posterior: empty query");
  if (!train_y.allFinite() || !query_x.allFinite()) throw InputError("gp_posterior: non-finite input");

  Posterior post;
  Matrix prior = cross_kernel(query_x, query_x, hyper.lengthscale);
  if (include_noise) prior.diagonal().array() += hyper.nugget;

  if (train_x.size() == 0) {
    post.mean = Vector::Constant(query_x.size(), mean_fn);
    post.covariance = prior;
    return post;
  }
  const Cholesky chol = chol_psd(gram(train_x, hyper));
  const Matrix cross = cross_kernel(query_x, train_x, hyper.lengthscale);  // M x N
  const Vector resid = (train_y.array() - mean_fn).matrix();
  post.mean = (cross * chol.solve(resid)).array() + mean_fn;
  const Matrix v = chol.half_solve(cross.transpose());
  post.covariance = prior - v.transpose() * v;
  tidy_covariance(post.covariance);
  return post;
}

}  // namespace dlgp::gp

#endif
