#ifndef DLGP_SAMPLER_HPP
#define DLGP_SAMPLER_HPP

// Slice sampling: univariate stepping-out with shrinkage, and the
// multivariate hypercube variant with per-dimension shrinkage.

#include "error.hpp"
#include "linalg.hpp"
#include "rng.hpp"

#include <cmath>
#include <concepts>
#include <limits>
#include <sstream>

namespace dlgp::sampler {

struct SliceConfig {
  double width = 1.0;    // initial bracket size per dimension
  int max_stepouts = 10; // per side, univariate only
  int max_shrinks = 200;

  void validate() const {
    if (!(width > 0.0) || !std::isfinite(width)) throw ConfigError("slice width must be positive");
    if (max_stepouts < 1) throw ConfigError("max_stepouts must be at least 1");
    if (max_shrinks < 1) throw ConfigError("max_shrinks must be at least 1");
  }
};

/// Bracket size below which shrinkage gives up.
inline constexpr double kMinBracket = 1e-12;

template <typename T>
struct Draw {
  T value;
  double log_density = 0.0;  // at value
  double log_height = 0.0;   // log u of the auxiliary slice variable
  int evaluations = 0;
};

template <typename F>
concept LogDensity1d = std::invocable<F&, double> && std::convertible_to<std::invoke_result_t<F&, double>, double>;

template <typename F>
concept LogDensityNd =
    std::invocable<F&, const Vector&> && std::convertible_to<std::invoke_result_t<F&, const Vector&>, double>;

template <LogDensity1d F>
Draw<double> slice_sample_1d(F&& log_density, double x0, const SliceConfig& config, Rng& rng) {
  config.validate();
  const double f0 = log_density(x0);
  if (!std::isfinite(f0)) throw DomainError("log density is not finite at the initial point");
  Draw<double> draw{x0, f0, f0 + std::log(rng.uniform_open()), 1};
  const double w = config.width;

  double left = x0 - rng.uniform() * w;
  double right = left + w;
  for (int i = 0; i < config.max_stepouts && log_density(left) > draw.log_height; ++i) {
    left -= w;
    ++draw.evaluations;
  }
  for (int i = 0; i < config.max_stepouts && log_density(right) > draw.log_height; ++i) {
    right += w;
    ++draw.evaluations;
  }
  draw.evaluations += 2;

  for (int attempt = 0; attempt < config.max_shrinks; ++attempt) {
    const double x1 = left + rng.uniform() * (right - left);
    const double f1 = log_density(x1);
    ++draw.evaluations;
    if (f1 > draw.log_height) {
      if (!(f1 >= draw.log_height)) throw InternalError("accepted point lies outside the slice");
      draw.value = x1;
      draw.log_density = f1;
      return draw;
    }
    if (x1 < x0)
      left = x1;
    else
      right = x1;
    if (right - left < kMinBracket) break;
  }
  std::ostringstream msg;
  msg << "slice bracket collapsed around " << x0 << " without an accepted point";
  throw NumericalError(msg.str());
}

template <LogDensityNd F>
Draw<Vector> slice_sample_hypercube(F&& log_density, const Vector& x0, const SliceConfig& config, Rng& rng,
                                    const Vector* widths = nullptr) {
  config.validate();
  const Eigen::Index k = x0.size();
  if (widths && widths->size() != k) throw ConfigError("per-dimension widths do not match the state size");
  const double f0 = log_density(x0);
  if (!std::isfinite(f0)) throw DomainError("log density is not finite at the initial point");
  Draw<Vector> draw{x0, f0, f0 + std::log(rng.uniform_open()), 1};

  Vector left(k), right(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double w = widths ? (*widths)[i] : config.width;
    if (!(w > 0.0)) throw ConfigError("slice width must be positive");
    left[i] = x0[i] - rng.uniform() * w;
    right[i] = left[i] + w;
  }

  Vector x1(k);
  for (int attempt = 0; attempt < config.max_shrinks; ++attempt) {
    for (Eigen::Index i = 0; i < k; ++i) x1[i] = left[i] + rng.uniform() * (right[i] - left[i]);
    const double f1 = log_density(x1);
    ++draw.evaluations;
    if (f1 > draw.log_height) {
      if (!(f1 >= draw.log_height)) throw InternalError("accepted point lies outside the slice");
      draw.value = x1;
      draw.log_density = f1;
      return draw;
    }
    bool collapsed = true;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (x1[i] < x0[i])
        left[i] = x1[i];
      else
        right[i] = x1[i];
      if (right[i] - left[i] >= kMinBracket) collapsed = false;
    }
    if (collapsed) break;
  }
  throw NumericalError("hypercube slice collapsed without an accepted point");
}

}  // namespace dlgp::sampler

#endif
