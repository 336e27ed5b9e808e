#ifndef DLGP_STATS_HPP
#define DLGP_STATS_HPP

#include "error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace dlgp {

/// Half-width multiplier of a central Gaussian interval, e.g. 1.6449 at 0.90.
inline double central_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("interval level must lie in (0, 1)");
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 0.5 + 0.5 * level);
}

inline double normal_log_density(double y, double mean, double var) {
  const double r = y - mean;
  return -0.5 * (std::log(2.0 * M_PI * var) + r * r / var);
}

}  // namespace dlgp

#endif
