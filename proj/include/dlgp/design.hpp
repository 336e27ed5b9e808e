#ifndef DLGP_DESIGN_HPP
#define DLGP_DESIGN_HPP

// Scenario parameter ranges and symmetric Latin hypercube designs.

#include "csv.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

namespace dlgp {

struct ParameterRange {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
};

struct ScenarioSpec {
  std::vector<ParameterRange> parameters;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(parameters.size()); }

  void validate() const {
    if (parameters.empty()) throw ConfigError("scenario spec has no parameters");
    for (const auto& p : parameters)
      if (!(p.lo < p.hi) || !std::isfinite(p.lo) || !std::isfinite(p.hi))
        throw ConfigError("parameter " + p.name + ": need lo < hi, got [" + csv::format_double(p.lo) + ", " +
                          csv::format_double(p.hi) + "]");
  }

  bool contains(const Vector& theta) const {
    if (theta.size() != dim()) return false;
    for (Eigen::Index k = 0; k < dim(); ++k) {
      const auto& p = parameters[static_cast<std::size_t>(k)];
      if (!(theta[k] >= p.lo && theta[k] <= p.hi)) return false;
    }
    return true;
  }
};

/// Epidemic scenario ranges. The travel-reduction range is printed in the
/// source table as a copy of the transmission range; [0, 1] is used here.
inline ScenarioSpec default_epidemic_spec() {
  return {{{"transmission_probability", 3e-5, 8e-5},
           {"initial_infected", 1.0, 20.0},
           {"hospital_delay_weeks", 2.0, 10.0},
           {"hospital_efficacy", 0.1, 0.8},
           {"travel_reduction", 0.0, 1.0}}};
}

/// m x d design with one point per stratum of an m-way partition of each
/// range, closed under x -> lo + hi - x: row k mirrors row m - 1 - k.
inline Matrix symmetric_lhs(std::size_t m, const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (m < 2 || m % 2 != 0)
    throw InputError("symmetric Latin hypercube needs an even m >= 2; got " + std::to_string(m) + ", try " +
                     std::to_string(m < 2 ? 2 : m + 1));
  const std::size_t half = m / 2;
  Matrix design(static_cast<Eigen::Index>(m), spec.dim());
  Rng rng(derive_seed(seed, 0x6c6873));
  std::vector<std::size_t> strata(half);
  for (Eigen::Index j = 0; j < spec.dim(); ++j) {
    const auto& range = spec.parameters[static_cast<std::size_t>(j)];
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    rng.shuffle(strata.begin(), strata.end());
    for (std::size_t k = 0; k < half; ++k) {
      // Unit-cube position of row k; its mirror sits at 1 - u.
      std::size_t s = strata[k];
      if (rng.uniform() < 0.5) s = m - 1 - s;
      const double u = (static_cast<double>(s) + rng.uniform()) / static_cast<double>(m);
      const auto row = static_cast<Eigen::Index>(k);
      const auto mirror = static_cast<Eigen::Index>(m - 1 - k);
      design(row, j) = range.lo + u * (range.hi - range.lo);
      design(mirror, j) = range.lo + (1.0 - u) * (range.hi - range.lo);
    }
  }
  return design;
}

/// Stratum index of each entry on the m-way partition of its range.
inline std::vector<std::vector<std::size_t>> lhs_strata(const Matrix& design, const ScenarioSpec& spec) {
  const auto m = static_cast<std::size_t>(design.rows());
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(design.cols()));
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    const auto& range = spec.parameters[static_cast<std::size_t>(j)];
    for (Eigen::Index r = 0; r < design.rows(); ++r) {
      const double u = (design(r, j) - range.lo) / (range.hi - range.lo);
      const auto s = static_cast<std::size_t>(std::floor(u * static_cast<double>(m)));
      out[static_cast<std::size_t>(j)].push_back(std::min(s, m - 1));
    }
  }
  return out;
}

inline void write_design_csv(const std::filesystem::path& path, const Matrix& design) {
  csv::Writer w(path);
  w.header(csv::numbered("theta_", static_cast<std::size_t>(design.cols())));
  for (Eigen::Index r = 0; r < design.rows(); ++r) {
    for (Eigen::Index c = 0; c < design.cols(); ++c) w.cell(design(r, c));
    w.end_row();
  }
  w.close();
}

inline Matrix read_design_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read_numeric(path);
  if (table.header.empty() || table.header != csv::numbered("theta_", table.header.size()))
    throw InputError(path.string() + ": expected columns theta_1..theta_d");
  Matrix design(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t c = 0; c < table.header.size(); ++c)
      design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table.rows[r][c];
  return design;
}

}  // namespace dlgp

#endif
