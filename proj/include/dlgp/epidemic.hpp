#ifndef DLGP_EPIDEMIC_HPP
#define DLGP_EPIDEMIC_HPP

// Desk-scale stochastic epidemic simulator. A weekly chain-binomial SIR
// process over a closed population, used as a stand-in for a large
// agent-based model when exercising the quantile-kriging workflow.
//
//   theta_1  per-contact weekly transmission probability
//   theta_2  initial infected (rounded, at least 1)
//   theta_3  weeks until hospitalisation starts
//   theta_4  fraction of transmission removed once hospitalisation starts
//   theta_5  travel reduction: fewer imported cases, slightly damped mixing

#include "csv.hpp"
#include "design.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dlgp {

struct EpidemicSettings {
  long population = 20000;
  double recovery_probability = 0.5;
  double import_rate = 0.1;          // weekly imported cases with no travel reduction
  double travel_mixing_damping = 0.25;
};

struct ReplicateTable {
  std::vector<long long> scenario_id;
  std::vector<long long> replicate_id;
  Matrix theta;       // rows x d
  Matrix trajectory;  // rows x T, cumulative counts

  Eigen::Index rows() const { return trajectory.rows(); }
  Eigen::Index horizon() const { return trajectory.cols(); }

  void append(const ReplicateTable& other) {
    if (rows() > 0 && (other.theta.cols() != theta.cols() || other.horizon() != horizon()))
      throw InputError("replicate tables have different shapes");
    const Eigen::Index r0 = rows();
    theta.conservativeResize(r0 + other.rows(), other.theta.cols());
    trajectory.conservativeResize(r0 + other.rows(), other.horizon());
    theta.bottomRows(other.rows()) = other.theta;
    trajectory.bottomRows(other.rows()) = other.trajectory;
    scenario_id.insert(scenario_id.end(), other.scenario_id.begin(), other.scenario_id.end());
    replicate_id.insert(replicate_id.end(), other.replicate_id.begin(), other.replicate_id.end());
  }

  /// Distinct scenarios in first-seen order, with their theta and
  /// replicate trajectories (replicates x T).
  struct Scenario {
    long long id;
    Vector theta;
    Matrix trajectories;
  };
  std::vector<Scenario> by_scenario() const {
    std::vector<Scenario> out;
    std::map<long long, std::size_t> index;
    std::vector<std::vector<Eigen::Index>> members;
    for (Eigen::Index r = 0; r < rows(); ++r) {
      const long long id = scenario_id[static_cast<std::size_t>(r)];
      auto [it, fresh] = index.emplace(id, out.size());
      if (fresh) {
        out.push_back({id, theta.row(r).transpose(), Matrix()});
        members.emplace_back();
      } else if (out[it->second].theta != theta.row(r).transpose()) {
        throw InputError("scenario " + std::to_string(id) + " has rows with different theta");
      }
      members[it->second].push_back(r);
    }
    for (std::size_t s = 0; s < out.size(); ++s) {
      out[s].trajectories.resize(static_cast<Eigen::Index>(members[s].size()), horizon());
      for (std::size_t k = 0; k < members[s].size(); ++k)
        out[s].trajectories.row(static_cast<Eigen::Index>(k)) = trajectory.row(members[s][k]);
    }
    return out;
  }
};

/// One replicate: cumulative infections at the end of weeks 1..horizon.
inline Vector simulate_trajectory(const Vector& theta, std::size_t horizon, Rng& rng,
                                  const EpidemicSettings& settings = {}) {
  const double beta = theta[0];
  const long initial = std::max(1L, std::lround(theta[1]));
  const double delay = theta[2], efficacy = theta[3], travel = theta[4];

  long susceptible = settings.population - initial;
  long infectious = initial;
  double cumulative = static_cast<double>(initial);
  const double mixing = 1.0 - settings.travel_mixing_damping * travel;
  const double imports_mean = settings.import_rate * (1.0 - travel);
  Vector out(static_cast<Eigen::Index>(horizon));
  for (std::size_t week = 0; week < horizon; ++week) {
    const double control = static_cast<double>(week) >= delay ? 1.0 - efficacy : 1.0;
    const double pressure = beta * static_cast<double>(infectious) * mixing * control;
    const long local = rng.binomial(susceptible, 1.0 - std::exp(-pressure));
    susceptible -= local;
    const long imported = std::min(susceptible, rng.poisson(imports_mean));
    susceptible -= imported;
    const long recovered = rng.binomial(infectious, settings.recovery_probability);
    infectious += local + imported - recovered;
    cumulative += static_cast<double>(local + imported);
    out[static_cast<Eigen::Index>(week)] = cumulative;
  }
  return out;
}

inline void check_theta(const Vector& theta, const ScenarioSpec& spec) {
  if (!spec.contains(theta)) {
    std::string msg = "theta outside the scenario ranges:";
    for (Eigen::Index k = 0; k < theta.size(); ++k) msg += " " + csv::format_double(theta[k]);
    throw InputError(msg);
  }
}

inline ReplicateTable simulate_epidemic(const Vector& theta, std::size_t n_replicates, std::size_t horizon,
                                        std::uint64_t seed, long long scenario_id = 0,
                                        const ScenarioSpec& spec = default_epidemic_spec(),
                                        const EpidemicSettings& settings = {}) {
  if (theta.size() != 5) throw InputError("simulate_epidemic needs a 5-vector theta, got " + std::to_string(theta.size()));
  check_theta(theta, spec);
  if (horizon < 1) throw InputError("horizon must be at least one week");
  ReplicateTable table;
  const auto n = static_cast<Eigen::Index>(n_replicates);
  table.theta = theta.transpose().replicate(n, 1);
  table.trajectory.resize(n, static_cast<Eigen::Index>(horizon));
  for (std::size_t r = 0; r < n_replicates; ++r) {
    Rng rng(derive_seed(seed, r));
    table.trajectory.row(static_cast<Eigen::Index>(r)) = simulate_trajectory(theta, horizon, rng, settings).transpose();
    table.scenario_id.push_back(scenario_id);
    table.replicate_id.push_back(static_cast<long long>(r));
  }
  return table;
}

/// Every design row, scenario i seeded with derive_seed(seed, i).
inline ReplicateTable simulate_design(const Matrix& design, std::size_t n_replicates, std::size_t horizon,
                                      std::uint64_t seed, const ScenarioSpec& spec = default_epidemic_spec()) {
  ReplicateTable all;
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    all.append(simulate_epidemic(design.row(i).transpose(), n_replicates, horizon,
                                 derive_seed(seed, 0x5c00 + static_cast<std::uint64_t>(i)), i, spec));
  return all;
}

inline void write_replicate_csv(const std::filesystem::path& path, const ReplicateTable& table) {
  csv::Writer w(path);
  std::vector<std::string> header{"scenario_id", "replicate_id"};
  for (const auto& h : csv::numbered("theta_", static_cast<std::size_t>(table.theta.cols()))) header.push_back(h);
  for (const auto& h : csv::numbered("t_", static_cast<std::size_t>(table.horizon()), 0)) header.push_back(h);
  w.header(header);
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    w.cell(table.scenario_id[static_cast<std::size_t>(r)]).cell(table.replicate_id[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < table.theta.cols(); ++c) w.cell(table.theta(r, c));
    for (Eigen::Index c = 0; c < table.horizon(); ++c) w.cell(table.trajectory(r, c));
    w.end_row();
  }
  w.close();
}

inline ReplicateTable read_replicate_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read_numeric(path);
  const auto& h = table.header;
  std::size_t d = 0;
  while (2 + d < h.size() && h[2 + d] == "theta_" + std::to_string(d + 1)) ++d;
  const std::size_t horizon = h.size() - 2 - d;
  if (h.size() < 4 || h[0] != "scenario_id" || h[1] != "replicate_id" || d == 0 || horizon == 0)
    throw InputError(path.string() + ": expected columns scenario_id, replicate_id, theta_1..theta_d, t_0..t_{T-1}");
  ReplicateTable out;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  out.theta.resize(n, static_cast<Eigen::Index>(d));
  out.trajectory.resize(n, static_cast<Eigen::Index>(horizon));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    out.scenario_id.push_back(std::llround(row[0]));
    out.replicate_id.push_back(std::llround(row[1]));
    for (std::size_t c = 0; c < d; ++c) out.theta(r, static_cast<Eigen::Index>(c)) = row[2 + c];
    for (std::size_t c = 0; c < horizon; ++c) {
      const double v = row[2 + d + c];
      if (v < 0.0 || (c > 0 && v < row[2 + d + c - 1]))
        throw InputError(path.string() + " line " + std::to_string(table.line_numbers[static_cast<std::size_t>(r)]) +
                         ": trajectories must be non-negative and non-decreasing");
      out.trajectory(r, static_cast<Eigen::Index>(c)) = v;
    }
  }
  return out;
}

}  // namespace dlgp

#endif
