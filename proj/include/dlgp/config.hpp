#ifndef DLGP_CONFIG_HPP
#define DLGP_CONFIG_HPP

// Experiment configuration, read from an INI file. Relative paths are
// resolved against the directory holding the file. Every key is optional.
//
//   [data]
//   train = quantiles.csv        xy, quantile-design or motorcycle CSV; prep-quantiles writes here
//   format = auto                auto | xy | quantile_design | motorcycle
//   replicates = replicates.csv  written by simulate, read by prep-quantiles
//   query = query.csv
//   motorcycle = motorcycle.csv
//   log1p_outputs = false        train on log(1 + y), report on the y scale
//   holdout = 3, 17              scenario ids left out of a quantile design
//
//   [network]
//   layers = 8:tanh, 2:tanh      the last width is the latent dimension q
//
//   [model]
//   latent_dim = 2               optional cross-check against the last width
//   mode = full                  full | per_output
//   dense_cap = 4000
//   noise_sd = 0.5
//   lengthscale = 1.0
//   nugget = 0.01
//
//   [train]
//   learning_rate = 0.01
//   steps = 1000
//   slice_interval = 25
//   slice_width = 1.0
//   seed = 0
//
//   [quantiles]
//   levels = 0.05, 0.275, 0.5, 0.725, 0.95
//
//   [predict]
//   level = 0.90
//   include_noise = true
//
//   [benchmark]
//   splits = 300
//   train_fraction = 0.9
//   seed = 0
//   models = dlgp, gp, qdl, mean
//   qdl_layers = 16
//   qdl_learning_rate = 0.05
//   qdl_steps = 3000
//
//   [scenario]
//   m = 100
//   replicates = 100
//   horizon = 56
//   seed = 0
//   theta_1 = 3e-5, 8e-5         override a parameter range
//
//   [output]
//   dir = out

#include "dlgp.hpp"
#include "design.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "quantile.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace dlgp {

enum class DataFormat { auto_detect, xy, quantile_design, motorcycle };

struct ExperimentConfig {
  std::filesystem::path base_dir = ".";

  std::filesystem::path train_path;
  DataFormat format = DataFormat::auto_detect;
  std::filesystem::path replicates_path;
  std::filesystem::path query_path;
  std::filesystem::path motorcycle_path;
  bool log1p_outputs = false;
  std::vector<long long> holdout;

  ModelInit init{{{8, net::Activation::tanh}, {2, net::Activation::tanh}}};
  TrainConfig train;
  std::vector<double> levels = kTrajectoryQuantiles;
  bool levels_from_file = false;
  double predict_level = 0.90;
  bool include_noise = true;

  std::size_t splits = 300;
  double train_fraction = 0.9;
  std::uint64_t benchmark_seed = 0;
  std::vector<std::string> models = {"dlgp", "gp", "qdl", "mean"};
  std::vector<int> qdl_hidden = {16};
  QuantileTrainConfig qdl;

  ScenarioSpec scenario = default_epidemic_spec();
  std::size_t scenarios = 100;
  std::size_t replicates = 100;
  std::size_t horizon = 56;
  std::uint64_t scenario_seed = 0;

  std::filesystem::path output_dir = ".";
};

inline const std::vector<std::string>& known_models() {
  static const std::vector<std::string> names = {"dlgp", "gp", "qdl", "mean"};
  return names;
}

namespace config_detail {

using boost::property_tree::ptree;

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::vector<std::string> list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& cell : csv::split(text))
    if (!cell.empty()) out.push_back(cell);
  return out;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  if constexpr (std::is_unsigned_v<T>)
    if (text.find('-') != std::string::npos) throw ConfigError(key + " must be non-negative, got '" + text + "'");
  std::istringstream in(text);
  T value{};
  in >> value;
  if (!in || !(in >> std::ws).eof()) throw ConfigError("cannot parse " + key + " = '" + text + "'");
  return value;
}

template <>
inline bool parse_value<bool>(const std::string& key, const std::string& text) {
  const std::string t = lower(csv::trim(text));
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError("cannot parse " + key + " = '" + text + "' as a boolean");
}

inline std::vector<double> doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& cell : list(text)) out.push_back(parse_value<double>(key, cell));
  return out;
}

class Reader {
 public:
  explicit Reader(const ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    seen_.insert(section + "." + key);
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto value = sec->get_optional<std::string>(ptree::path_type(key, '\0'));
    if (!value) return std::nullopt;
    return csv::trim(*value);
  }

  template <typename T>
  void read(const std::string& section, const std::string& key, T& target) {
    if (auto v = get(section, key)) target = parse_value<T>(section + "." + key, *v);
  }

  void check_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' is outside any [section]");
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (seen_.count(full) == 0)
          throw ConfigError("unknown config key [" + section + "] " + key);
      }
    }
  }

 private:
  const ptree& tree_;
  std::set<std::string> seen_;
};

}  // namespace config_detail

/// "8:tanh, 2:relu"; a bare width means tanh.
inline std::vector<HiddenLayer> parse_layers(const std::string& text) {
  std::vector<HiddenLayer> out;
  for (const auto& cell : config_detail::list(text)) {
    const auto colon = cell.find(':');
    HiddenLayer layer;
    layer.width = config_detail::parse_value<int>("network.layers", csv::trim(cell.substr(0, colon)));
    if (colon != std::string::npos) {
      const std::string act = csv::trim(cell.substr(colon + 1));
      const auto parsed = net::parse_activation(act);
      if (!parsed) throw ConfigError("unknown activation '" + act + "' in network.layers (tanh, relu, identity)");
      layer.activation = *parsed;
    }
    if (layer.width < 1) throw ConfigError("network.layers widths must be positive");
    out.push_back(layer);
  }
  if (out.empty()) throw ConfigError("network.layers is empty");
  return out;
}

inline std::string format_layers(const std::vector<HiddenLayer>& layers) {
  std::string out;
  for (const auto& l : layers) {
    if (!out.empty()) out += ", ";
    out += std::to_string(l.width) + ":" + std::string(net::to_string(l.activation));
  }
  return out;
}

inline std::vector<std::string> parse_models(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& raw : config_detail::list(text)) {
    const std::string name = config_detail::lower(raw);
    const auto& known = known_models();
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw ConfigError("unknown model '" + raw + "' (choose from dlgp, gp, qdl, mean)");
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  if (out.empty()) throw ConfigError("model list is empty");
  return out;
}

inline void validate(const ExperimentConfig& c) {
  if (c.init.layers.empty()) throw ConfigError("network needs at least one layer");
  validate_quantile_levels(c.levels);
  c.train.validate();
  c.qdl.validate();
  if (!(c.predict_level > 0.0 && c.predict_level < 1.0)) throw ConfigError("predict.level must lie in (0, 1)");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
    throw ConfigError("benchmark.train_fraction must lie in (0, 1)");
  if (c.splits < 1) throw ConfigError("benchmark.splits must be positive");
  if (c.horizon < 1) throw ConfigError("scenario.horizon must be positive");
  if (c.replicates < 1) throw ConfigError("scenario.replicates must be positive");
  c.scenario.validate();
}

inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  using config_detail::Reader;
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  Reader r(tree);
  ExperimentConfig c;
  c.base_dir = base_dir;
  auto path = [&](const std::string& section, const std::string& key, std::filesystem::path& target) {
    if (auto v = r.get(section, key)) {
      std::filesystem::path p(*v);
      target = p.is_absolute() ? p : base_dir / p;
    }
  };

  path("data", "train", c.train_path);
  if (auto v = r.get("data", "format")) {
    const std::string f = config_detail::lower(*v);
    if (f == "auto")
      c.format = DataFormat::auto_detect;
    else if (f == "xy")
      c.format = DataFormat::xy;
    else if (f == "quantile_design")
      c.format = DataFormat::quantile_design;
    else if (f == "motorcycle")
      c.format = DataFormat::motorcycle;
    else
      throw ConfigError("data.format must be auto, xy, quantile_design or motorcycle");
  }
  path("data", "replicates", c.replicates_path);
  path("data", "query", c.query_path);
  path("data", "motorcycle", c.motorcycle_path);
  r.read("data", "log1p_outputs", c.log1p_outputs);
  if (auto v = r.get("data", "holdout"))
    for (const auto& cell : config_detail::list(*v))
      c.holdout.push_back(config_detail::parse_value<long long>("data.holdout", cell));

  if (auto v = r.get("network", "layers")) c.init.layers = parse_layers(*v);
  if (auto v = r.get("model", "latent_dim")) {
    const int q = config_detail::parse_value<int>("model.latent_dim", *v);
    if (q != c.init.layers.back().width)
      throw ConfigError("model.latent_dim = " + std::to_string(q) + " but the last network layer has width " +
                        std::to_string(c.init.layers.back().width));
  }
  if (auto v = r.get("model", "mode")) {
    if (*v == "full")
      c.init.mode = CovarianceMode::full;
    else if (*v == "per_output")
      c.init.mode = CovarianceMode::per_output;
    else
      throw ConfigError("model.mode must be full or per_output");
  }
  r.read("model", "dense_cap", c.init.dense_cap);
  r.read("model", "noise_sd", c.init.noise_sd);
  r.read("model", "lengthscale", c.init.lengthscale);
  r.read("model", "nugget", c.init.nugget);
  if (!(c.init.noise_sd > 0.0 && c.init.lengthscale > 0.0 && c.init.nugget > 0.0))
    throw ConfigError("model.noise_sd, lengthscale and nugget must be positive");

  r.read("train", "learning_rate", c.train.learning_rate);
  r.read("train", "steps", c.train.n_steps);
  r.read("train", "slice_interval", c.train.slice_interval);
  r.read("train", "slice_width", c.train.slice.width);
  r.read("train", "seed", c.train.seed);

  if (auto v = r.get("quantiles", "levels")) {
    c.levels = config_detail::doubles("quantiles.levels", *v);
    c.levels_from_file = true;
  }

  r.read("predict", "level", c.predict_level);
  r.read("predict", "include_noise", c.include_noise);

  r.read("benchmark", "splits", c.splits);
  r.read("benchmark", "train_fraction", c.train_fraction);
  r.read("benchmark", "seed", c.benchmark_seed);
  if (auto v = r.get("benchmark", "models")) c.models = parse_models(*v);
  if (auto v = r.get("benchmark", "qdl_layers")) {
    c.qdl_hidden.clear();
    for (const auto& cell : config_detail::list(*v))
      c.qdl_hidden.push_back(config_detail::parse_value<int>("benchmark.qdl_layers", cell));
  }
  r.read("benchmark", "qdl_learning_rate", c.qdl.learning_rate);
  r.read("benchmark", "qdl_steps", c.qdl.n_steps);

  r.read("scenario", "m", c.scenarios);
  r.read("scenario", "replicates", c.replicates);
  r.read("scenario", "horizon", c.horizon);
  r.read("scenario", "seed", c.scenario_seed);
  for (std::size_t k = 0; k < c.scenario.parameters.size(); ++k) {
    const std::string key = "theta_" + std::to_string(k + 1);
    if (auto v = r.get("scenario", key)) {
      const auto range = config_detail::doubles("scenario." + key, *v);
      if (range.size() != 2) throw ConfigError("scenario." + key + " needs two numbers: lo, hi");
      c.scenario.parameters[k].lo = range[0];
      c.scenario.parameters[k].hi = range[1];
    }
  }

  path("output", "dir", c.output_dir);
  r.check_unknown();
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) throw InputError("file not found: " + file.string());
  std::ifstream in(file);
  if (!in) throw InputError("cannot open " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto dir = file.parent_path();
  if (dir.empty()) dir = ".";
  return parse_config(buffer.str(), dir);
}

}  // namespace dlgp

#endif
