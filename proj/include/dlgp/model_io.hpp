#ifndef DLGP_MODEL_IO_HPP
#define DLGP_MODEL_IO_HPP

// Structured-text model file. A JSON object with sorted keys:
//
//   format        "dlgp-model"
//   version       "1.1"
//   network       {layers: [{activation, bias[out], weight[out][in]}]}
//   mixture       p rows of q numbers
//   bias          p numbers
//   noise_sd      p numbers
//   kernels       q objects {lengthscale, nugget}
//   input_stats   {mean[d], sd[d], constant[d]}
//   output_stats  {mean[p], sd[p], constant[p]}
//   mode          "full" | "per_output"             (added in 1.1)
//   dense_cap     integer                           (added in 1.1)
//   training      {theta[N][d], y[N][p]} standardized training rows
//   output_transform  "none" | "log1p"    optional; how y was mapped before fitting
//
// Doubles are written in shortest round-trip form, so save -> load is exact.

#include "dataset.hpp"
#include "dlgp.hpp"
#include "error.hpp"
#include "linalg.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dlgp {

inline constexpr const char* kModelFormat = "dlgp-model";
inline constexpr const char* kModelVersion = "1.1";

namespace io_detail {

using nlohmann::json;

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

inline json to_json(const ColumnStats& s) {
  json c = json::array();
  for (bool b : s.constant) c.push_back(b);
  return {{"mean", to_json(s.mean)}, {"sd", to_json(s.sd)}, {"constant", c}};
}

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw FormatError("model file: missing '" + std::string(key) + "' in " + where);
  return obj.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw FormatError("model file: expected a number in " + where);
  return j.get<double>();
}

inline Vector vector_from(const json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError("model file: expected an array in " + where);
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where);
  return v;
}

/// Rows x cols; an empty array gives 0 x `empty_cols`.
inline Matrix matrix_from(const json& j, const std::string& where, Eigen::Index empty_cols = 0) {
  if (!j.is_array()) throw FormatError("model file: expected an array of rows in " + where);
  if (j.empty()) return Matrix(0, empty_cols);
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw FormatError("model file: expected an array of rows in " + where);
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw FormatError("model file: ragged matrix in " + where);
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = number(row[static_cast<std::size_t>(c)], where);
  }
  return m;
}

inline ColumnStats stats_from(const json& j, const std::string& where) {
  ColumnStats s;
  s.mean = vector_from(field(j, "mean", where), where + ".mean");
  s.sd = vector_from(field(j, "sd", where), where + ".sd");
  const json& c = field(j, "constant", where);
  if (!c.is_array() || c.size() != static_cast<std::size_t>(s.mean.size()) || s.sd.size() != s.mean.size())
    throw FormatError("model file: inconsistent lengths in " + where);
  for (const auto& b : c) {
    if (!b.is_boolean()) throw FormatError("model file: expected booleans in " + where + ".constant");
    s.constant.push_back(b.get<bool>());
  }
  return s;
}

}  // namespace io_detail

/// The model plus the standardized rows it conditions on at prediction time.
struct SavedModel {
  DlgpModel model;
  TrainingDataset data;
  std::vector<std::string> warnings;
  std::string output_transform = "none";
};

inline std::string model_to_json(const DlgpModel& model, const TrainingDataset& data,
                                 const std::string& output_transform = "none") {
  using io_detail::json;
  using io_detail::to_json;
  model.validate();
  const TrainingDataset scaled = model_scale(model, data);
  json layers = json::array();
  for (const auto& layer : model.network.layers)
    layers.push_back({{"activation", std::string(net::to_string(layer.activation))},
                      {"weight", to_json(layer.weight)},
                      {"bias", to_json(layer.bias)}});
  json kernels = json::array();
  for (const auto& k : model.kernels) kernels.push_back({{"lengthscale", k.lengthscale}, {"nugget", k.nugget}});
  if (output_transform != "none" && output_transform != "log1p")
    throw ConfigError("output transform must be none or log1p, got " + output_transform);
  json doc = {{"format", kModelFormat},
              {"version", kModelVersion},
              {"network", {{"layers", layers}}},
              {"mixture", to_json(model.mixture)},
              {"bias", to_json(model.bias)},
              {"noise_sd", to_json(model.noise_sd)},
              {"kernels", kernels},
              {"input_stats", to_json(model.input_stats)},
              {"output_stats", to_json(model.output_stats)},
              {"mode", to_string(model.mode)},
              {"dense_cap", model.dense_cap},
              {"training", {{"theta", to_json(scaled.theta)}, {"y", to_json(scaled.y)}}}};
  if (output_transform != "none") doc["output_transform"] = output_transform;
  return doc.dump(1) + "\n";
}

inline SavedModel model_from_json(const std::string& text) {
  using io_detail::field;
  using io_detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != kModelFormat)
    throw FormatError("not a dlgp model file (missing format tag \"dlgp-model\")");
  const json& version = field(doc, "version", "header");
  if (!version.is_string()) throw FormatError("model file: version must be a string");
  const std::string ver = version.get<std::string>();
  SavedModel out;
  if (ver != "1.0" && ver != kModelVersion)
    throw FormatError("unsupported model file version " + ver + " (this build reads 1.0 and 1.1)");

  DlgpModel& m = out.model;
  const json& layers = field(field(doc, "network", "root"), "layers", "network");
  if (!layers.is_array() || layers.empty()) throw FormatError("model file: network.layers must be a non-empty array");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string where = "network.layers[" + std::to_string(l) + "]";
    net::Layer layer;
    const json& act = field(layers[l], "activation", where);
    const auto parsed = act.is_string() ? net::parse_activation(act.get<std::string>()) : std::nullopt;
    if (!parsed) throw FormatError("model file: unknown activation in " + where);
    layer.activation = *parsed;
    layer.weight = io_detail::matrix_from(field(layers[l], "weight", where), where + ".weight");
    layer.bias = io_detail::vector_from(field(layers[l], "bias", where), where + ".bias");
    m.network.layers.push_back(std::move(layer));
  }
  m.mixture = io_detail::matrix_from(field(doc, "mixture", "root"), "mixture");
  m.bias = io_detail::vector_from(field(doc, "bias", "root"), "bias");
  m.noise_sd = io_detail::vector_from(field(doc, "noise_sd", "root"), "noise_sd");
  const json& kernels = field(doc, "kernels", "root");
  if (!kernels.is_array()) throw FormatError("model file: kernels must be an array");
  for (std::size_t j = 0; j < kernels.size(); ++j) {
    const std::string where = "kernels[" + std::to_string(j) + "]";
    m.kernels.push_back({io_detail::number(field(kernels[j], "lengthscale", where), where),
                         io_detail::number(field(kernels[j], "nugget", where), where)});
  }
  m.input_stats = io_detail::stats_from(field(doc, "input_stats", "root"), "input_stats");
  m.output_stats = io_detail::stats_from(field(doc, "output_stats", "root"), "output_stats");

  if (doc.contains("mode")) {
    const std::string mode = doc["mode"].is_string() ? doc["mode"].get<std::string>() : "";
    if (mode == "full")
      m.mode = CovarianceMode::full;
    else if (mode == "per_output")
      m.mode = CovarianceMode::per_output;
    else
      throw FormatError("model file: mode must be \"full\" or \"per_output\"");
  } else {
    out.warnings.push_back("model file version " + ver + " has no 'mode'; using full");
  }
  if (doc.contains("dense_cap")) {
    if (!doc["dense_cap"].is_number_unsigned()) throw FormatError("model file: dense_cap must be a positive integer");
    m.dense_cap = doc["dense_cap"].get<std::size_t>();
  } else {
    out.warnings.push_back("model file version " + ver + " has no 'dense_cap'; using " +
                           std::to_string(kDefaultDenseCap));
  }

  try {
    m.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model file is inconsistent: ") + e.what());
  }
  if (doc.contains("output_transform")) {
    const json& t = doc["output_transform"];
    if (!t.is_string() || (t != "none" && t != "log1p"))
      throw FormatError("model file: output_transform must be \"none\" or \"log1p\"");
    out.output_transform = t.get<std::string>();
  }
  const json& training = field(doc, "training", "root");
  Matrix theta = io_detail::matrix_from(field(training, "theta", "training"), "training.theta", m.input_dim());
  Matrix y = io_detail::matrix_from(field(training, "y", "training"), "training.y", m.output_dim());
  if (theta.rows() != y.rows() || theta.cols() != m.input_dim() || y.cols() != m.output_dim())
    throw FormatError("model file: training block does not match the model dimensions");
  out.data = TrainingDataset::from_standardized(std::move(theta), std::move(y));
  out.data.input_stats = m.input_stats;
  out.data.output_stats = m.output_stats;
  return out;
}

inline void save_model(const std::filesystem::path& path, const DlgpModel& model, const TrainingDataset& data,
                       const std::string& output_transform = "none") {
  const std::string text = model_to_json(model, data, output_transform);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw InputError("write failed for " + path.string());
}

inline SavedModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace dlgp

#endif
