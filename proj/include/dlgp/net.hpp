#ifndef DLGP_NET_HPP
#define DLGP_NET_HPP

// Deterministic multi-layer feature map with exact reverse-mode gradients.
// Rows of every batch matrix are observations.

#include "error.hpp"
#include "linalg.hpp"
#include "rng.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dlgp::net {

enum class Activation { tanh, relu, identity };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "identity" || s == "linear") return Activation::identity;
  return std::nullopt;
}

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::identity: return x;
  }
  return x;
}

/// Derivative expressed through the pre-activation value.
inline double activate_grad(Activation a, double pre) {
  switch (a) {
    case Activation::tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

struct LayerSpec {
  int input_width = 1;
  int output_width = 1;
  Activation activation = Activation::tanh;
};

struct Layer {
  Matrix weight;  // output_width x input_width
  Vector bias;    // output_width
  Activation activation = Activation::tanh;

  int input_width() const { return static_cast<int>(weight.cols()); }
  int output_width() const { return static_cast<int>(weight.rows()); }

  friend bool operator==(const Layer& a, const Layer& b) {
    return a.activation == b.activation && a.weight.rows() == b.weight.rows() &&
           a.weight.cols() == b.weight.cols() && a.bias.size() == b.bias.size() &&
           a.weight == b.weight && a.bias == b.bias;
  }
};

struct NetworkParams {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().input_width(); }
  int latent_dim() const { return layers.empty() ? 0 : layers.back().output_width(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  bool operator==(const NetworkParams&) const = default;
};

/// Same layout as NetworkParams; holds d(loss)/d(parameter).
using NetworkGrads = NetworkParams;

struct ForwardCache {
  std::vector<Matrix> inputs;          // input to layer l (N x in_l)
  std::vector<Matrix> preactivations;  // W z + b for layer l (N x out_l)
};

inline void validate_specs(const std::vector<LayerSpec>& specs) {
  if (specs.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t l = 0; l < specs.size(); ++l) {
    if (specs[l].input_width < 1 || specs[l].output_width < 1)
      throw ConfigError("layer " + std::to_string(l) + " has a non-positive width");
    if (l > 0 && specs[l].input_width != specs[l - 1].output_width)
      throw ConfigError("layer " + std::to_string(l) + " expects input width " +
                        std::to_string(specs[l].input_width) + " but layer " + std::to_string(l - 1) +
                        " produces " + std::to_string(specs[l - 1].output_width));
  }
}

/// Weights ~ N(0, 1/fan_in), biases zero.
inline NetworkParams init_network(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
  validate_specs(specs);
  Rng rng(derive_seed(seed, 0x6e6574));
  NetworkParams params;
  params.layers.reserve(specs.size());
  for (const auto& s : specs) {
    Layer layer;
    layer.activation = s.activation;
    layer.weight.resize(s.output_width, s.input_width);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.input_width));
    for (int r = 0; r < s.output_width; ++r)
      for (int c = 0; c < s.input_width; ++c) layer.weight(r, c) = scale * rng.normal();
    layer.bias = Vector::Zero(s.output_width);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

/// Single identity layer with W = I, b = 0.
inline NetworkParams identity_network(int dim) {
  NetworkParams p;
  p.layers.push_back(Layer{Matrix::Identity(dim, dim), Vector::Zero(dim), Activation::identity});
  return p;
}

inline void check_params(const NetworkParams& params) {
  if (params.layers.empty()) throw ConfigError("network has no layers");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    if (layer.bias.size() != layer.weight.rows())
      throw ConfigError("layer " + std::to_string(l) + " bias does not match its weight rows");
    if (l > 0 && layer.input_width() != params.layers[l - 1].output_width())
      throw ConfigError("layer " + std::to_string(l) + " does not chain with its predecessor");
  }
}

inline Matrix apply_layer(const Layer& layer, const Matrix& input, Matrix* pre_out = nullptr) {
  Matrix pre = input * layer.weight.transpose();
  pre.rowwise() += layer.bias.transpose();
  Matrix out = pre.unaryExpr([a = layer.activation](double x) { return activate(a, x); });
  if (pre_out) *pre_out = std::move(pre);
  return out;
}

inline Matrix forward(const NetworkParams& params, const Matrix& theta, ForwardCache* cache) {
  check_params(params);
  if (theta.cols() != params.input_dim())
    throw ConfigError("input has " + std::to_string(theta.cols()) + " columns, network expects " +
                      std::to_string(params.input_dim()));
  if (!theta.allFinite()) throw InputError("non-finite value in network input");
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
  }
  Matrix z = theta;
  for (const auto& layer : params.layers) {
    Matrix pre;
    Matrix next = apply_layer(layer, z, &pre);
    if (cache) {
      cache->inputs.push_back(std::move(z));
      cache->preactivations.push_back(std::move(pre));
    }
    z = std::move(next);
  }
  return z;
}

inline Matrix forward(const NetworkParams& params, const Matrix& theta) { return forward(params, theta, nullptr); }

struct BackwardResult {
  NetworkGrads grads;
  Matrix grad_theta;
};

inline BackwardResult backward(const NetworkParams& params, const ForwardCache& cache, const Matrix& grad_psi) {
  const std::size_t depth = params.layers.size();
  if (cache.inputs.size() != depth || cache.preactivations.size() != depth)
    throw InternalError("forward cache does not match the network depth");
  if (grad_psi.cols() != params.latent_dim() || grad_psi.rows() != cache.inputs.front().rows())
    throw InternalError("gradient shape does not match the forward batch");

  BackwardResult result;
  result.grads.layers.resize(depth);
  Matrix upstream = grad_psi;
  for (std::size_t k = depth; k-- > 0;) {
    const Layer& layer = params.layers[k];
    const Matrix& pre = cache.preactivations[k];
    if (pre.cols() != layer.output_width() || cache.inputs[k].cols() != layer.input_width())
      throw InternalError("forward cache was produced by a different network");
    Matrix delta = upstream.cwiseProduct(pre.unaryExpr([a = layer.activation](double x) { return activate_grad(a, x); }));
    Layer& g = result.grads.layers[k];
    g.activation = layer.activation;
    g.weight = delta.transpose() * cache.inputs[k];
    g.bias = delta.colwise().sum().transpose();
    upstream = delta * layer.weight;
  }
  result.grad_theta = std::move(upstream);
  return result;
}

/// params += step * grads, layer by layer.
inline void axpy(NetworkParams& params, double step, const NetworkGrads& grads) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    params.layers[l].weight += step * grads.layers[l].weight;
    params.layers[l].bias += step * grads.layers[l].bias;
  }
}

inline std::vector<LayerSpec> specs_of(const NetworkParams& params) {
  std::vector<LayerSpec> out;
  for (const auto& l : params.layers) out.push_back({l.input_width(), l.output_width(), l.activation});
  return out;
}

}  // namespace dlgp::net

#endif
