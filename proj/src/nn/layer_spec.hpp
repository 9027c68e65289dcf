#pragma once

#include <string>
#include <vector>

#include "common/rng.hpp"
#include "nn/graph.hpp"

namespace tfh::nn {

enum class LayerKind { kConv2d, kTConv2d, kLinear, kRelu, kSigmoid, kGap, kFlatten, kReshape, kConcat };

const char* layer_kind_name(LayerKind kind);

/// One layer of a network. Shapes handled here are per-example (no batch axis).
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t in_channels = 0;   // conv/tconv channels, linear input length
  std::size_t out_channels = 0;  // conv/tconv channels, linear output length
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  Shape target;  // reshape only

  static LayerSpec conv2d(std::size_t in, std::size_t out, std::size_t kernel,
                          std::size_t stride = 1, std::size_t padding = 0);
  static LayerSpec tconv2d(std::size_t in, std::size_t out, std::size_t kernel,
                           std::size_t stride = 1);
  static LayerSpec linear(std::size_t in, std::size_t out);
  static LayerSpec relu() { LayerSpec s; s.kind = LayerKind::kRelu; return s; }
  static LayerSpec sigmoid() { LayerSpec s; s.kind = LayerKind::kSigmoid; return s; }
  static LayerSpec gap() { LayerSpec s; s.kind = LayerKind::kGap; return s; }
  static LayerSpec flatten() { LayerSpec s; s.kind = LayerKind::kFlatten; return s; }
  static LayerSpec reshape(Shape target);
  static LayerSpec concat() { LayerSpec s; s.kind = LayerKind::kConcat; return s; }

  bool has_params() const {
    return kind == LayerKind::kConv2d || kind == LayerKind::kTConv2d || kind == LayerKind::kLinear;
  }

  /// Throws ConfigError on invalid hyperparameters.
  void validate() const;

  /// Output shape for a single input (every kind except concat).
  Shape output_shape(const Shape& input) const;
  /// Output shape of concat over two vectors.
  Shape output_shape(const Shape& a, const Shape& b) const;

  Shape weight_shape() const;
};

/// A chain of single-input layers whose parameters live in a ParamStore
/// under "<prefix>.<index>.weight" / ".bias".
class Sequential {
 public:
  Sequential() = default;
  Sequential(std::string prefix, std::vector<LayerSpec> layers);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const std::string& prefix() const { return prefix_; }

  std::string weight_name(std::size_t layer) const;
  std::string bias_name(std::size_t layer) const;

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
  void init_params(ParamStore& store, Rng& rng) const;

  /// Input shape followed by each layer's output shape.
  std::vector<Shape> stage_shapes(const Shape& input) const;
  Shape output_shape(const Shape& input) const { return stage_shapes(input).back(); }

  /// Runs the chain on a batched input (leading batch axis).
  template <typename T>
  typename BasicGraph<T>::Var forward(BasicGraph<T>& g, typename BasicGraph<T>::Var x) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      switch (l.kind) {
        case LayerKind::kConv2d:
          x = g.conv2d(x, g.param(weight_name(i)), g.param(bias_name(i)), l.stride, l.padding);
          break;
        case LayerKind::kTConv2d:
          x = g.tconv2d(x, g.param(weight_name(i)), g.param(bias_name(i)), l.stride);
          break;
        case LayerKind::kLinear:
          x = g.linear(x, g.param(weight_name(i)), g.param(bias_name(i)));
          break;
        case LayerKind::kRelu: x = g.relu(x); break;
        case LayerKind::kSigmoid: x = g.sigmoid(x); break;
        case LayerKind::kGap: x = g.gap(x); break;
        case LayerKind::kFlatten: x = g.flatten(x); break;
        case LayerKind::kReshape: x = g.reshape(x, l.target); break;
        case LayerKind::kConcat:
          throw ConfigError("concat cannot appear inside a sequential chain");
      }
    }
    return x;
  }

 private:
  std::string prefix_;
  std::vector<LayerSpec> layers_;
};

}  // namespace tfh::nn
