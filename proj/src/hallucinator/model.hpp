#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hallucinator/config.hpp"
#include "nn/graph.hpp"
#include "nn/params.hpp"

namespace tfh::hallucinator {

/// Conditioner h ("cond.*") and generator g ("gen.*") sharing one parameter
/// store.
class HallucinatorModel {
 public:
  HallucinatorModel(HallucinatorConfig config, std::uint64_t init_seed);
  HallucinatorModel(HallucinatorConfig config, nn::ParamStore params);

  const HallucinatorConfig& config() const { return config_; }
  const nn::ParamStore& params() const { return params_; }
  nn::ParamStore& params() { return params_; }

  /// n x d x h x w prototypes -> n x d' conditional vectors.
  template <typename T>
  typename nn::BasicGraph<T>::Var forward_condition(nn::BasicGraph<T>& g,
                                                    typename nn::BasicGraph<T>::Var prototypes) const {
    return conditioner_.forward(g, prototypes);
  }

  /// n x k latents and n x d' conditions -> n generated features.
  template <typename T>
  typename nn::BasicGraph<T>::Var forward_generate(nn::BasicGraph<T>& g,
                                                   typename nn::BasicGraph<T>::Var z,
                                                   typename nn::BasicGraph<T>::Var s) const {
    return generator_.forward(g, g.concat(z, s));
  }

  std::vector<float> condition(const nn::Tensor& prototype) const;
  nn::Tensor generate(std::span<const float> z, std::span<const float> s) const;

  /// Throws ShapeError naming both shapes when features of `shape` cannot be
  /// fed to this model.
  void check_feature_shape(const nn::Shape& shape) const;

  void save(const std::string& path) const;
  static HallucinatorModel load(const std::string& path);

 private:
  HallucinatorConfig config_;
  nn::Sequential conditioner_;
  nn::Sequential generator_;
  nn::ParamStore params_;
};

/// Element-wise mean of K >= 1 equally shaped tensors, accumulated in double.
nn::Tensor tensor_prototype(std::span<const nn::Tensor> features);

/// What generated features of this configuration are compared against: the
/// prototype itself (tensor variant) or its GAP as d x 1 x 1 (vector variant).
nn::Tensor reconstruction_target(const HallucinatorConfig& config, const nn::Tensor& prototype);

}  // namespace tfh::hallucinator
