#pragma once

#include <cstddef>
#include <string>

#include "nn/layer_spec.hpp"

namespace tfh::hallucinator {

enum class Variant { kTensor, kVector };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

/// Architecture of the conditioner h and generator g.
///
/// `feature_shape` is always the backbone's tensor feature shape d x h x w.
/// The vector variant works on GAP'd features: its conditioner pools the
/// prototype first and its generator emits d x 1 x 1 tensors, so pooled
/// downstream code treats both variants alike.
///
/// Width fields left at 0 resolve to their defaults: conditioner_width = d,
/// conditioner_bottleneck = d / 2, generator_width = d, vector_hidden = d'.
struct HallucinatorConfig {
  Variant variant = Variant::kTensor;
  nn::Shape feature_shape{32, 5, 5};
  std::size_t cond_dim = 64;
  std::size_t latent_dim = 64;
  std::size_t generator_layers = 2;
  bool final_sigmoid = false;
  std::size_t conditioner_width = 0;
  std::size_t conditioner_bottleneck = 0;
  std::size_t generator_width = 0;
  std::size_t vector_hidden = 0;

  static HallucinatorConfig large();
  static HallucinatorConfig small_backbone();
  static HallucinatorConfig desk();
  static HallucinatorConfig vector(nn::Shape feature_shape, std::size_t hidden = 512);

  /// Throws ConfigError listing every violated constraint.
  void validate() const;

  std::size_t feature_dim() const { return feature_shape.at(0); }
  /// Per-example shape of generated features and of the reconstruction target.
  nn::Shape output_shape() const;

  nn::Sequential conditioner() const;
  /// Runs on the concatenated (z; s) rows.
  nn::Sequential generator() const;

  std::string to_json() const;
  static HallucinatorConfig from_json(const std::string& text);

  bool operator==(const HallucinatorConfig&) const = default;
};

}  // namespace tfh::hallucinator
