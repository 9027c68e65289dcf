#pragma once

#include <cstdint>

#include "data/feature_set.hpp"

namespace tfh::backbone {

struct SyntheticImageSpec {
  std::size_t num_classes = 8;
  std::size_t examples_per_class = 100;
  nn::Shape image_shape{1, 36, 36};
  std::uint64_t template_seed = 0;
  float noise_std = 0.2f;

  void validate() const;
};

/// Per class a template with pixels uniform in [0, 1]; examples are the
/// template plus N(0, noise_std^2) noise, clipped to [0, 1].
data::LabeledFeatureSet make_synthetic_images(const SyntheticImageSpec& spec);

}  // namespace tfh::backbone
