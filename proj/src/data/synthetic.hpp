#pragma once

#include <cstdint>

#include "data/feature_set.hpp"

namespace tfh::data {

/// Class-center-plus-noise features standing in for backbone embeddings.
struct SyntheticFeatureSpec {
  std::size_t num_classes = 16;
  std::size_t examples_per_class = 100;
  nn::Shape shape{32, 5, 5};
  std::uint64_t center_seed = 0;
  float noise_std = 0.3f;
  bool clip_to_unit = false;
  /// Added to every center element; models a shifted target domain.
  float center_offset = 0.0f;
  /// 0: centers independent per element. r > 0: centers share an r-dimensional
  /// random subspace, 0.5 + 0.12 * B a_c clamped to [0.2, 0.8], with B drawn
  /// once per center_seed and a_c ~ N(0, I / r) per class.
  std::size_t center_rank = 0;
  /// Low-rank centers only: fraction of each basis element's variance shared
  /// by all spatial positions of its channel (survives global average pooling).
  float channel_share = 0.5f;

  void validate() const;
};

/// Per class a center in [0.2, 0.8] (plus center_offset) per element, see
/// center_rank; each example is center + N(0, noise_std^2) element-wise,
/// optionally clipped to [0, 1].
LabeledFeatureSet make_synthetic_features(const SyntheticFeatureSpec& spec);

/// Centers used by make_synthetic_features for the same spec.
std::vector<FeatureTensor> synthetic_centers(const SyntheticFeatureSpec& spec);

}  // namespace tfh::data
