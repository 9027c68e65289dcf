#pragma once

#include <cstdint>
#include <vector>

#include "data/feature_set.hpp"

namespace tfh::data {

/// An N-way K-shot task. support[j] and query[j] hold dataset indices for the
/// class class_ids[j].
struct Episode {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t queries_per_class = 0;
  std::vector<std::size_t> class_ids;
  std::vector<std::vector<std::size_t>> support;
  std::vector<std::vector<std::size_t>> query;
};

/// Classes uniformly without replacement, then examples uniformly without
/// replacement within each class. Selection is made over class-local ordinals,
/// so the result depends only on the per-class example order and the seed.
Episode sample_episode(const LabeledFeatureSet& set, std::size_t n_way, std::size_t k_shot,
                       std::size_t queries_per_class, std::uint64_t seed);

/// Features of the episode, support or query, grouped per episode class.
std::vector<std::vector<FeatureTensor>> gather(const LabeledFeatureSet& set,
                                               const std::vector<std::vector<std::size_t>>& idx);

}  // namespace tfh::data
