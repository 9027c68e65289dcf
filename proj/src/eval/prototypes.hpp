#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hallucinator/training.hpp"

namespace tfh::eval {

using hallucinator::ClassFeatures;
using Vector = std::vector<double>;

/// Support set of one task after augmentation: K real and M generated
/// features for each episode class. class_ids[j] is the dataset label of
/// episode class j.
struct AugmentedSupport {
  std::vector<std::size_t> class_ids;
  ClassFeatures support;
  ClassFeatures generated;

  std::size_t num_classes() const { return support.size(); }
  /// Throws when the per-class lists disagree in length or a class is empty.
  void validate() const;
};

/// Spatial mean of a d x h x w tensor (d-vector), accumulated in double.
Vector gap_vector(const nn::Tensor& feature);

/// Per class: mean of the GAP'd support and generated features, all weighted
/// equally.
std::vector<Vector> augmented_vector_prototypes(const AugmentedSupport& aug);

/// Index of the prototype at least squared Euclidean distance; ties go to
/// the lowest index.
std::size_t nearest_prototype(const std::vector<Vector>& prototypes, std::span<const double> query);
std::size_t nearest_prototype_predict(const std::vector<Vector>& prototypes, const nn::Tensor& query);

/// Pooled GAP'd training vectors of an augmented support set with episode
/// class indices as labels.
struct PooledData {
  std::vector<Vector> x;
  std::vector<std::size_t> y;
  std::size_t num_classes = 0;
};
PooledData pool_support(const AugmentedSupport& aug);

}  // namespace tfh::eval
