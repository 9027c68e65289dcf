#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nn/tensor.hpp"

namespace tfh::data {

/// One example's embedding, d x h x w.
using FeatureTensor = nn::Tensor;

/// Features of uniform shape with one class label each. Built once, then
/// shared read-only.
class LabeledFeatureSet {
 public:
  LabeledFeatureSet() = default;
  LabeledFeatureSet(nn::Shape feature_shape, std::size_t num_classes);

  /// Appends one example; rejects a shape mismatch or label >= num_classes.
  void add(FeatureTensor feature, std::size_t label);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t num_classes() const { return num_classes_; }
  const nn::Shape& feature_shape() const { return feature_shape_; }

  const FeatureTensor& feature(std::size_t i) const { return features_.at(i); }
  std::size_t label(std::size_t i) const { return labels_.at(i); }
  std::span<const std::size_t> labels() const { return labels_; }

  /// Indices of each class's examples in storage order.
  const std::vector<std::size_t>& class_indices(std::size_t c) const { return by_class_.at(c); }

  const std::map<std::size_t, std::string>& class_names() const { return class_names_; }
  void set_class_name(std::size_t c, std::string name);

  /// Examples of the listed classes, relabelled 0..classes.size()-1 in list order.
  LabeledFeatureSet subset_classes(std::span<const std::size_t> classes) const;

 private:
  nn::Shape feature_shape_;
  std::size_t num_classes_ = 0;
  std::vector<FeatureTensor> features_;
  std::vector<std::size_t> labels_;
  std::vector<std::vector<std::size_t>> by_class_;
  std::map<std::size_t, std::string> class_names_;
};

/// Per-element min-max rescaling of every feature into [0, 1] using the global
/// minimum and maximum over the set. Identity when all values are equal.
LabeledFeatureSet minmax_normalize(const LabeledFeatureSet& set);

/// Fraction of feature elements outside the open interval (0, 1).
double fraction_outside_unit(const LabeledFeatureSet& set);

}  // namespace tfh::data
