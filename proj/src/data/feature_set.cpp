#include "data/feature_set.hpp"

#include <algorithm>
#include <limits>

namespace tfh::data {

LabeledFeatureSet::LabeledFeatureSet(nn::Shape feature_shape, std::size_t num_classes)
    : feature_shape_(std::move(feature_shape)), num_classes_(num_classes), by_class_(num_classes) {
  nn::check_shape(feature_shape_);
  if (num_classes_ == 0) throw InvalidArgument("feature set needs at least one class");
}

void LabeledFeatureSet::add(FeatureTensor feature, std::size_t label) {
  if (feature.shape() != feature_shape_) {
    throw ShapeError("feature shape " + nn::shape_str(feature.shape()) +
                     " does not match set shape " + nn::shape_str(feature_shape_));
  }
  if (label >= num_classes_) {
    throw InvalidArgument("label " + std::to_string(label) + " >= class count " +
                          std::to_string(num_classes_));
  }
  by_class_[label].push_back(labels_.size());
  labels_.push_back(label);
  features_.push_back(std::move(feature));
}

void LabeledFeatureSet::set_class_name(std::size_t c, std::string name) {
  if (c >= num_classes_) throw InvalidArgument("class id " + std::to_string(c) + " out of range");
  class_names_[c] = std::move(name);
}

LabeledFeatureSet LabeledFeatureSet::subset_classes(std::span<const std::size_t> classes) const {
  if (classes.empty()) throw InvalidArgument("subset needs at least one class");
  std::vector<std::size_t> remap(num_classes_, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto c = classes[i];
    if (c >= num_classes_) throw InvalidArgument("class id " + std::to_string(c) + " out of range");
    if (remap[c] != std::numeric_limits<std::size_t>::max()) {
      throw InvalidArgument("class id " + std::to_string(c) + " listed twice");
    }
    remap[c] = i;
  }
  LabeledFeatureSet out(feature_shape_, classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (auto it = class_names_.find(classes[i]); it != class_names_.end()) {
      out.set_class_name(i, it->second);
    }
    for (auto idx : by_class_[classes[i]]) out.add(features_[idx], i);
  }
  return out;
}

LabeledFeatureSet minmax_normalize(const LabeledFeatureSet& set) {
  float lo = std::numeric_limits<float>::infinity();
  float hi = -lo;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (float v : set.feature(i).data()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  LabeledFeatureSet out(set.feature_shape(), set.num_classes());
  for (const auto& [c, name] : set.class_names()) out.set_class_name(c, name);
  const float range = hi - lo;
  for (std::size_t i = 0; i < set.size(); ++i) {
    FeatureTensor f = set.feature(i);
    if (range > 0) {
      for (auto& v : f.data()) v = (v - lo) / range;
    }
    out.add(std::move(f), set.label(i));
  }
  return out;
}

double fraction_outside_unit(const LabeledFeatureSet& set) {
  std::size_t outside = 0, total = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (float v : set.feature(i).data()) {
      outside += (v <= 0.0f || v >= 1.0f) ? 1 : 0;
      ++total;
    }
  }
  return total ? static_cast<double>(outside) / static_cast<double>(total) : 0.0;
}

}  // namespace tfh::data
