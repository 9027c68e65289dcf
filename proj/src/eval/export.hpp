#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "eval/prototypes.hpp"

namespace tfh::eval {

struct LabeledQuery {
  std::size_t class_id;
  nn::Tensor feature;
};

/// CSV text with a header row "role,class_id,f0,...,f{d-1}" followed by one
/// row per support, generated and query feature (in that order). Feature
/// values are GAP'd and printed with 9 significant digits.
std::string export_features_csv(const AugmentedSupport& aug, const std::vector<LabeledQuery>& queries);

/// Writes export_features_csv() to `path` atomically.
void export_features(const AugmentedSupport& aug, const std::vector<LabeledQuery>& queries,
                     const std::string& path);

}  // namespace tfh::eval
