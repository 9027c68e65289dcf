#pragma once

#include <cstdint>
#include <vector>

namespace tfh::data {

/// Disjoint base / validation / novel class id sets.
struct ClassSplit {
  std::vector<std::size_t> base;
  std::vector<std::size_t> val;
  std::vector<std::size_t> novel;
};

/// Random split with the given group sizes, which must sum to num_classes.
/// Each group is returned sorted.
ClassSplit split_classes(std::size_t num_classes, std::size_t n_base, std::size_t n_val,
                         std::size_t n_novel, std::uint64_t seed);

/// Validates explicit lists (in range, pairwise disjoint, no repeats) and
/// returns them unchanged.
ClassSplit split_classes(std::size_t num_classes, ClassSplit lists);

}  // namespace tfh::data
