#include "data/split.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace tfh::data {

ClassSplit split_classes(std::size_t num_classes, std::size_t n_base, std::size_t n_val,
                         std::size_t n_novel, std::uint64_t seed) {
  if (n_base + n_val + n_novel != num_classes) {
    throw ConfigError("split sizes " + std::to_string(n_base) + "/" + std::to_string(n_val) + "/" +
                      std::to_string(n_novel) + " do not sum to " + std::to_string(num_classes) +
                      " classes");
  }
  std::vector<std::size_t> ids(num_classes);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Rng rng(derive_seed(seed, stream::kShuffle));
  for (std::size_t i = num_classes; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(ids[i - 1], ids[pick(rng)]);
  }
  ClassSplit out;
  out.base.assign(ids.begin(), ids.begin() + n_base);
  out.val.assign(ids.begin() + n_base, ids.begin() + n_base + n_val);
  out.novel.assign(ids.begin() + n_base + n_val, ids.end());
  std::sort(out.base.begin(), out.base.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.novel.begin(), out.novel.end());
  return out;
}

ClassSplit split_classes(std::size_t num_classes, ClassSplit lists) {
  std::vector<int> owner(num_classes, -1);
  std::vector<std::string> problems;
  auto claim = [&](const std::vector<std::size_t>& ids, int group, const char* name) {
    for (auto c : ids) {
      if (c >= num_classes) {
        problems.push_back(std::string(name) + " class " + std::to_string(c) + " out of range");
      } else if (owner[c] != -1) {
        problems.push_back("class " + std::to_string(c) + " appears in more than one list");
      } else {
        owner[c] = group;
      }
    }
  };
  claim(lists.base, 0, "base");
  claim(lists.val, 1, "val");
  claim(lists.novel, 2, "novel");
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return lists;
}

}  // namespace tfh::data
