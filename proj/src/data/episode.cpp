#include "data/episode.hpp"

#include <numeric>
#include <random>

#include "common/rng.hpp"

namespace tfh::data {
namespace {

// First `take` entries of a uniformly random permutation of [0, n).
std::vector<std::size_t> partial_shuffle(std::size_t n, std::size_t take, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(take);
  return idx;
}

}  // namespace

Episode sample_episode(const LabeledFeatureSet& set, std::size_t n_way, std::size_t k_shot,
                       std::size_t queries_per_class, std::uint64_t seed) {
  if (n_way == 0) throw InvalidArgument("n_way must be >= 1");
  if (k_shot == 0) throw InvalidArgument("k_shot must be >= 1");
  if (set.num_classes() < n_way) {
    throw CapacityError("episode needs " + std::to_string(n_way) + " classes but the set has " +
                        std::to_string(set.num_classes()));
  }
  const std::size_t per_class = k_shot + queries_per_class;
  for (std::size_t c = 0; c < set.num_classes(); ++c) {
    if (set.class_indices(c).size() < per_class) {
      throw CapacityError("class " + std::to_string(c) + " has " +
                          std::to_string(set.class_indices(c).size()) + " examples, episode needs " +
                          std::to_string(per_class));
    }
  }
  Rng rng(seed);
  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  ep.queries_per_class = queries_per_class;
  ep.class_ids = partial_shuffle(set.num_classes(), n_way, rng);
  for (auto c : ep.class_ids) {
    const auto& members = set.class_indices(c);
    const auto picks = partial_shuffle(members.size(), per_class, rng);
    std::vector<std::size_t> s, q;
    for (std::size_t i = 0; i < picks.size(); ++i) {
      (i < k_shot ? s : q).push_back(members[picks[i]]);
    }
    ep.support.push_back(std::move(s));
    ep.query.push_back(std::move(q));
  }
  return ep;
}

std::vector<std::vector<FeatureTensor>> gather(const LabeledFeatureSet& set,
                                               const std::vector<std::vector<std::size_t>>& idx) {
  std::vector<std::vector<FeatureTensor>> out;
  out.reserve(idx.size());
  for (const auto& cls : idx) {
    std::vector<FeatureTensor> f;
    f.reserve(cls.size());
    for (auto i : cls) f.push_back(set.feature(i));
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace tfh::data
