#include "data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "common/rng.hpp"

namespace tfh::data {

void SyntheticFeatureSpec::validate() const {
  std::vector<std::string> problems;
  if (num_classes < 1) problems.push_back("num_classes must be >= 1");
  if (examples_per_class < 1) problems.push_back("examples_per_class must be >= 1");
  if (shape.size() != 3) problems.push_back("shape must be d x h x w");
  for (auto e : shape)
    if (e < 1) problems.push_back("shape extents must be >= 1");
  if (!(noise_std > 0.0f)) problems.push_back("noise_std must be > 0");
  if (!(channel_share >= 0.0f && channel_share <= 1.0f)) problems.push_back("channel_share must be in [0, 1]");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::vector<FeatureTensor> synthetic_centers(const SyntheticFeatureSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.center_seed, 0));
  std::vector<FeatureTensor> centers;
  if (spec.center_rank == 0) {
    std::uniform_real_distribution<float> uni(0.2f, 0.8f);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      FeatureTensor t(spec.shape);
      for (auto& v : t.data()) v = uni(rng) + spec.center_offset;
      centers.push_back(std::move(t));
    }
    return centers;
  }
  const std::size_t r = spec.center_rank, n = nn::shape_numel(spec.shape);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = spec.shape[0], hw = n / d;
  const double shared = std::sqrt(static_cast<double>(spec.channel_share));
  const double local = std::sqrt(1.0 - static_cast<double>(spec.channel_share));
  std::vector<double> channel(d * r), basis(n * r);
  for (auto& b : channel) b = normal(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < r; ++k) basis[i * r + k] = shared * channel[(i / hw) * r + k] + local * normal(rng);
  const double coeff_std = 1.0 / std::sqrt(static_cast<double>(r));
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    std::vector<double> a(r);
    for (auto& v : a) v = coeff_std * normal(rng);
    FeatureTensor t(spec.shape);
    for (std::size_t i = 0; i < n; ++i) {
      double proj = 0;
      for (std::size_t k = 0; k < r; ++k) proj += basis[i * r + k] * a[k];
      t[i] = static_cast<float>(std::clamp(0.5 + 0.12 * proj, 0.2, 0.8)) + spec.center_offset;
    }
    centers.push_back(std::move(t));
  }
  return centers;
}

LabeledFeatureSet make_synthetic_features(const SyntheticFeatureSpec& spec) {
  const auto centers = synthetic_centers(spec);
  LabeledFeatureSet set(spec.shape, spec.num_classes);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    Rng rng(derive_seed(spec.center_seed, 1 + c));
    std::normal_distribution<float> noise(0.0f, spec.noise_std);
    for (std::size_t i = 0; i < spec.examples_per_class; ++i) {
      FeatureTensor f = centers[c];
      for (auto& v : f.data()) {
        v += noise(rng);
        if (spec.clip_to_unit) v = std::clamp(v, 0.0f, 1.0f);
      }
      set.add(std::move(f), c);
    }
  }
  return set;
}

}  // namespace tfh::data
