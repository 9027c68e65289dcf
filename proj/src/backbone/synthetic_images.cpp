#include "backbone/synthetic_images.hpp"

#include <algorithm>
#include <random>

#include "common/rng.hpp"

namespace tfh::backbone {

void SyntheticImageSpec::validate() const {
  std::vector<std::string> problems;
  if (num_classes < 1) problems.push_back("num_classes must be >= 1");
  if (examples_per_class < 1) problems.push_back("examples_per_class must be >= 1");
  if (image_shape.size() != 3) problems.push_back("image_shape must be c x H x W");
  for (auto e : image_shape)
    if (e < 1) problems.push_back("image extents must be >= 1");
  if (!(noise_std > 0.0f)) problems.push_back("noise_std must be > 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

data::LabeledFeatureSet make_synthetic_images(const SyntheticImageSpec& spec) {
  spec.validate();
  data::LabeledFeatureSet set(spec.image_shape, spec.num_classes);
  Rng template_rng(derive_seed(spec.template_seed, 0));
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    nn::Tensor tmpl(spec.image_shape);
    for (auto& v : tmpl.data()) v = uni(template_rng);
    Rng rng(derive_seed(spec.template_seed, 1 + c));
    std::normal_distribution<float> noise(0.0f, spec.noise_std);
    for (std::size_t i = 0; i < spec.examples_per_class; ++i) {
      nn::Tensor img = tmpl;
      for (auto& v : img.data()) v = std::clamp(v + noise(rng), 0.0f, 1.0f);
      set.add(std::move(img), c);
    }
  }
  return set;
}

}  // namespace tfh::backbone
