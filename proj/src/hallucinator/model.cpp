#include "hallucinator/model.hpp"

#include "common/rng.hpp"
#include "nn/checkpoint.hpp"
#include "nn/kernels.hpp"

namespace tfh::hallucinator {

using nn::Shape;
using nn::Tensor;

namespace {

nn::ParamStore fresh_params(const nn::Sequential& cond, const nn::Sequential& gen,
                            std::uint64_t seed) {
  nn::ParamStore store;
  Rng rng(derive_seed(seed, stream::kInit));
  cond.init_params(store, rng);
  gen.init_params(store, rng);
  return store;
}

Shape with_batch(std::size_t n, const Shape& s) {
  Shape out{n};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

HallucinatorModel::HallucinatorModel(HallucinatorConfig config, std::uint64_t init_seed)
    : config_(std::move(config)) {
  config_.validate();
  conditioner_ = config_.conditioner();
  generator_ = config_.generator();
  params_ = fresh_params(conditioner_, generator_, init_seed);
}

HallucinatorModel::HallucinatorModel(HallucinatorConfig config, nn::ParamStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  conditioner_ = config_.conditioner();
  generator_ = config_.generator();
  nn::ParamStore expected;
  Rng rng(0);
  conditioner_.init_params(expected, rng);
  generator_.init_params(expected, rng);
  if (expected.size() != params_.size()) {
    throw ConfigError("hallucinator parameters: found " + std::to_string(params_.size()) +
                      " tensors, architecture needs " + std::to_string(expected.size()));
  }
  for (const auto& [name, e] : expected) {
    if (!params_.contains(name)) throw ConfigError("hallucinator parameters lack '" + name + "'");
    const auto& got = params_.value(name).shape();
    if (got != e.value.shape()) {
      throw ShapeError("hallucinator parameter '" + name + "' has shape " + nn::shape_str(got) +
                       ", architecture needs " + nn::shape_str(e.value.shape()));
    }
  }
}

void HallucinatorModel::check_feature_shape(const Shape& shape) const {
  const bool ok = config_.variant == Variant::kTensor
                      ? shape == config_.feature_shape
                      : (shape.size() == 3 && shape[0] == config_.feature_dim());
  if (!ok) {
    throw ShapeError("hallucinator expects features of shape " + nn::shape_str(config_.feature_shape) +
                     " but got " + nn::shape_str(shape));
  }
}

std::vector<float> HallucinatorModel::condition(const Tensor& prototype) const {
  check_feature_shape(prototype.shape());
  nn::Graph g(&std::as_const(params_));
  auto s = forward_condition(g, g.constant(prototype.reshaped(with_batch(1, prototype.shape()))));
  const auto& v = g.value(s);
  return {v.data().begin(), v.data().end()};
}

Tensor HallucinatorModel::generate(std::span<const float> z, std::span<const float> s) const {
  if (z.size() != config_.latent_dim || s.size() != config_.cond_dim) {
    throw ShapeError("generate: latent length " + std::to_string(z.size()) + " and condition length " +
                     std::to_string(s.size()) + " do not match k=" + std::to_string(config_.latent_dim) +
                     ", d'=" + std::to_string(config_.cond_dim));
  }
  nn::Graph g(&std::as_const(params_));
  auto zv = g.constant(Tensor({1, z.size()}, std::vector<float>(z.begin(), z.end())));
  auto sv = g.constant(Tensor({1, s.size()}, std::vector<float>(s.begin(), s.end())));
  return g.value(forward_generate(g, zv, sv)).reshaped(config_.output_shape());
}

void HallucinatorModel::save(const std::string& path) const {
  nn::save_checkpoint(path, params_, config_.to_json());
}

HallucinatorModel HallucinatorModel::load(const std::string& path) {
  auto ck = nn::load_checkpoint(path);
  return HallucinatorModel(HallucinatorConfig::from_json(ck.metadata), std::move(ck.params));
}

Tensor tensor_prototype(std::span<const Tensor> features) {
  if (features.empty()) throw InvalidArgument("tensor_prototype: no features given");
  const Shape& shape = features[0].shape();
  std::vector<double> acc(features[0].size(), 0.0);
  for (const auto& f : features) {
    if (f.shape() != shape) {
      throw ShapeError("tensor_prototype: mixed shapes " + nn::shape_str(shape) + " and " +
                       nn::shape_str(f.shape()));
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += f[i];
  }
  Tensor out(shape);
  const double k = static_cast<double>(features.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / k);
  return out;
}

Tensor reconstruction_target(const HallucinatorConfig& config, const Tensor& prototype) {
  if (config.variant == Variant::kTensor) return prototype;
  return nn::gap(prototype).reshaped(config.output_shape());
}

}  // namespace tfh::hallucinator
