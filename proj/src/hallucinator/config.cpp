#include "hallucinator/config.hpp"

#include <json.hpp>

namespace tfh::hallucinator {

using nn::LayerSpec;

const char* variant_name(Variant v) { return v == Variant::kTensor ? "tensor" : "vector"; }

Variant parse_variant(const std::string& name) {
  if (name == "tensor") return Variant::kTensor;
  if (name == "vector") return Variant::kVector;
  throw ConfigError("unknown hallucinator variant '" + name + "' (expected tensor or vector)");
}

HallucinatorConfig HallucinatorConfig::large() {
  HallucinatorConfig c;
  c.feature_shape = {512, 7, 7};
  c.cond_dim = 1024;
  c.latent_dim = 1024;
  c.generator_layers = 3;
  c.final_sigmoid = true;
  return c;
}

HallucinatorConfig HallucinatorConfig::small_backbone() {
  HallucinatorConfig c;
  c.feature_shape = {640, 5, 5};
  c.cond_dim = 1024;
  c.latent_dim = 1024;
  c.generator_layers = 2;
  c.final_sigmoid = false;
  return c;
}

HallucinatorConfig HallucinatorConfig::desk() { return HallucinatorConfig{}; }

HallucinatorConfig HallucinatorConfig::vector(nn::Shape feature_shape, std::size_t hidden) {
  HallucinatorConfig c;
  c.variant = Variant::kVector;
  c.feature_shape = std::move(feature_shape);
  c.cond_dim = hidden;
  c.latent_dim = hidden;
  c.vector_hidden = hidden;
  c.final_sigmoid = true;
  return c;
}

void HallucinatorConfig::validate() const {
  std::vector<std::string> problems;
  if (feature_shape.size() != 3) {
    problems.push_back("feature_shape must have three extents (d x h x w), got " +
                       nn::shape_str(feature_shape));
  } else {
    for (auto e : feature_shape)
      if (e == 0) problems.push_back("feature_shape extents must be >= 1");
  }
  if (cond_dim == 0) problems.push_back("cond_dim must be > 0");
  if (latent_dim == 0) problems.push_back("latent_dim must be > 0");
  if (variant == Variant::kTensor && feature_shape.size() == 3) {
    const std::size_t h = feature_shape[1], w = feature_shape[2];
    if (h != w) problems.push_back("tensor variant needs square features, got " + nn::shape_str(feature_shape));
    if (h < 3) problems.push_back("tensor variant needs spatial size >= 3, got " + std::to_string(h));
    if (generator_layers == 0) problems.push_back("generator_layers must be >= 1");
    if (generator_layers * 2 + 1 != h) {
      problems.push_back(std::to_string(generator_layers) + " transpose-conv layers of kernel 3 build " +
                         std::to_string(generator_layers * 2 + 1) + "x" +
                         std::to_string(generator_layers * 2 + 1) + " features, configured spatial size is " +
                         std::to_string(h) + "x" + std::to_string(w));
    }
    if (feature_shape[0] / 2 == 0 && conditioner_bottleneck == 0) {
      problems.push_back("feature depth 1 leaves no default conditioner bottleneck; set conditioner_bottleneck");
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

nn::Shape HallucinatorConfig::output_shape() const {
  if (variant == Variant::kVector) return {feature_dim(), 1, 1};
  return feature_shape;
}

nn::Sequential HallucinatorConfig::conditioner() const {
  const std::size_t d = feature_dim();
  std::vector<LayerSpec> layers;
  if (variant == Variant::kVector) {
    const std::size_t hidden = vector_hidden ? vector_hidden : cond_dim;
    layers = {LayerSpec::gap(), LayerSpec::linear(d, hidden), LayerSpec::relu(),
              LayerSpec::linear(hidden, cond_dim)};
  } else {
    const std::size_t width = conditioner_width ? conditioner_width : d;
    const std::size_t bottleneck = conditioner_bottleneck ? conditioner_bottleneck : d / 2;
    const std::size_t h = feature_shape[1] - 2, w = feature_shape[2] - 2;
    layers = {LayerSpec::conv2d(d, width, 3, 1, 1), LayerSpec::relu(),
              LayerSpec::conv2d(width, bottleneck, 3, 1, 0), LayerSpec::flatten(),
              LayerSpec::linear(bottleneck * h * w, cond_dim)};
  }
  return nn::Sequential("cond", std::move(layers));
}

nn::Sequential HallucinatorConfig::generator() const {
  const std::size_t d = feature_dim();
  const std::size_t in = latent_dim + cond_dim;
  std::vector<LayerSpec> layers;
  if (variant == Variant::kVector) {
    const std::size_t hidden = vector_hidden ? vector_hidden : cond_dim;
    layers = {LayerSpec::linear(in, hidden), LayerSpec::relu(), LayerSpec::linear(hidden, d)};
    if (final_sigmoid) layers.push_back(LayerSpec::sigmoid());
    layers.push_back(LayerSpec::reshape({d, 1, 1}));
  } else {
    const std::size_t width = generator_width ? generator_width : d;
    layers.push_back(LayerSpec::reshape({in, 1, 1}));
    std::size_t channels = in;
    for (std::size_t i = 0; i < generator_layers; ++i) {
      const std::size_t out = i + 1 == generator_layers ? d : width;
      if (i > 0) layers.push_back(LayerSpec::relu());
      layers.push_back(LayerSpec::tconv2d(channels, out, 3, 1));
      channels = out;
    }
    if (final_sigmoid) layers.push_back(LayerSpec::sigmoid());
  }
  return nn::Sequential("gen", std::move(layers));
}

std::string HallucinatorConfig::to_json() const {
  nlohmann::json j;
  j["kind"] = "hallucinator";
  j["variant"] = variant_name(variant);
  j["feature_shape"] = feature_shape;
  j["cond_dim"] = cond_dim;
  j["latent_dim"] = latent_dim;
  j["generator_layers"] = generator_layers;
  j["final_sigmoid"] = final_sigmoid;
  j["conditioner_width"] = conditioner_width;
  j["conditioner_bottleneck"] = conditioner_bottleneck;
  j["generator_width"] = generator_width;
  j["vector_hidden"] = vector_hidden;
  return j.dump();
}

HallucinatorConfig HallucinatorConfig::from_json(const std::string& text) {
  HallucinatorConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("kind", std::string{}) != "hallucinator") {
      throw ConfigError("metadata does not describe a hallucinator");
    }
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.feature_shape = j.at("feature_shape").get<nn::Shape>();
    c.cond_dim = j.at("cond_dim").get<std::size_t>();
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.generator_layers = j.at("generator_layers").get<std::size_t>();
    c.final_sigmoid = j.at("final_sigmoid").get<bool>();
    c.conditioner_width = j.value("conditioner_width", std::size_t{0});
    c.conditioner_bottleneck = j.value("conditioner_bottleneck", std::size_t{0});
    c.generator_width = j.value("generator_width", std::size_t{0});
    c.vector_hidden = j.value("vector_hidden", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid hallucinator metadata: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace tfh::hallucinator
