#include "backbone/backbone.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

#include "common/rng.hpp"
#include "nn/checkpoint.hpp"

namespace tfh::backbone {

using nn::LayerSpec;
using nn::Shape;
using nn::Tensor;

namespace {

std::vector<LayerSpec> embedding_layers(const BackboneConfig& c) {
  std::vector<LayerSpec> layers;
  std::size_t in = c.image_shape.at(0);
  for (auto width : c.widths) {
    layers.push_back(LayerSpec::conv2d(in, width, 3, 1, 1));
    layers.push_back(LayerSpec::relu());
    layers.push_back(LayerSpec::conv2d(width, width, 3, 2, 1));
    layers.push_back(LayerSpec::relu());
    in = width;
  }
  return layers;
}

Tensor stack_batch(const data::LabeledFeatureSet& set, std::span<const std::size_t> idx) {
  Shape s{idx.size()};
  s.insert(s.end(), set.feature_shape().begin(), set.feature_shape().end());
  Tensor out(s);
  const std::size_t per = nn::shape_numel(set.feature_shape());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& f = set.feature(idx[i]);
    std::copy_n(f.ptr(), per, out.ptr() + i * per);
  }
  return out;
}

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
  const std::size_t c = logits.extent(1);
  std::size_t best = 0;
  for (std::size_t i = 1; i < c; ++i) {
    if (logits[row * c + i] > logits[row * c + best]) best = i;
  }
  return best;
}

void check_images(const data::LabeledFeatureSet& images, const BackboneConfig& config) {
  if (images.feature_shape() != config.image_shape) {
    throw ShapeError("image shape " + nn::shape_str(images.feature_shape()) +
                     " does not match backbone input " + nn::shape_str(config.image_shape));
  }
  if (images.num_classes() > config.num_classes) {
    throw ConfigError("image set has " + std::to_string(images.num_classes()) +
                      " classes but the head has " + std::to_string(config.num_classes));
  }
  if (images.empty()) throw InvalidArgument("image set is empty");
}

void clip_gradient_norm(nn::ParamStore& params, float max_norm) {
  double sq = 0;
  for (auto& [name, entry] : params) {
    for (float v : entry.grad.data()) sq += static_cast<double>(v) * v;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const auto scale = static_cast<float>(max_norm / norm);
  for (auto& [name, entry] : params) {
    for (auto& v : entry.grad.data()) v *= scale;
  }
}

// One pass over the data in shuffled mini-batches. `batch_loss` builds the
// objective for a batch and returns (loss var, logits var).
template <typename BuildLoss>
void run_epochs(BackboneModel& model, const data::LabeledFeatureSet& images, const TrainConfig& train,
                std::uint64_t seed, TrainHistory* history, BuildLoss&& build_loss) {
  auto opt = nn::Optimizer::sgd(train.sgd);
  std::vector<std::size_t> order(images.size());
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    std::normal_distribution<float> noise(0.0f, train.augment_noise_std > 0 ? train.augment_noise_std : 1.0f);
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += train.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + train.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      Tensor x = stack_batch(images, idx);
      if (train.augment_noise_std > 0) {
        for (auto& v : x.data()) v += noise(rng);
      }
      std::vector<std::size_t> labels;
      for (auto i : idx) labels.push_back(images.label(i));
      nn::Graph g(&model.params());
      auto [loss, logits] = build_loss(g, x, labels);
      const double value = g.value(loss)[0];
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss " + std::to_string(value) + " at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(batch));
      }
      g.backward(loss);
      if (train.grad_clip_norm > 0) clip_gradient_norm(model.params(), train.grad_clip_norm);
      opt.step(model.params());
      loss_sum += value * static_cast<double>(idx.size());
      const auto& lv = g.value(logits);
      for (std::size_t r = 0; r < idx.size(); ++r) correct += argmax_row(lv, r) == labels[r];
    }
    if (history) {
      history->epoch_loss.push_back(loss_sum / static_cast<double>(images.size()));
      history->epoch_accuracy.push_back(static_cast<double>(correct) /
                                        static_cast<double>(images.size()));
    }
  }
}

}  // namespace

void BackboneConfig::validate() const {
  std::vector<std::string> problems;
  if (image_shape.size() != 3) problems.push_back("image_shape must be c x H x W");
  if (feature_shape.size() != 3) problems.push_back("feature_shape must be d x h x w");
  for (auto w : widths)
    if (w < 1) problems.push_back("block widths must be >= 1");
  if (num_classes < 1) problems.push_back("num_classes must be >= 1");
  if (!problems.empty()) throw ConfigError(std::move(problems));
  Shape out;
  try {
    out = nn::Sequential("embed", embedding_layers(*this)).output_shape(image_shape);
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("backbone does not apply to image shape: ") + e.what());
  }
  if (out != feature_shape) {
    throw ConfigError("backbone maps " + nn::shape_str(image_shape) + " to " + nn::shape_str(out) +
                      ", configured feature shape is " + nn::shape_str(feature_shape));
  }
}

nn::Sequential BackboneConfig::embedding() const {
  return nn::Sequential("embed", embedding_layers(*this));
}

nn::Sequential BackboneConfig::head() const {
  return nn::Sequential("head", {LayerSpec::linear(feature_shape.at(0), num_classes)});
}

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (batch_size < 1) problems.push_back("batch_size must be >= 1");
  if (!(sgd.learning_rate >= 0)) problems.push_back("learning_rate must be >= 0");
  if (!(sgd.momentum >= 0 && sgd.momentum < 1)) problems.push_back("momentum must be in [0, 1)");
  if (!(sgd.weight_decay >= 0)) problems.push_back("weight_decay must be >= 0");
  if (!(augment_noise_std >= 0)) problems.push_back("augment_noise_std must be >= 0");
  if (!(grad_clip_norm >= 0)) problems.push_back("grad_clip_norm must be >= 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

void DistillConfig::validate() const {
  std::vector<std::string> problems;
  if (!(alpha >= 0)) problems.push_back("alpha must be >= 0");
  if (!(beta >= 0)) problems.push_back("beta must be >= 0");
  if (!(alpha + beta > 0)) problems.push_back("alpha + beta must be > 0");
  if (!(temperature > 0)) problems.push_back("temperature must be > 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
  train.validate();
}

BackboneModel::BackboneModel(BackboneConfig config, std::uint64_t init_seed)
    : config_(std::move(config)) {
  config_.validate();
  embedding_ = config_.embedding();
  head_ = config_.head();
  Rng rng(derive_seed(init_seed, stream::kInit));
  embedding_.init_params(params_, rng);
  head_.init_params(params_, rng);
}

BackboneModel::BackboneModel(BackboneConfig config, nn::ParamStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  embedding_ = config_.embedding();
  head_ = config_.head();
  nn::ParamStore expected;
  Rng rng(0);
  embedding_.init_params(expected, rng);
  head_.init_params(expected, rng);
  if (expected.size() != params_.size()) {
    throw ConfigError("backbone checkpoint has " + std::to_string(params_.size()) +
                      " parameters, architecture needs " + std::to_string(expected.size()));
  }
  for (const auto& [name, e] : expected) {
    if (!params_.contains(name)) throw ConfigError("backbone checkpoint lacks parameter '" + name + "'");
    if (params_.value(name).shape() != e.value.shape()) {
      throw ShapeError("backbone parameter '" + name + "' has shape " +
                       nn::shape_str(params_.value(name).shape()) + ", expected " +
                       nn::shape_str(e.value.shape()));
    }
  }
}

void BackboneModel::check_image(const Tensor& image) const {
  if (image.shape() != config_.image_shape) {
    throw ShapeError("image shape " + nn::shape_str(image.shape()) + " does not match backbone input " +
                     nn::shape_str(config_.image_shape));
  }
}

data::FeatureTensor BackboneModel::embed(const Tensor& image) const {
  check_image(image);
  Shape s{1};
  s.insert(s.end(), image.shape().begin(), image.shape().end());
  nn::Graph g(&std::as_const(params_));
  auto y = forward_embed(g, g.constant(image.reshaped(s)));
  return g.value(y).reshaped(config_.feature_shape);
}

std::vector<float> BackboneModel::embed_gap(const Tensor& image) const {
  const auto v = nn::gap(embed(image));
  return {v.data().begin(), v.data().end()};
}

std::vector<float> BackboneModel::logits(const Tensor& image) const {
  check_image(image);
  Shape s{1};
  s.insert(s.end(), image.shape().begin(), image.shape().end());
  nn::Graph g(&std::as_const(params_));
  const auto& v = g.value(forward_logits(g, g.constant(image.reshaped(s))));
  return {v.data().begin(), v.data().end()};
}

std::string BackboneModel::metadata_json() const {
  nlohmann::json j;
  j["kind"] = "backbone";
  j["image_shape"] = config_.image_shape;
  j["widths"] = config_.widths;
  j["feature_shape"] = config_.feature_shape;
  j["num_classes"] = config_.num_classes;
  return j.dump();
}

void BackboneModel::save(const std::string& path) const {
  nn::save_checkpoint(path, params_, metadata_json());
}

BackboneModel BackboneModel::load(const std::string& path) {
  auto ck = nn::load_checkpoint(path);
  BackboneConfig cfg;
  try {
    const auto j = nlohmann::json::parse(ck.metadata);
    if (j.at("kind").get<std::string>() != "backbone") {
      throw ConfigError("checkpoint is not a backbone: kind '" + j.at("kind").get<std::string>() + "'");
    }
    cfg.image_shape = j.at("image_shape").get<Shape>();
    cfg.widths = j.at("widths").get<std::array<std::size_t, 3>>();
    cfg.feature_shape = j.at("feature_shape").get<Shape>();
    cfg.num_classes = j.at("num_classes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid backbone checkpoint metadata: ") + e.what());
  }
  return BackboneModel(std::move(cfg), std::move(ck.params));
}

BackboneModel train_backbone_ce(const data::LabeledFeatureSet& images, const BackboneConfig& config,
                                const TrainConfig& train, std::uint64_t seed, TrainHistory* history) {
  train.validate();
  check_images(images, config);
  BackboneModel model(config, seed);
  run_epochs(model, images, train, derive_seed(seed, stream::kShuffle), history,
             [&](nn::Graph& g, const Tensor& x, const std::vector<std::size_t>& labels) {
               auto logits = model.forward_logits(g, g.constant(x));
               return std::pair{g.cross_entropy(logits, labels), logits};
             });
  return model;
}

namespace {

nn::Graph::Var distill_loss(nn::Graph& g, nn::Graph::Var student_logits, const Tensor& teacher_logits,
                            const std::vector<std::size_t>& labels, const DistillConfig& cfg) {
  auto ce = g.cross_entropy(student_logits, labels);
  auto loss = g.scale(ce, cfg.alpha);
  if (cfg.beta > 0) {
    auto kl = g.kl_divergence(student_logits, g.constant(teacher_logits), cfg.temperature);
    loss = g.add(loss, g.scale(kl, cfg.beta));
  }
  return loss;
}

Tensor teacher_logits(const BackboneModel& teacher, const Tensor& x) {
  nn::Graph tg(&teacher.params());
  return tg.value(teacher.forward_logits(tg, tg.constant(x)));
}

}  // namespace

BackboneModel distill_backbone(const BackboneModel& teacher, const data::LabeledFeatureSet& images,
                               const DistillConfig& cfg, std::uint64_t seed, TrainHistory* history,
                               const BackboneConfig* student_config) {
  cfg.validate();
  if (student_config && !(*student_config == teacher.config())) {
    throw ConfigError("student architecture differs from the teacher's");
  }
  check_images(images, teacher.config());
  BackboneModel student = cfg.init_from_teacher
                              ? BackboneModel(teacher.config(), teacher.params().cast<float>())
                              : BackboneModel(teacher.config(), seed);
  run_epochs(student, images, cfg.train, derive_seed(seed, stream::kShuffle), history,
             [&](nn::Graph& g, const Tensor& x, const std::vector<std::size_t>& labels) {
               const Tensor tl = teacher_logits(teacher, x);
               auto logits = student.forward_logits(g, g.constant(x));
               return std::pair{distill_loss(g, logits, tl, labels, cfg), logits};
             });
  return student;
}

double distill_objective(const BackboneModel& student, const BackboneModel& teacher,
                         const data::LabeledFeatureSet& images, std::span<const std::size_t> batch,
                         const DistillConfig& cfg) {
  const Tensor x = stack_batch(images, batch);
  std::vector<std::size_t> labels;
  for (auto i : batch) labels.push_back(images.label(i));
  const Tensor tl = teacher_logits(teacher, x);
  nn::Graph g(&student.params());
  auto logits = student.forward_logits(g, g.constant(x));
  return g.value(distill_loss(g, logits, tl, labels, cfg))[0];
}

double classification_accuracy(const BackboneModel& model, const data::LabeledFeatureSet& images) {
  check_images(images, model.config());
  std::size_t correct = 0;
  constexpr std::size_t kBatch = 64;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < images.size(); start += kBatch) {
    idx.clear();
    for (std::size_t i = start; i < std::min(images.size(), start + kBatch); ++i) idx.push_back(i);
    nn::Graph g(&model.params());
    const auto& lv = g.value(model.forward_logits(g, g.constant(stack_batch(images, idx))));
    for (std::size_t r = 0; r < idx.size(); ++r) correct += argmax_row(lv, r) == images.label(idx[r]);
  }
  return static_cast<double>(correct) / static_cast<double>(images.size());
}

data::LabeledFeatureSet extract_features(const BackboneModel& model,
                                         const data::LabeledFeatureSet& images, unsigned threads) {
  if (images.feature_shape() != model.config().image_shape) {
    throw ShapeError("image shape " + nn::shape_str(images.feature_shape()) +
                     " does not match backbone input " + nn::shape_str(model.config().image_shape));
  }
  const auto& fshape = model.config().feature_shape;
  const std::size_t per = nn::shape_numel(fshape);
  std::vector<Tensor> feats(images.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    constexpr std::size_t kBatch = 32;
    std::vector<std::size_t> idx;
    for (std::size_t s = begin; s < end; s += kBatch) {
      idx.clear();
      for (std::size_t i = s; i < std::min(end, s + kBatch); ++i) idx.push_back(i);
      nn::Graph g(&model.params());
      const auto& y = g.value(model.forward_embed(g, g.constant(stack_batch(images, idx))));
      for (std::size_t r = 0; r < idx.size(); ++r) {
        feats[idx[r]] = Tensor(fshape, std::vector<float>(y.ptr() + r * per, y.ptr() + (r + 1) * per));
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    work(0, images.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (images.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk, e = std::min(images.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  data::LabeledFeatureSet out(fshape, images.num_classes());
  for (const auto& [c, name] : images.class_names()) out.set_class_name(c, name);
  for (std::size_t i = 0; i < images.size(); ++i) out.add(std::move(feats[i]), images.label(i));
  return out;
}

}  // namespace tfh::backbone
