#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "data/feature_set.hpp"
#include "nn/graph.hpp"
#include "nn/layer_spec.hpp"
#include "nn/optim.hpp"

namespace tfh::backbone {

/// Three blocks of conv3x3 -> ReLU -> stride-2 conv3x3 -> ReLU, followed by
/// GAP and a linear base-class head. The last block width is the feature
/// depth d, and the spatial size after the three stride-2 convolutions must
/// equal the configured h x w.
struct BackboneConfig {
  nn::Shape image_shape{1, 36, 36};
  std::array<std::size_t, 3> widths{8, 16, 32};
  nn::Shape feature_shape{32, 5, 5};
  std::size_t num_classes = 8;

  void validate() const;
  nn::Sequential embedding() const;
  nn::Sequential head() const;
  bool operator==(const BackboneConfig&) const = default;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  nn::SgdConfig sgd;
  /// Std of Gaussian noise added to training images; 0 disables.
  float augment_noise_std = 0.0f;
  /// Rescale the global gradient to at most this L2 norm before each step; 0 disables.
  float grad_clip_norm = 0.0f;

  void validate() const;
};

struct DistillConfig {
  float alpha = 0.5f;
  float beta = 0.5f;
  float temperature = 4.0f;
  TrainConfig train{.grad_clip_norm = 1.0f};
  /// Start the student from the teacher's weights instead of a fresh init.
  bool init_from_teacher = false;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;
};

/// Embedding network plus classifier head, parameters in one store
/// ("embed.*" and "head.*").
class BackboneModel {
 public:
  BackboneModel(BackboneConfig config, std::uint64_t init_seed);
  BackboneModel(BackboneConfig config, nn::ParamStore params);

  const BackboneConfig& config() const { return config_; }
  const nn::ParamStore& params() const { return params_; }
  nn::ParamStore& params() { return params_; }

  /// Batched forward on n x c x H x W images.
  template <typename T>
  typename nn::BasicGraph<T>::Var forward_embed(nn::BasicGraph<T>& g,
                                                typename nn::BasicGraph<T>::Var images) const {
    return embedding_.forward(g, images);
  }
  template <typename T>
  typename nn::BasicGraph<T>::Var forward_logits(nn::BasicGraph<T>& g,
                                                 typename nn::BasicGraph<T>::Var images) const {
    return head_.forward(g, g.gap(embedding_.forward(g, images)));
  }

  data::FeatureTensor embed(const nn::Tensor& image) const;
  std::vector<float> embed_gap(const nn::Tensor& image) const;
  std::vector<float> logits(const nn::Tensor& image) const;

  std::string metadata_json() const;
  void save(const std::string& path) const;
  static BackboneModel load(const std::string& path);

 private:
  void check_image(const nn::Tensor& image) const;

  BackboneConfig config_;
  nn::Sequential embedding_;
  nn::Sequential head_;
  nn::ParamStore params_;
};

/// Stage one: cross-entropy on base-class labels, SGD with momentum; the
/// regularizer is the optimizer's weight decay.
BackboneModel train_backbone_ce(const data::LabeledFeatureSet& images, const BackboneConfig& config,
                                const TrainConfig& train, std::uint64_t seed,
                                TrainHistory* history = nullptr);

/// Stage two: an identically shaped student trained on
/// alpha * CE + beta * KL(student || teacher) with the teacher frozen.
/// `student_config`, when given, must equal the teacher's configuration.
BackboneModel distill_backbone(const BackboneModel& teacher, const data::LabeledFeatureSet& images,
                               const DistillConfig& cfg, std::uint64_t seed,
                               TrainHistory* history = nullptr,
                               const BackboneConfig* student_config = nullptr);

/// Objective value of the distillation loss on the given examples (no update).
double distill_objective(const BackboneModel& student, const BackboneModel& teacher,
                         const data::LabeledFeatureSet& images, std::span<const std::size_t> batch,
                         const DistillConfig& cfg);

double classification_accuracy(const BackboneModel& model, const data::LabeledFeatureSet& images);

/// Tensor features for every image, in example order. Work is split over
/// `threads` workers sharing the model read-only.
data::LabeledFeatureSet extract_features(const BackboneModel& model,
                                         const data::LabeledFeatureSet& images,
                                         unsigned threads = 1);

}  // namespace tfh::backbone
