#pragma once

#include <cstdint>
#include <vector>

#include "common/rng.hpp"
#include "data/feature_set.hpp"
#include "hallucinator/model.hpp"
#include "nn/optim.hpp"

namespace tfh::hallucinator {

/// Support (or episode) features grouped per class.
using ClassFeatures = std::vector<std::vector<nn::Tensor>>;

struct MetaTrainConfig {
  std::size_t n_way = 5;
  std::size_t k_shot = 20;
  std::size_t generated_per_class = 50;
  std::size_t episodes_per_epoch = 600;
  std::size_t epochs = 50;
  nn::AdamConfig adam;
  /// The learning rate is multiplied by lr_decay_factor every
  /// lr_decay_every epochs (0 disables decay).
  std::size_t lr_decay_every = 10;
  float lr_decay_factor = 0.5f;

  void validate() const;
};

struct FineTuneConfig {
  std::size_t steps = 10;
  float learning_rate = 1e-4f;
  std::size_t generated_per_step = 10;

  /// Settings used with the large preset: 15 steps at 1e-7 for 1-shot
  /// tasks, 10 steps at 1e-4 otherwise.
  static FineTuneConfig large_preset(std::size_t k_shot);

  void validate() const;
};

struct MetaTrainHistory {
  std::vector<double> episode_loss;
  std::vector<double> epoch_loss;
};

/// Mean squared distance of generated features to their class target,
/// sum over classes and samples of ||g(z; h(p_j)) - p_j||^2 divided by M * N.
/// Builds the loss on `g` with latents drawn from `rng`.
nn::Graph::Var reconstruction_objective(nn::Graph& g, const HallucinatorModel& model,
                                        const std::vector<nn::Tensor>& prototypes,
                                        std::size_t generated_per_class, Rng& rng);

HallucinatorModel meta_train(const data::LabeledFeatureSet& base, const HallucinatorConfig& config,
                             const MetaTrainConfig& cfg, std::uint64_t seed,
                             MetaTrainHistory* history = nullptr);

/// Continues training `model` in place.
void meta_train(HallucinatorModel& model, const data::LabeledFeatureSet& base,
                const MetaTrainConfig& cfg, std::uint64_t seed, MetaTrainHistory* history = nullptr);

/// Copy of `model` after cfg.steps Adam updates of the reconstruction loss
/// with prototypes taken from `support`. The input model is not modified.
HallucinatorModel fine_tune(const HallucinatorModel& model, const ClassFeatures& support,
                            const FineTuneConfig& cfg, std::uint64_t seed);

/// M generated features per class, conditioned on the class prototypes of
/// `support`. Fresh latents per call, determined by `seed`.
ClassFeatures hallucinate_support(const HallucinatorModel& model, const ClassFeatures& support,
                                  std::size_t generated_per_class, std::uint64_t seed);

/// Reconstruction loss on `support` prototypes with latents drawn from `seed`
/// (fixed seed gives a deterministic before/after comparison).
double support_reconstruction_loss(const HallucinatorModel& model, const ClassFeatures& support,
                                   std::size_t generated_per_class, std::uint64_t seed);

/// Logs a warning when the model ends in a sigmoid but the feature set has
/// elements outside (0, 1). Returns the offending fraction.
double warn_on_codomain_mismatch(const HallucinatorConfig& config, const data::LabeledFeatureSet& set);

}  // namespace tfh::hallucinator
