#include "hallucinator/training.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "common/log.hpp"
#include "common/rng.hpp"
#include "data/episode.hpp"

namespace tfh::hallucinator {

using nn::Shape;
using nn::Tensor;

namespace {

Tensor stack(const std::vector<Tensor>& items, std::size_t repeat = 1) {
  const Shape& s = items.at(0).shape();
  Shape out{items.size() * repeat};
  out.insert(out.end(), s.begin(), s.end());
  Tensor t(out);
  const std::size_t per = nn::shape_numel(s);
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t r = 0; r < repeat; ++r)
      std::copy_n(items[i].ptr(), per, t.ptr() + (i * repeat + r) * per);
  return t;
}

Tensor draw_latents(std::size_t rows, std::size_t k, Rng& rng) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Tensor z({rows, k});
  for (auto& v : z.data()) v = normal(rng);
  return z;
}

std::vector<Tensor> class_prototypes(const HallucinatorModel& model, const ClassFeatures& support) {
  if (support.empty()) throw InvalidArgument("support set has no classes");
  std::vector<Tensor> protos;
  for (std::size_t j = 0; j < support.size(); ++j) {
    if (support[j].empty()) {
      throw InvalidArgument("support class " + std::to_string(j) + " has no examples");
    }
    model.check_feature_shape(support[j][0].shape());
    protos.push_back(tensor_prototype(support[j]));
  }
  return protos;
}

void check_finite(double loss, std::size_t epoch, std::size_t episode, const data::Episode& ep) {
  if (std::isfinite(loss)) return;
  std::ostringstream msg;
  msg << "non-finite reconstruction loss " << loss << " at epoch " << epoch << ", episode " << episode
      << " (classes";
  for (auto c : ep.class_ids) msg << ' ' << c;
  msg << ')';
  throw NumericError(msg.str());
}

}  // namespace

void MetaTrainConfig::validate() const {
  std::vector<std::string> problems;
  if (n_way < 1) problems.push_back("n_way must be >= 1");
  if (k_shot < 1) problems.push_back("k_shot must be >= 1");
  if (generated_per_class < 1) problems.push_back("generated_per_class must be >= 1");
  if (episodes_per_epoch < 1) problems.push_back("episodes_per_epoch must be >= 1");
  if (!(adam.learning_rate > 0)) problems.push_back("learning_rate must be > 0");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1)) problems.push_back("beta1 must be in [0, 1)");
  if (!(adam.beta2 >= 0 && adam.beta2 < 1)) problems.push_back("beta2 must be in [0, 1)");
  if (!(adam.epsilon > 0)) problems.push_back("epsilon must be > 0");
  if (!(lr_decay_factor > 0)) problems.push_back("lr_decay_factor must be > 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

FineTuneConfig FineTuneConfig::large_preset(std::size_t k_shot) {
  FineTuneConfig c;
  if (k_shot == 1) {
    c.steps = 15;
    c.learning_rate = 1e-7f;
  }
  return c;
}

void FineTuneConfig::validate() const {
  std::vector<std::string> problems;
  if (!(learning_rate > 0)) problems.push_back("fine-tune learning_rate must be > 0");
  if (generated_per_step < 1) problems.push_back("fine-tune generated_per_step must be >= 1");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

nn::Graph::Var reconstruction_objective(nn::Graph& g, const HallucinatorModel& model,
                                        const std::vector<Tensor>& prototypes,
                                        std::size_t generated_per_class, Rng& rng) {
  const auto& cfg = model.config();
  const std::size_t n = prototypes.size(), m = generated_per_class;
  std::vector<Tensor> targets;
  targets.reserve(n);
  for (const auto& p : prototypes) targets.push_back(reconstruction_target(cfg, p));

  auto s = model.forward_condition(g, g.constant(stack(prototypes)));
  auto z = g.constant(draw_latents(n * m, cfg.latent_dim, rng));
  auto generated = model.forward_generate(g, z, g.repeat_rows(s, m));
  return g.mse(generated, g.constant(stack(targets, m)), static_cast<float>(n * m));
}

void meta_train(HallucinatorModel& model, const data::LabeledFeatureSet& base, const MetaTrainConfig& cfg,
                std::uint64_t seed, MetaTrainHistory* history) {
  cfg.validate();
  model.check_feature_shape(base.feature_shape());
  warn_on_codomain_mismatch(model.config(), base);

  auto opt = nn::Optimizer::adam(cfg.adam);
  const std::uint64_t episode_seed = derive_seed(seed, stream::kEpisode);
  const std::uint64_t latent_seed = derive_seed(seed, stream::kLatent);
  std::size_t global = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double decay =
        cfg.lr_decay_every ? std::pow(static_cast<double>(cfg.lr_decay_factor),
                                      static_cast<double>(epoch / cfg.lr_decay_every))
                           : 1.0;
    opt.set_learning_rate(static_cast<float>(cfg.adam.learning_rate * decay));
    double epoch_sum = 0;
    for (std::size_t e = 0; e < cfg.episodes_per_epoch; ++e, ++global) {
      const auto ep = data::sample_episode(base, cfg.n_way, cfg.k_shot, 0, derive_seed(episode_seed, global));
      std::vector<Tensor> protos;
      protos.reserve(cfg.n_way);
      for (const auto& cls : data::gather(base, ep.support)) protos.push_back(tensor_prototype(cls));

      Rng rng(derive_seed(latent_seed, global));
      nn::Graph g(&model.params());
      auto loss = reconstruction_objective(g, model, protos, cfg.generated_per_class, rng);
      const double value = g.value(loss)[0];
      check_finite(value, epoch, e, ep);
      g.backward(loss);
      opt.step(model.params());
      epoch_sum += value;
      if (history) history->episode_loss.push_back(value);
    }
    const double mean = epoch_sum / static_cast<double>(cfg.episodes_per_epoch);
    if (history) history->epoch_loss.push_back(mean);
    log_info("hallucinator epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs) +
             " mean loss " + std::to_string(mean));
  }
}

HallucinatorModel meta_train(const data::LabeledFeatureSet& base, const HallucinatorConfig& config,
                             const MetaTrainConfig& cfg, std::uint64_t seed, MetaTrainHistory* history) {
  HallucinatorModel model(config, seed);
  meta_train(model, base, cfg, seed, history);
  return model;
}

HallucinatorModel fine_tune(const HallucinatorModel& model, const ClassFeatures& support,
                            const FineTuneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  HallucinatorModel tuned = model;
  if (cfg.steps == 0) return tuned;
  const auto protos = class_prototypes(model, support);
  nn::AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  auto opt = nn::Optimizer::adam(adam);
  Rng rng(derive_seed(seed, stream::kFineTune));
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    nn::Graph g(&tuned.params());
    auto loss = reconstruction_objective(g, tuned, protos, cfg.generated_per_step, rng);
    const double value = g.value(loss)[0];
    if (!std::isfinite(value)) {
      throw NumericError("non-finite fine-tuning loss " + std::to_string(value) + " at step " +
                         std::to_string(step));
    }
    g.backward(loss);
    opt.step(tuned.params());
  }
  return tuned;
}

ClassFeatures hallucinate_support(const HallucinatorModel& model, const ClassFeatures& support,
                                  std::size_t generated_per_class, std::uint64_t seed) {
  ClassFeatures out(support.size());
  if (generated_per_class == 0) return out;
  const auto protos = class_prototypes(model, support);
  const auto& cfg = model.config();
  const std::size_t n = protos.size(), m = generated_per_class;
  Rng rng(derive_seed(seed, stream::kLatent));

  nn::Graph g(&model.params());
  auto s = model.forward_condition(g, g.constant(stack(protos)));
  auto z = g.constant(draw_latents(n * m, cfg.latent_dim, rng));
  const auto& gen = g.value(model.forward_generate(g, z, g.repeat_rows(s, m)));

  const Shape shape = cfg.output_shape();
  const std::size_t per = nn::shape_numel(shape);
  for (std::size_t j = 0; j < n; ++j) {
    out[j].reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      const float* src = gen.ptr() + (j * m + i) * per;
      out[j].emplace_back(shape, std::vector<float>(src, src + per));
    }
  }
  return out;
}

double support_reconstruction_loss(const HallucinatorModel& model, const ClassFeatures& support,
                                   std::size_t generated_per_class, std::uint64_t seed) {
  if (generated_per_class == 0) throw InvalidArgument("generated_per_class must be >= 1");
  const auto protos = class_prototypes(model, support);
  Rng rng(derive_seed(seed, stream::kLatent));
  nn::Graph g(&model.params());
  return g.value(reconstruction_objective(g, model, protos, generated_per_class, rng))[0];
}

double warn_on_codomain_mismatch(const HallucinatorConfig& config, const data::LabeledFeatureSet& set) {
  if (!config.final_sigmoid || set.empty()) return 0.0;
  const double frac = data::fraction_outside_unit(set);
  if (frac > 0) {
    log_warning("generator ends in a sigmoid (outputs in (0,1)) but " + std::to_string(frac * 100.0) +
                "% of feature elements lie outside (0,1); no rescaling is applied");
  }
  return frac;
}

}  // namespace tfh::hallucinator
