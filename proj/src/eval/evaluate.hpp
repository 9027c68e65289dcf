#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "data/episode.hpp"
#include "eval/linear_classifier.hpp"
#include "eval/report.hpp"
#include "hallucinator/training.hpp"

namespace tfh::eval {

struct EvalArgs {
  ClassifierKind classifier = ClassifierKind::kPrototype;
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t queries_per_class = 15;
  std::size_t generated_per_class = 0;
  std::size_t tasks = 600;
  std::optional<hallucinator::FineTuneConfig> fine_tune;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  LinearClassifierConfig linear;

  void validate() const;
  EvalFingerprint fingerprint(const hallucinator::HallucinatorModel* model) const;
};

/// One evaluated task, kept for inspection and export.
struct TaskOutcome {
  data::Episode episode;
  AugmentedSupport support;
  double accuracy = 0;
  /// Predicted episode-class index per query, class-major.
  std::vector<std::size_t> predictions;
};

/// Seed of task `index` in a run with base seed `seed`; episodes, latents and
/// fine-tuning draws of the task all derive from it.
std::uint64_t task_seed(std::uint64_t seed, std::size_t index);

TaskOutcome run_task(const data::LabeledFeatureSet& novel, const hallucinator::HallucinatorModel* model,
                     const EvalArgs& args, std::size_t index);

/// `model` may be null, which evaluates the real support features alone.
EvalReport evaluate(const data::LabeledFeatureSet& novel, const hallucinator::HallucinatorModel* model,
                    const EvalArgs& args);

/// One report per M in `counts`, all on the same task episodes.
std::vector<EvalReport> sweep_generated(std::span<const std::size_t> counts,
                                        const data::LabeledFeatureSet& novel,
                                        const hallucinator::HallucinatorModel* model, const EvalArgs& args);

/// evaluate() on a target-domain set with a model trained elsewhere; the
/// report carries both domain names.
EvalReport cross_domain_evaluate(const hallucinator::HallucinatorModel* model,
                                 const data::LabeledFeatureSet& target, const EvalArgs& args,
                                 const std::string& source_name, const std::string& target_name);

}  // namespace tfh::eval
