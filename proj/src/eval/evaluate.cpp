#include "eval/evaluate.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "common/rng.hpp"

namespace tfh::eval {

using hallucinator::HallucinatorModel;

void EvalArgs::validate() const {
  std::vector<std::string> problems;
  if (n_way < 2) problems.push_back("n_way must be >= 2");
  if (k_shot < 1) problems.push_back("k_shot must be >= 1");
  if (queries_per_class < 1) problems.push_back("queries_per_class must be >= 1");
  if (tasks < 1) problems.push_back("tasks must be >= 1");
  if (threads < 1) problems.push_back("threads must be >= 1");
  if (!problems.empty()) throw ConfigError(std::move(problems));
  linear.validate();
  if (fine_tune) fine_tune->validate();
}

EvalFingerprint EvalArgs::fingerprint(const HallucinatorModel* model) const {
  EvalFingerprint f;
  f.classifier = classifier_name(classifier);
  f.n_way = n_way;
  f.k_shot = k_shot;
  f.queries_per_class = queries_per_class;
  f.generated_per_class = generated_per_class;
  f.tasks = tasks;
  f.seed = seed;
  f.fine_tune = fine_tune.has_value() && model != nullptr;
  if (f.fine_tune) {
    f.fine_tune_steps = fine_tune->steps;
    f.fine_tune_learning_rate = fine_tune->learning_rate;
    f.fine_tune_generated = fine_tune->generated_per_step;
  }
  f.model = model ? hallucinator::variant_name(model->config().variant) : "none";
  return f;
}

std::uint64_t task_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, index); }

TaskOutcome run_task(const data::LabeledFeatureSet& novel, const HallucinatorModel* model,
                     const EvalArgs& args, std::size_t index) {
  const std::uint64_t ts = task_seed(args.seed, index);
  TaskOutcome out;
  out.episode = data::sample_episode(novel, args.n_way, args.k_shot, args.queries_per_class,
                                     derive_seed(ts, stream::kEpisode));
  out.support.class_ids = out.episode.class_ids;
  out.support.support = data::gather(novel, out.episode.support);
  out.support.generated.resize(args.n_way);

  if (model && args.generated_per_class > 0) {
    if (args.fine_tune && args.fine_tune->steps > 0) {
      const HallucinatorModel tuned =
          hallucinator::fine_tune(*model, out.support.support, *args.fine_tune, derive_seed(ts, stream::kFineTune));
      out.support.generated = hallucinator::hallucinate_support(tuned, out.support.support,
                                                                args.generated_per_class, ts);
    } else {
      out.support.generated =
          hallucinator::hallucinate_support(*model, out.support.support, args.generated_per_class, ts);
    }
  }

  std::vector<Vector> prototypes;
  LinearModel linear;
  if (args.classifier == ClassifierKind::kPrototype) {
    prototypes = augmented_vector_prototypes(out.support);
  } else {
    linear = fit_linear_classifier(args.classifier, out.support, args.linear);
  }

  std::size_t correct = 0, total = 0;
  for (std::size_t j = 0; j < out.episode.query.size(); ++j) {
    for (auto idx : out.episode.query[j]) {
      const Vector q = gap_vector(novel.feature(idx));
      const std::size_t pred = args.classifier == ClassifierKind::kPrototype ? nearest_prototype(prototypes, q)
                                                                              : linear.predict(q);
      out.predictions.push_back(pred);
      correct += pred == j;
      ++total;
    }
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  return out;
}

EvalReport evaluate(const data::LabeledFeatureSet& novel, const HallucinatorModel* model,
                    const EvalArgs& args) {
  args.validate();
  if (!model && args.generated_per_class > 0) {
    throw ConfigError("generated_per_class = " + std::to_string(args.generated_per_class) +
                      " requires a hallucinator model");
  }
  if (model) model->check_feature_shape(novel.feature_shape());

  std::vector<double> acc(args.tasks, 0.0);
  const unsigned workers = std::min<unsigned>(args.threads, static_cast<unsigned>(args.tasks));
  if (workers <= 1) {
    for (std::size_t t = 0; t < args.tasks; ++t) acc[t] = run_task(novel, model, args, t).accuracy;
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (;;) {
        const std::size_t t = next.fetch_add(1);
        if (t >= args.tasks) return;
        try {
          acc[t] = run_task(novel, model, args, t).accuracy;
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(args.tasks);
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  return EvalReport::from_accuracies(args.fingerprint(model), std::move(acc));
}

std::vector<EvalReport> sweep_generated(std::span<const std::size_t> counts,
                                        const data::LabeledFeatureSet& novel, const HallucinatorModel* model,
                                        const EvalArgs& args) {
  std::vector<EvalReport> out;
  out.reserve(counts.size());
  for (auto m : counts) {
    EvalArgs a = args;
    a.generated_per_class = m;
    out.push_back(evaluate(novel, m == 0 ? nullptr : model, a));
  }
  return out;
}

EvalReport cross_domain_evaluate(const HallucinatorModel* model, const data::LabeledFeatureSet& target,
                                 const EvalArgs& args, const std::string& source_name,
                                 const std::string& target_name) {
  if (model) {
    try {
      model->check_feature_shape(target.feature_shape());
    } catch (const ShapeError& e) {
      throw ConfigError(std::string("source and target domains are incompatible: ") + e.what());
    }
  }
  EvalReport r = evaluate(target, model, args);
  r.config.source_domain = source_name;
  r.config.target_domain = target_name;
  return EvalReport::from_accuracies(r.config, std::move(r.per_task_accuracies));
}

}  // namespace tfh::eval
