#include "tfh/tfh.h"

#include <cstring>
#include <iostream>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "backbone/backbone.hpp"
#include "backbone/synthetic_images.hpp"
#include "common/binary_io.hpp"
#include "common/error.hpp"
#include "common/log.hpp"
#include "data/feature_file.hpp"
#include "data/split.hpp"
#include "data/synthetic.hpp"
#include "eval/evaluate.hpp"
#include "eval/export.hpp"
#include "hallucinator/training.hpp"

struct tfh_feature_set {
  tfh::data::LabeledFeatureSet set;
};

struct tfh_backbone {
  tfh::backbone::BackboneModel model;
};

struct tfh_hallucinator {
  tfh::hallucinator::HallucinatorModel model;
};

struct tfh_report {
  explicit tfh_report(tfh::eval::EvalReport r)
      : report(std::move(r)), json(report.to_json()), fingerprint(report.config.hash()), csv(report.csv_row()) {}
  tfh::eval::EvalReport report;
  std::string json;
  std::string fingerprint;
  std::string csv;
};

namespace {

using namespace tfh;

struct LastError {
  std::string message;
  std::string json = "{}";
};

thread_local LastError g_error;

tfh_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return TFH_ERR_SHAPE;
    case ErrorKind::kCapacity: return TFH_ERR_CAPACITY;
    case ErrorKind::kParse: return TFH_ERR_PARSE;
    case ErrorKind::kConfig: return TFH_ERR_CONFIG;
    case ErrorKind::kNumeric: return TFH_ERR_NUMERIC;
    case ErrorKind::kIo: return TFH_ERR_IO;
    case ErrorKind::kState: return TFH_ERR_STATE;
    case ErrorKind::kInvalidArgument: return TFH_ERR_INVALID_ARGUMENT;
  }
  return TFH_ERR_INTERNAL;
}

tfh_status fail(tfh_status status, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::ordered_json j;
  j["status"] = tfh_status_name(status);
  j["message"] = message;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  g_error.message = message;
  g_error.json = j.dump();
  return status;
}

template <typename F>
tfh_status guarded(F&& body) {
  try {
    body();
    return TFH_OK;
  } catch (const ParseError& e) {
    return fail(TFH_ERR_PARSE, e.what(), {{"offset", e.offset()}});
  } catch (const IoError& e) {
    return fail(TFH_ERR_IO, e.what(), {{"path", e.path()}});
  } catch (const ConfigError& e) {
    return fail(TFH_ERR_CONFIG, e.what(), {{"problems", e.problems()}});
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TFH_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TFH_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* name) {
  if (!p) throw InvalidArgument(std::string(name) + " must not be null");
}

nn::Shape shape3(const size_t s[3]) { return {s[0], s[1], s[2]}; }

void put_shape(const nn::Shape& s, size_t out[3]) {
  if (s.size() != 3) throw ShapeError("expected a 3-d shape, got " + nn::shape_str(s));
  for (int i = 0; i < 3; ++i) out[i] = s[i];
}

backbone::BackboneConfig to_core(const tfh_backbone_config& c) {
  backbone::BackboneConfig b;
  b.image_shape = shape3(c.image_shape);
  b.widths = {c.widths[0], c.widths[1], c.widths[2]};
  b.feature_shape = shape3(c.feature_shape);
  b.num_classes = c.num_classes;
  return b;
}

backbone::TrainConfig to_core(const tfh_train_config& c) {
  backbone::TrainConfig t;
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.sgd.learning_rate = c.learning_rate;
  t.sgd.momentum = c.momentum;
  t.sgd.weight_decay = c.weight_decay;
  t.augment_noise_std = c.augment_noise_std;
  t.grad_clip_norm = c.grad_clip_norm;
  return t;
}

void from_core(const backbone::TrainConfig& t, tfh_train_config& c) {
  c.epochs = t.epochs;
  c.batch_size = t.batch_size;
  c.learning_rate = t.sgd.learning_rate;
  c.momentum = t.sgd.momentum;
  c.weight_decay = t.sgd.weight_decay;
  c.augment_noise_std = t.augment_noise_std;
  c.grad_clip_norm = t.grad_clip_norm;
}

hallucinator::HallucinatorConfig to_core(const tfh_hallucinator_config& c) {
  hallucinator::HallucinatorConfig h;
  if (c.variant != TFH_VARIANT_TENSOR && c.variant != TFH_VARIANT_VECTOR)
    throw InvalidArgument("unknown hallucinator variant " + std::to_string(static_cast<int>(c.variant)));
  h.variant = c.variant == TFH_VARIANT_VECTOR ? hallucinator::Variant::kVector : hallucinator::Variant::kTensor;
  h.feature_shape = shape3(c.feature_shape);
  h.cond_dim = c.cond_dim;
  h.latent_dim = c.latent_dim;
  h.generator_layers = c.generator_layers;
  h.final_sigmoid = c.final_sigmoid != 0;
  h.conditioner_width = c.conditioner_width;
  h.conditioner_bottleneck = c.conditioner_bottleneck;
  h.generator_width = c.generator_width;
  h.vector_hidden = c.vector_hidden;
  return h;
}

void from_core(const hallucinator::HallucinatorConfig& h, tfh_hallucinator_config& c) {
  c.variant = h.variant == hallucinator::Variant::kVector ? TFH_VARIANT_VECTOR : TFH_VARIANT_TENSOR;
  put_shape(h.feature_shape, c.feature_shape);
  c.cond_dim = h.cond_dim;
  c.latent_dim = h.latent_dim;
  c.generator_layers = h.generator_layers;
  c.final_sigmoid = h.final_sigmoid ? 1 : 0;
  c.conditioner_width = h.conditioner_width;
  c.conditioner_bottleneck = h.conditioner_bottleneck;
  c.generator_width = h.generator_width;
  c.vector_hidden = h.vector_hidden;
}

hallucinator::MetaTrainConfig to_core(const tfh_meta_train_config& c) {
  hallucinator::MetaTrainConfig m;
  m.n_way = c.n_way;
  m.k_shot = c.k_shot;
  m.generated_per_class = c.generated_per_class;
  m.episodes_per_epoch = c.episodes_per_epoch;
  m.epochs = c.epochs;
  m.adam.learning_rate = c.learning_rate;
  m.adam.beta1 = c.beta1;
  m.adam.beta2 = c.beta2;
  m.adam.epsilon = c.epsilon;
  m.lr_decay_every = c.lr_decay_every;
  m.lr_decay_factor = c.lr_decay_factor;
  return m;
}

hallucinator::FineTuneConfig to_core(const tfh_fine_tune_config& c) {
  hallucinator::FineTuneConfig f;
  f.steps = c.steps;
  f.learning_rate = c.learning_rate;
  f.generated_per_step = c.generated_per_step;
  return f;
}

void from_core(const hallucinator::FineTuneConfig& f, tfh_fine_tune_config& c) {
  c.steps = f.steps;
  c.learning_rate = f.learning_rate;
  c.generated_per_step = f.generated_per_step;
}

eval::EvalArgs to_core(const tfh_eval_config& c) {
  eval::EvalArgs a;
  switch (c.classifier) {
    case TFH_CLASSIFIER_PROTOTYPE: a.classifier = eval::ClassifierKind::kPrototype; break;
    case TFH_CLASSIFIER_LOGISTIC: a.classifier = eval::ClassifierKind::kLogistic; break;
    case TFH_CLASSIFIER_SVM: a.classifier = eval::ClassifierKind::kSvm; break;
    default: throw InvalidArgument("unknown classifier " + std::to_string(static_cast<int>(c.classifier)));
  }
  a.n_way = c.n_way;
  a.k_shot = c.k_shot;
  a.queries_per_class = c.queries_per_class;
  a.generated_per_class = c.generated_per_class;
  a.tasks = c.tasks;
  if (c.fine_tune) a.fine_tune = to_core(c.fine_tune_config);
  a.seed = c.seed;
  a.threads = c.threads;
  a.linear.l2 = c.l2;
  a.linear.max_steps = c.max_steps;
  a.linear.learning_rate = c.learning_rate;
  a.linear.decay = c.decay;
  a.linear.tolerance = c.tolerance;
  return a;
}

hallucinator::ClassFeatures per_class(const data::LabeledFeatureSet& set) {
  hallucinator::ClassFeatures out(set.num_classes());
  for (std::size_t c = 0; c < set.num_classes(); ++c) {
    const auto& idx = set.class_indices(c);
    if (idx.empty()) throw CapacityError("class " + std::to_string(c) + " has no examples");
    for (auto i : idx) out[c].push_back(set.feature(i));
  }
  return out;
}

void copy_losses(const std::vector<double>& src, double* dst) {
  if (dst) std::copy(src.begin(), src.end(), dst);
}

template <typename T, typename... A>
void emit_handle(T** out, A&&... args) {
  *out = new T{std::forward<A>(args)...};
}

}  // namespace

extern "C" {

const char* tfh_status_name(tfh_status status) {
  switch (status) {
    case TFH_OK: return "ok";
    case TFH_ERR_SHAPE: return "shape_error";
    case TFH_ERR_CAPACITY: return "capacity_error";
    case TFH_ERR_PARSE: return "parse_error";
    case TFH_ERR_CONFIG: return "config_error";
    case TFH_ERR_NUMERIC: return "numeric_error";
    case TFH_ERR_IO: return "io_error";
    case TFH_ERR_STATE: return "state_error";
    case TFH_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case TFH_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* tfh_last_error_message(void) { return g_error.message.c_str(); }
const char* tfh_last_error_json(void) { return g_error.json.c_str(); }
const char* tfh_version(void) { return "1.0.0"; }

void tfh_set_log_callback(tfh_log_fn fn, void* user) {
  if (!fn) {
    set_log_handler([](LogLevel level, const std::string& msg) {
      std::cerr << (level == LogLevel::kWarning ? "[warn] " : "[info] ") << msg << '\n';
    });
    return;
  }
  set_log_handler([fn, user](LogLevel level, const std::string& msg) {
    fn(level == LogLevel::kWarning ? TFH_LOG_WARNING : TFH_LOG_INFO, msg.c_str(), user);
  });
}

void tfh_silence_log(void) { set_log_handler(nullptr); }

// ---- feature sets ---------------------------------------------------------

void tfh_synthetic_spec_default(tfh_synthetic_spec* spec) {
  if (!spec) return;
  const data::SyntheticFeatureSpec d;
  spec->num_classes = d.num_classes;
  spec->examples_per_class = d.examples_per_class;
  put_shape(d.shape, spec->shape);
  spec->center_seed = d.center_seed;
  spec->noise_std = d.noise_std;
  spec->clip_to_unit = d.clip_to_unit ? 1 : 0;
  spec->center_offset = d.center_offset;
  spec->center_rank = d.center_rank;
  spec->channel_share = d.channel_share;
}

void tfh_image_spec_default(tfh_image_spec* spec) {
  if (!spec) return;
  const backbone::SyntheticImageSpec d;
  spec->num_classes = d.num_classes;
  spec->examples_per_class = d.examples_per_class;
  put_shape(d.image_shape, spec->shape);
  spec->template_seed = d.template_seed;
  spec->noise_std = d.noise_std;
}

tfh_status tfh_features_synthetic(const tfh_synthetic_spec* spec, tfh_feature_set** out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    data::SyntheticFeatureSpec s;
    s.num_classes = spec->num_classes;
    s.examples_per_class = spec->examples_per_class;
    s.shape = shape3(spec->shape);
    s.center_seed = spec->center_seed;
    s.noise_std = spec->noise_std;
    s.clip_to_unit = spec->clip_to_unit != 0;
    s.center_offset = spec->center_offset;
    s.center_rank = spec->center_rank;
    s.channel_share = spec->channel_share;
    emit_handle(out, data::make_synthetic_features(s));
  });
}

tfh_status tfh_images_synthetic(const tfh_image_spec* spec, tfh_feature_set** out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    backbone::SyntheticImageSpec s;
    s.num_classes = spec->num_classes;
    s.examples_per_class = spec->examples_per_class;
    s.image_shape = shape3(spec->shape);
    s.template_seed = spec->template_seed;
    s.noise_std = spec->noise_std;
    emit_handle(out, backbone::make_synthetic_images(s));
  });
}

tfh_status tfh_features_load(const char* path, tfh_feature_set** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    emit_handle(out, data::load_feature_file(path));
  });
}

tfh_status tfh_features_save(const tfh_feature_set* set, const char* path) {
  return guarded([&] {
    require(set, "set");
    require(path, "path");
    data::save_feature_file(set->set, path);
  });
}

tfh_status tfh_features_subset(const tfh_feature_set* set, const size_t* classes, size_t count,
                               tfh_feature_set** out) {
  return guarded([&] {
    require(set, "set");
    require(out, "out");
    if (count > 0) require(classes, "classes");
    const std::vector<std::size_t> ids(classes, classes + count);
    emit_handle(out, set->set.subset_classes(ids));
  });
}

tfh_status tfh_features_normalize(const tfh_feature_set* set, tfh_feature_set** out) {
  return guarded([&] {
    require(set, "set");
    require(out, "out");
    emit_handle(out, data::minmax_normalize(set->set));
  });
}

tfh_status tfh_features_info(const tfh_feature_set* set, size_t* num_examples, size_t* num_classes,
                             size_t shape[3]) {
  return guarded([&] {
    require(set, "set");
    if (num_examples) *num_examples = set->set.size();
    if (num_classes) *num_classes = set->set.num_classes();
    if (shape) put_shape(set->set.feature_shape(), shape);
  });
}

tfh_status tfh_features_get(const tfh_feature_set* set, size_t index, float* values, size_t capacity,
                            size_t* label) {
  return guarded([&] {
    require(set, "set");
    if (index >= set->set.size())
      throw InvalidArgument("index " + std::to_string(index) + " out of range for " +
                            std::to_string(set->set.size()) + " examples");
    const auto& t = set->set.feature(index);
    if (values) {
      if (capacity < t.size())
        throw InvalidArgument("capacity " + std::to_string(capacity) + " < " + std::to_string(t.size()));
      std::copy(t.data().begin(), t.data().end(), values);
    }
    if (label) *label = set->set.label(index);
  });
}

void tfh_features_free(tfh_feature_set* set) { delete set; }

tfh_status tfh_split_classes(size_t num_classes, size_t n_base, size_t n_val, size_t n_novel, uint64_t seed,
                             size_t* base_out, size_t* val_out, size_t* novel_out) {
  return guarded([&] {
    const auto split = data::split_classes(num_classes, n_base, n_val, n_novel, seed);
    if (n_base) require(base_out, "base_out");
    if (n_val) require(val_out, "val_out");
    if (n_novel) require(novel_out, "novel_out");
    std::copy(split.base.begin(), split.base.end(), base_out);
    std::copy(split.val.begin(), split.val.end(), val_out);
    std::copy(split.novel.begin(), split.novel.end(), novel_out);
  });
}

// ---- backbone -------------------------------------------------------------

void tfh_backbone_config_default(tfh_backbone_config* cfg) {
  if (!cfg) return;
  const backbone::BackboneConfig d;
  put_shape(d.image_shape, cfg->image_shape);
  for (int i = 0; i < 3; ++i) cfg->widths[i] = d.widths[i];
  put_shape(d.feature_shape, cfg->feature_shape);
  cfg->num_classes = d.num_classes;
}

void tfh_train_config_default(tfh_train_config* cfg) {
  if (cfg) from_core(backbone::TrainConfig{}, *cfg);
}

void tfh_distill_config_default(tfh_distill_config* cfg) {
  if (!cfg) return;
  const backbone::DistillConfig d;
  cfg->alpha = d.alpha;
  cfg->beta = d.beta;
  cfg->temperature = d.temperature;
  cfg->init_from_teacher = d.init_from_teacher ? 1 : 0;
  from_core(d.train, cfg->train);
}

tfh_status tfh_backbone_train(const tfh_feature_set* images, const tfh_backbone_config* cfg,
                              const tfh_train_config* train, uint64_t seed, tfh_backbone** out,
                              double* final_accuracy) {
  return guarded([&] {
    require(images, "images");
    require(cfg, "cfg");
    require(train, "train");
    require(out, "out");
    backbone::TrainHistory history;
    auto model = backbone::train_backbone_ce(images->set, to_core(*cfg), to_core(*train), seed, &history);
    if (final_accuracy) *final_accuracy = history.epoch_accuracy.empty() ? 0.0 : history.epoch_accuracy.back();
    emit_handle(out, std::move(model));
  });
}

tfh_status tfh_backbone_distill(const tfh_backbone* teacher, const tfh_feature_set* images,
                                const tfh_distill_config* cfg, uint64_t seed, tfh_backbone** out,
                                double* final_accuracy) {
  return guarded([&] {
    require(teacher, "teacher");
    require(images, "images");
    require(cfg, "cfg");
    require(out, "out");
    backbone::DistillConfig d;
    d.alpha = cfg->alpha;
    d.beta = cfg->beta;
    d.temperature = cfg->temperature;
    d.init_from_teacher = cfg->init_from_teacher != 0;
    d.train = to_core(cfg->train);
    backbone::TrainHistory history;
    auto model = backbone::distill_backbone(teacher->model, images->set, d, seed, &history);
    if (final_accuracy) *final_accuracy = history.epoch_accuracy.empty() ? 0.0 : history.epoch_accuracy.back();
    emit_handle(out, std::move(model));
  });
}

tfh_status tfh_backbone_extract(const tfh_backbone* model, const tfh_feature_set* images, unsigned threads,
                                tfh_feature_set** out) {
  return guarded([&] {
    require(model, "model");
    require(images, "images");
    require(out, "out");
    emit_handle(out, backbone::extract_features(model->model, images->set, threads == 0 ? 1 : threads));
  });
}

tfh_status tfh_backbone_accuracy(const tfh_backbone* model, const tfh_feature_set* images, double* accuracy) {
  return guarded([&] {
    require(model, "model");
    require(images, "images");
    require(accuracy, "accuracy");
    *accuracy = backbone::classification_accuracy(model->model, images->set);
  });
}

tfh_status tfh_backbone_get_config(const tfh_backbone* model, tfh_backbone_config* cfg) {
  return guarded([&] {
    require(model, "model");
    require(cfg, "cfg");
    const auto& c = model->model.config();
    put_shape(c.image_shape, cfg->image_shape);
    for (int i = 0; i < 3; ++i) cfg->widths[i] = c.widths[i];
    put_shape(c.feature_shape, cfg->feature_shape);
    cfg->num_classes = c.num_classes;
  });
}

tfh_status tfh_backbone_save(const tfh_backbone* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    model->model.save(path);
  });
}

tfh_status tfh_backbone_load(const char* path, tfh_backbone** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    emit_handle(out, backbone::BackboneModel::load(path));
  });
}

void tfh_backbone_free(tfh_backbone* model) { delete model; }

// ---- hallucinator ---------------------------------------------------------

tfh_status tfh_hallucinator_config_preset(const char* name, tfh_hallucinator_config* cfg) {
  return guarded([&] {
    require(name, "name");
    require(cfg, "cfg");
    const std::string n = name;
    hallucinator::HallucinatorConfig h;
    if (n == "desk") h = hallucinator::HallucinatorConfig::desk();
    else if (n == "large") h = hallucinator::HallucinatorConfig::large();
    else if (n == "small_backbone") h = hallucinator::HallucinatorConfig::small_backbone();
    else if (n == "vector") h = hallucinator::HallucinatorConfig::vector(hallucinator::HallucinatorConfig::desk().feature_shape);
    else throw InvalidArgument("unknown preset '" + n + "' (expected desk, large, small_backbone or vector)");
    from_core(h, *cfg);
  });
}

void tfh_meta_train_config_default(tfh_meta_train_config* cfg) {
  if (!cfg) return;
  const hallucinator::MetaTrainConfig d;
  cfg->n_way = d.n_way;
  cfg->k_shot = d.k_shot;
  cfg->generated_per_class = d.generated_per_class;
  cfg->episodes_per_epoch = d.episodes_per_epoch;
  cfg->epochs = d.epochs;
  cfg->learning_rate = d.adam.learning_rate;
  cfg->beta1 = d.adam.beta1;
  cfg->beta2 = d.adam.beta2;
  cfg->epsilon = d.adam.epsilon;
  cfg->lr_decay_every = d.lr_decay_every;
  cfg->lr_decay_factor = d.lr_decay_factor;
}

void tfh_fine_tune_config_default(tfh_fine_tune_config* cfg) {
  if (cfg) from_core(hallucinator::FineTuneConfig{}, *cfg);
}

tfh_status tfh_hallucinator_config_validate(const tfh_hallucinator_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    to_core(*cfg).validate();
  });
}

tfh_status tfh_hallucinator_create(const tfh_hallucinator_config* cfg, uint64_t init_seed,
                                   tfh_hallucinator** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    emit_handle(out, hallucinator::HallucinatorModel(to_core(*cfg), init_seed));
  });
}

tfh_status tfh_hallucinator_meta_train(const tfh_feature_set* base, const tfh_hallucinator_config* cfg,
                                       const tfh_meta_train_config* train, uint64_t seed, tfh_hallucinator** out,
                                       double* epoch_losses) {
  return guarded([&] {
    require(base, "base");
    require(cfg, "cfg");
    require(train, "train");
    require(out, "out");
    hallucinator::MetaTrainHistory history;
    auto model = hallucinator::meta_train(base->set, to_core(*cfg), to_core(*train), seed, &history);
    copy_losses(history.epoch_loss, epoch_losses);
    emit_handle(out, std::move(model));
  });
}

tfh_status tfh_hallucinator_continue(tfh_hallucinator* model, const tfh_feature_set* base,
                                     const tfh_meta_train_config* train, uint64_t seed, double* epoch_losses) {
  return guarded([&] {
    require(model, "model");
    require(base, "base");
    require(train, "train");
    hallucinator::MetaTrainHistory history;
    hallucinator::HallucinatorModel copy = model->model;
    hallucinator::meta_train(copy, base->set, to_core(*train), seed, &history);
    model->model = std::move(copy);
    copy_losses(history.epoch_loss, epoch_losses);
  });
}

tfh_status tfh_hallucinator_fine_tune(const tfh_hallucinator* model, const tfh_feature_set* support,
                                      const tfh_fine_tune_config* cfg, uint64_t seed, tfh_hallucinator** out) {
  return guarded([&] {
    require(model, "model");
    require(support, "support");
    require(cfg, "cfg");
    require(out, "out");
    model->model.check_feature_shape(support->set.feature_shape());
    emit_handle(out, hallucinator::fine_tune(model->model, per_class(support->set), to_core(*cfg), seed));
  });
}

tfh_status tfh_hallucinator_support_loss(const tfh_hallucinator* model, const tfh_feature_set* support,
                                         size_t generated_per_class, uint64_t seed, double* loss) {
  return guarded([&] {
    require(model, "model");
    require(support, "support");
    require(loss, "loss");
    model->model.check_feature_shape(support->set.feature_shape());
    *loss = hallucinator::support_reconstruction_loss(model->model, per_class(support->set),
                                                      generated_per_class, seed);
  });
}

tfh_status tfh_hallucinator_get_config(const tfh_hallucinator* model, tfh_hallucinator_config* cfg) {
  return guarded([&] {
    require(model, "model");
    require(cfg, "cfg");
    from_core(model->model.config(), *cfg);
  });
}

tfh_status tfh_hallucinator_check_features(const tfh_hallucinator* model, const tfh_feature_set* set) {
  return guarded([&] {
    require(model, "model");
    require(set, "set");
    model->model.check_feature_shape(set->set.feature_shape());
  });
}

tfh_status tfh_hallucinator_save(const tfh_hallucinator* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    model->model.save(path);
  });
}

tfh_status tfh_hallucinator_load(const char* path, tfh_hallucinator** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    emit_handle(out, hallucinator::HallucinatorModel::load(path));
  });
}

void tfh_hallucinator_free(tfh_hallucinator* model) { delete model; }

// ---- evaluation -----------------------------------------------------------

void tfh_eval_config_default(tfh_eval_config* cfg) {
  if (!cfg) return;
  const eval::EvalArgs d;
  cfg->classifier = TFH_CLASSIFIER_PROTOTYPE;
  cfg->n_way = d.n_way;
  cfg->k_shot = d.k_shot;
  cfg->queries_per_class = d.queries_per_class;
  cfg->generated_per_class = d.generated_per_class;
  cfg->tasks = d.tasks;
  cfg->fine_tune = 0;
  from_core(hallucinator::FineTuneConfig{}, cfg->fine_tune_config);
  cfg->seed = d.seed;
  cfg->threads = d.threads;
  cfg->l2 = d.linear.l2;
  cfg->max_steps = d.linear.max_steps;
  cfg->learning_rate = d.linear.learning_rate;
  cfg->decay = d.linear.decay;
  cfg->tolerance = d.linear.tolerance;
}

tfh_status tfh_parse_classifier(const char* name, tfh_classifier* out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    switch (eval::parse_classifier(name)) {
      case eval::ClassifierKind::kPrototype: *out = TFH_CLASSIFIER_PROTOTYPE; break;
      case eval::ClassifierKind::kLogistic: *out = TFH_CLASSIFIER_LOGISTIC; break;
      case eval::ClassifierKind::kSvm: *out = TFH_CLASSIFIER_SVM; break;
    }
  });
}

tfh_status tfh_evaluate(const tfh_feature_set* novel, const tfh_hallucinator* model, const tfh_eval_config* cfg,
                        tfh_report** out) {
  return guarded([&] {
    require(novel, "novel");
    require(cfg, "cfg");
    require(out, "out");
    *out = new tfh_report(eval::evaluate(novel->set, model ? &model->model : nullptr, to_core(*cfg)));
  });
}

tfh_status tfh_sweep_generated(const tfh_feature_set* novel, const tfh_hallucinator* model,
                               const tfh_eval_config* cfg, const size_t* counts, size_t n, tfh_report** out) {
  return guarded([&] {
    require(novel, "novel");
    require(cfg, "cfg");
    require(out, "out");
    if (n > 0) require(counts, "counts");
    const std::vector<std::size_t> ms(counts, counts + n);
    auto reports = eval::sweep_generated(ms, novel->set, model ? &model->model : nullptr, to_core(*cfg));
    std::vector<std::unique_ptr<tfh_report>> owned;
    for (auto& r : reports) owned.push_back(std::make_unique<tfh_report>(std::move(r)));
    for (std::size_t i = 0; i < n; ++i) out[i] = owned[i].release();
  });
}

tfh_status tfh_cross_domain(const tfh_hallucinator* model, const tfh_feature_set* target,
                            const tfh_eval_config* cfg, const char* source_name, const char* target_name,
                            tfh_report** out) {
  return guarded([&] {
    require(target, "target");
    require(cfg, "cfg");
    require(out, "out");
    *out = new tfh_report(eval::cross_domain_evaluate(model ? &model->model : nullptr, target->set,
                                                      to_core(*cfg), source_name ? source_name : "",
                                                      target_name ? target_name : ""));
  });
}

tfh_status tfh_export_features(const tfh_feature_set* novel, const tfh_hallucinator* model,
                               const tfh_eval_config* cfg, size_t task_index, const char* path, size_t* rows) {
  return guarded([&] {
    require(novel, "novel");
    require(cfg, "cfg");
    require(path, "path");
    const auto args = to_core(*cfg);
    args.validate();
    if (!model && args.generated_per_class > 0)
      throw ConfigError("generated_per_class = " + std::to_string(args.generated_per_class) +
                        " requires a hallucinator model");
    if (model) model->model.check_feature_shape(novel->set.feature_shape());
    const auto outcome = eval::run_task(novel->set, model ? &model->model : nullptr, args, task_index);
    std::vector<eval::LabeledQuery> queries;
    for (std::size_t j = 0; j < outcome.episode.query.size(); ++j)
      for (auto idx : outcome.episode.query[j])
        queries.push_back({outcome.episode.class_ids[j], novel->set.feature(idx)});
    const std::string csv = eval::export_features_csv(outcome.support, queries);
    write_file_atomic(path, csv);
    if (rows) {
      std::size_t n = 0;
      for (char c : csv) n += c == '\n';
      *rows = n - 1;
    }
  });
}

const char* tfh_report_json(const tfh_report* report) { return report ? report->json.c_str() : ""; }
const char* tfh_report_fingerprint(const tfh_report* report) { return report ? report->fingerprint.c_str() : ""; }
const char* tfh_report_csv_row(const tfh_report* report) { return report ? report->csv.c_str() : ""; }

const char* tfh_report_csv_header(void) {
  static const std::string header = eval::EvalReport::csv_header();
  return header.c_str();
}

double tfh_report_mean(const tfh_report* report) { return report ? report->report.mean_accuracy : 0.0; }
double tfh_report_ci95(const tfh_report* report) { return report ? report->report.ci95 : 0.0; }
size_t tfh_report_task_count(const tfh_report* report) { return report ? report->report.task_count : 0; }

tfh_status tfh_report_from_json(const char* text, tfh_report** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new tfh_report(eval::EvalReport::from_json(text));
  });
}

tfh_status tfh_report_write_json(const tfh_report* report, const char* path) {
  return guarded([&] {
    require(report, "report");
    require(path, "path");
    write_file_atomic(path, report->json);
  });
}

tfh_status tfh_reports_write_csv(const tfh_report* const* reports, size_t n, const char* path) {
  return guarded([&] {
    require(path, "path");
    if (n > 0) require(reports, "reports");
    std::string text = eval::EvalReport::csv_header() + "\n";
    for (std::size_t i = 0; i < n; ++i) {
      require(reports[i], "reports[i]");
      text += reports[i]->csv + "\n";
    }
    write_file_atomic(path, text);
  });
}

void tfh_report_free(tfh_report* report) { delete report; }

// ---- validation -----------------------------------------------------------

tfh_status tfh_synthetic_spec_validate(const tfh_synthetic_spec* spec) {
  return guarded([&] {
    require(spec, "spec");
    data::SyntheticFeatureSpec s;
    s.num_classes = spec->num_classes;
    s.examples_per_class = spec->examples_per_class;
    s.shape = shape3(spec->shape);
    s.noise_std = spec->noise_std;
    s.center_offset = spec->center_offset;
    s.center_rank = spec->center_rank;
    s.channel_share = spec->channel_share;
    s.validate();
  });
}

tfh_status tfh_image_spec_validate(const tfh_image_spec* spec) {
  return guarded([&] {
    require(spec, "spec");
    backbone::SyntheticImageSpec s;
    s.num_classes = spec->num_classes;
    s.examples_per_class = spec->examples_per_class;
    s.image_shape = shape3(spec->shape);
    s.noise_std = spec->noise_std;
    s.validate();
  });
}

tfh_status tfh_backbone_config_validate(const tfh_backbone_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    to_core(*cfg).validate();
  });
}

tfh_status tfh_train_config_validate(const tfh_train_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    to_core(*cfg).validate();
  });
}

tfh_status tfh_distill_config_validate(const tfh_distill_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    backbone::DistillConfig d;
    d.alpha = cfg->alpha;
    d.beta = cfg->beta;
    d.temperature = cfg->temperature;
    d.train = to_core(cfg->train);
    d.validate();
  });
}

tfh_status tfh_meta_train_config_validate(const tfh_meta_train_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    to_core(*cfg).validate();
  });
}

tfh_status tfh_fine_tune_config_validate(const tfh_fine_tune_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    to_core(*cfg).validate();
  });
}

tfh_status tfh_eval_config_validate(const tfh_eval_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    to_core(*cfg).validate();
  });
}

tfh_status tfh_write_text_file(const char* path, const char* text) {
  return guarded([&] {
    require(path, "path");
    require(text, "text");
    write_file_atomic(path, std::string_view(text));
  });
}

}  // extern "C"
