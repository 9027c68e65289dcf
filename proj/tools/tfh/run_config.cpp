#include "run_config.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace tfh::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct CommandInfo {
  Command command;
  const char* name;
};

constexpr CommandInfo kCommands[] = {
    {Command::kGenSynthetic, "gen-synthetic"},
    {Command::kTrainBackbone, "train-backbone"},
    {Command::kDistill, "distill"},
    {Command::kExtractFeatures, "extract-features"},
    {Command::kTrainHallucinator, "train-hallucinator"},
    {Command::kFineTune, "fine-tune"},
    {Command::kEvaluate, "evaluate"},
    {Command::kSweepM, "sweep-m"},
    {Command::kCrossDomain, "cross-domain"},
    {Command::kExportFeatures, "export-features"},
    {Command::kPrintConfig, "print-config"},
};

const char* type_of(const json& v) {
  if (v.is_null()) return "null";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_unsigned()) return "non-negative integer";
  if (v.is_number_integer()) return "negative integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  return "object";
}

double tidy(float v) {
  char buf[32];
  for (int digits = 6; digits <= 9; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, static_cast<double>(v));
    if (static_cast<float>(std::strtod(buf, nullptr)) == v) break;
  }
  return std::strtod(buf, nullptr);
}

const char* variant_label(tfh_variant v) { return v == TFH_VARIANT_VECTOR ? "vector" : "tensor"; }

/// Reads JSON into the config. Each section collects the keys it knows so
/// that anything left over is reported.
class Reader {
 public:
  Reader(const json& node, std::string prefix, std::vector<std::string>& problems)
      : node_(node), prefix_(std::move(prefix)), problems_(problems) {}

  bool has(const char* key) const { return node_.contains(key); }

  bool field(const char* key, std::size_t& dst) {
    const json* v = take(key);
    if (!v) return false;
    if (!v->is_number_unsigned()) return mismatch(key, "non-negative integer", *v);
    dst = v->get<std::size_t>();
    return true;
  }
  bool field(const char* key, unsigned& dst) {
    const json* v = take(key);
    if (!v) return false;
    if (!v->is_number_unsigned() || v->get<std::uint64_t>() > 0xffffffffULL)
      return mismatch(key, "non-negative 32-bit integer", *v);
    dst = v->get<unsigned>();
    return true;
  }
  bool field(const char* key, float& dst) {
    const json* v = take(key);
    if (!v) return false;
    if (!v->is_number()) return mismatch(key, "number", *v);
    dst = v->get<float>();
    return true;
  }
  bool field(const char* key, double& dst) {
    const json* v = take(key);
    if (!v) return false;
    if (!v->is_number()) return mismatch(key, "number", *v);
    dst = v->get<double>();
    return true;
  }
  bool field(const char* key, bool& dst) {
    const json* v = take(key);
    if (!v) return false;
    if (!v->is_boolean()) return mismatch(key, "boolean", *v);
    dst = v->get<bool>();
    return true;
  }
  bool flag(const char* key, int& dst) {
    bool b = dst != 0;
    const bool found = field(key, b);
    dst = b ? 1 : 0;
    return found;
  }
  bool field(const char* key, std::string& dst) {
    const json* v = take(key);
    if (!v) return false;
    if (!v->is_string()) return mismatch(key, "string", *v);
    dst = v->get<std::string>();
    return true;
  }
  bool field(const char* key, std::vector<std::size_t>& dst) {
    const json* v = take(key);
    if (!v) return false;
    if (!v->is_array()) return mismatch(key, "array of non-negative integers", *v);
    std::vector<std::size_t> out;
    for (const auto& e : *v) {
      if (!e.is_number_unsigned()) return mismatch(key, "array of non-negative integers", *v);
      out.push_back(e.get<std::size_t>());
    }
    dst = std::move(out);
    return true;
  }
  bool field(const char* key, std::size_t (&dst)[3]) {
    const json* v = take(key);
    if (!v) return false;
    bool ok = v->is_array() && v->size() == 3;
    if (ok)
      for (const auto& e : *v) ok = ok && e.is_number_unsigned();
    if (!ok) return mismatch(key, "array of 3 non-negative integers", *v);
    for (int i = 0; i < 3; ++i) dst[i] = (*v)[i].get<std::size_t>();
    return true;
  }
  bool field(const char* key, tfh_variant& dst) {
    std::string name = variant_label(dst);
    if (!field(key, name)) return false;
    if (name == "tensor") dst = TFH_VARIANT_TENSOR;
    else if (name == "vector") dst = TFH_VARIANT_VECTOR;
    else problems_.push_back(path(key) + ": expected \"tensor\" or \"vector\", got \"" + name + "\"");
    return true;
  }

  void section(const char* key, const std::function<void(Reader&)>& body) {
    const json* v = take(key);
    if (!v) {
      static const json empty = json::object();
      Reader sub(empty, path(key), problems_);
      body(sub);
      return;
    }
    if (!v->is_object()) {
      mismatch(key, "object", *v);
      return;
    }
    Reader sub(*v, path(key), problems_);
    body(sub);
    sub.finish();
  }

  void hook(const std::function<void()>& fn) { fn(); }

  void finish() {
    if (!node_.is_object()) return;
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) problems_.push_back("unknown key '" + path(it.key().c_str()) + "'");
  }

 private:
  std::string path(const char* key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json* take(const char* key) {
    seen_.insert(key);
    if (!node_.is_object()) return nullptr;
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  bool mismatch(const char* key, const char* expected, const json& got) {
    problems_.push_back(path(key) + ": expected " + expected + ", got " + type_of(got));
    return true;
  }

  const json& node_;
  std::string prefix_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

/// Writes the config as ordered JSON, mirroring Reader key for key.
class Writer {
 public:
  explicit Writer(ordered_json& out) : out_(out) {}

  bool has(const char*) const { return true; }
  bool field(const char* key, const std::size_t& v) { return put(key, v); }
  bool field(const char* key, const unsigned& v) { return put(key, v); }
  bool field(const char* key, const float& v) { return put(key, tidy(v)); }
  bool field(const char* key, const double& v) { return put(key, v); }
  bool field(const char* key, const bool& v) { return put(key, v); }
  bool flag(const char* key, const int& v) { return put(key, v != 0); }
  bool field(const char* key, const std::string& v) { return put(key, v); }
  bool field(const char* key, const std::vector<std::size_t>& v) { return put(key, v); }
  bool field(const char* key, const std::size_t (&v)[3]) { return put(key, std::vector<std::size_t>{v[0], v[1], v[2]}); }
  bool field(const char* key, const tfh_variant& v) { return put(key, variant_label(v)); }

  void section(const char* key, const std::function<void(Writer&)>& body) {
    ordered_json sub = ordered_json::object();
    Writer w(sub);
    body(w);
    out_[key] = std::move(sub);
  }

  void hook(const std::function<void()>&) {}

 private:
  template <typename T>
  bool put(const char* key, const T& v) {
    out_[key] = v;
    return true;
  }
  ordered_json& out_;
};

void apply_preset(RunConfig& c, std::vector<std::string>& problems) {
  if (tfh_hallucinator_config_preset(c.hallucinator_preset.c_str(), &c.hallucinator) != TFH_OK)
    problems.push_back("hallucinator.preset: " + std::string(tfh_last_error_message()));
}

template <typename V, typename C>
void visit(C& c, V& v, std::vector<std::string>* problems) {
  v.field("seed", c.seed);
  v.field("threads", c.threads);
  v.field("normalize_features", c.normalize_features);
  v.section("paths", [&](V& s) {
    s.field("out", c.paths.out);
    s.field("features", c.paths.features);
    s.field("images", c.paths.images);
    s.field("backbone", c.paths.backbone);
    s.field("teacher", c.paths.teacher);
    s.field("model", c.paths.model);
    s.field("target", c.paths.target);
    s.field("base_out", c.paths.base_out);
    s.field("val_out", c.paths.val_out);
    s.field("novel_out", c.paths.novel_out);
    s.field("images_out", c.paths.images_out);
  });
  v.section("synthetic", [&](V& s) {
    s.field("num_classes", c.synthetic.num_classes);
    s.field("examples_per_class", c.synthetic.examples_per_class);
    s.field("shape", c.synthetic.shape);
    s.field("center_seed", c.synthetic.center_seed);
    s.field("noise_std", c.synthetic.noise_std);
    s.flag("clip_to_unit", c.synthetic.clip_to_unit);
    s.field("center_offset", c.synthetic.center_offset);
    s.field("center_rank", c.synthetic.center_rank);
    s.field("channel_share", c.synthetic.channel_share);
  });
  v.section("images", [&](V& s) {
    s.field("num_classes", c.images.num_classes);
    s.field("examples_per_class", c.images.examples_per_class);
    s.field("shape", c.images.shape);
    s.field("template_seed", c.images.template_seed);
    s.field("noise_std", c.images.noise_std);
  });
  v.section("split", [&](V& s) {
    s.field("base_classes", c.split.base_classes);
    s.field("val_classes", c.split.val_classes);
    s.field("novel_classes", c.split.novel_classes);
    s.field("n_base", c.split.n_base);
    s.field("n_val", c.split.n_val);
    s.field("n_novel", c.split.n_novel);
  });
  v.section("backbone", [&](V& s) {
    s.field("image_shape", c.backbone.image_shape);
    s.field("widths", c.backbone.widths);
    s.field("feature_shape", c.backbone.feature_shape);
    s.field("num_classes", c.backbone.num_classes);
  });
  auto train_fields = [](V& s, auto& t) {
    s.field("epochs", t.epochs);
    s.field("batch_size", t.batch_size);
    s.field("learning_rate", t.learning_rate);
    s.field("momentum", t.momentum);
    s.field("weight_decay", t.weight_decay);
    s.field("augment_noise_std", t.augment_noise_std);
    s.field("grad_clip_norm", t.grad_clip_norm);
  };
  v.section("train", [&](V& s) { train_fields(s, c.train); });
  v.section("distill", [&](V& s) {
    s.field("alpha", c.distill.alpha);
    s.field("beta", c.distill.beta);
    s.field("temperature", c.distill.temperature);
    s.flag("init_from_teacher", c.distill.init_from_teacher);
    train_fields(s, c.distill.train);
  });
  v.section("hallucinator", [&](V& s) {
    s.field("preset", c.hallucinator_preset);
    if constexpr (!std::is_const_v<C>) s.hook([&] { apply_preset(c, *problems); });
    s.field("variant", c.hallucinator.variant);
    if (s.field("feature_shape", c.hallucinator.feature_shape)) {
      if constexpr (!std::is_const_v<C>) c.feature_shape_given = true;
    }
    s.field("cond_dim", c.hallucinator.cond_dim);
    s.field("latent_dim", c.hallucinator.latent_dim);
    s.field("generator_layers", c.hallucinator.generator_layers);
    s.flag("final_sigmoid", c.hallucinator.final_sigmoid);
    s.field("conditioner_width", c.hallucinator.conditioner_width);
    s.field("conditioner_bottleneck", c.hallucinator.conditioner_bottleneck);
    s.field("generator_width", c.hallucinator.generator_width);
    s.field("vector_hidden", c.hallucinator.vector_hidden);
  });
  v.section("meta_train", [&](V& s) {
    s.field("n_way", c.meta_train.n_way);
    s.field("k_shot", c.meta_train.k_shot);
    s.field("generated_per_class", c.meta_train.generated_per_class);
    s.field("episodes_per_epoch", c.meta_train.episodes_per_epoch);
    s.field("epochs", c.meta_train.epochs);
    s.field("learning_rate", c.meta_train.learning_rate);
    s.field("beta1", c.meta_train.beta1);
    s.field("beta2", c.meta_train.beta2);
    s.field("epsilon", c.meta_train.epsilon);
    s.field("lr_decay_every", c.meta_train.lr_decay_every);
    s.field("lr_decay_factor", c.meta_train.lr_decay_factor);
  });
  v.section("fine_tune", [&](V& s) {
    s.field("enabled", c.fine_tune_enabled);
    s.field("steps", c.fine_tune.steps);
    s.field("learning_rate", c.fine_tune.learning_rate);
    s.field("generated_per_step", c.fine_tune.generated_per_step);
  });
  v.section("eval", [&](V& s) {
    s.field("classifier", c.classifier);
    s.field("n_way", c.eval.n_way);
    s.field("k_shot", c.eval.k_shot);
    s.field("queries_per_class", c.eval.queries_per_class);
    s.field("generated_per_class", c.eval.generated_per_class);
    s.field("tasks", c.eval.tasks);
    s.field("counts", c.counts);
    s.field("task_index", c.task_index);
    s.section("linear", [&](V& l) {
      l.field("l2", c.eval.l2);
      l.field("max_steps", c.eval.max_steps);
      l.field("learning_rate", c.eval.learning_rate);
      l.field("decay", c.eval.decay);
      l.field("tolerance", c.eval.tolerance);
    });
  });
  v.section("cross_domain", [&](V& s) {
    s.field("source_name", c.cross_domain.source_name);
    s.field("target_name", c.cross_domain.target_name);
  });
}

/// Appends the problems of a failed C API validator, prefixed by section.
void collect(tfh_status status, const std::string& section, std::vector<std::string>& problems) {
  if (status == TFH_OK) return;
  const json err = json::parse(tfh_last_error_json(), nullptr, false);
  if (err.is_object() && err.contains("problems") && err["problems"].is_array()) {
    for (const auto& p : err["problems"]) problems.push_back(section + ": " + p.get<std::string>());
  } else {
    problems.push_back(section + ": " + tfh_last_error_message());
  }
}

void require_input(const std::string& path, const char* key, Command cmd, std::vector<std::string>& problems) {
  if (path.empty()) {
    problems.push_back(std::string("paths.") + key + " is required for " + command_name(cmd));
  } else if (!std::filesystem::exists(path)) {
    problems.push_back(std::string("paths.") + key + ": input file does not exist: " + path);
  }
}

void optional_input(const std::string& path, const char* key, std::vector<std::string>& problems) {
  if (!path.empty() && !std::filesystem::exists(path))
    problems.push_back(std::string("paths.") + key + ": input file does not exist: " + path);
}

void check_split(const RunConfig& c, std::vector<std::string>& problems) {
  const auto& s = c.split;
  const std::size_t n = c.synthetic.num_classes;
  const bool lists = !s.base_classes.empty() || !s.val_classes.empty() || !s.novel_classes.empty();
  if (lists) {
    std::set<std::size_t> seen;
    for (const auto* group : {&s.base_classes, &s.val_classes, &s.novel_classes}) {
      for (auto id : *group) {
        if (id >= n) problems.push_back("split: class " + std::to_string(id) + " out of range for " +
                                        std::to_string(n) + " classes");
        else if (!seen.insert(id).second)
          problems.push_back("split: class " + std::to_string(id) + " listed more than once");
      }
    }
  } else if (s.n_base + s.n_val + s.n_novel > 0 && s.n_base + s.n_val + s.n_novel != n) {
    problems.push_back("split: n_base + n_val + n_novel = " + std::to_string(s.n_base + s.n_val + s.n_novel) +
                       " must equal synthetic.num_classes = " + std::to_string(n));
  }
}

void validate(RunConfig& c, Command cmd, std::vector<std::string>& problems) {
  c.eval.seed = c.seed;
  c.eval.threads = c.threads;
  c.eval.fine_tune = c.fine_tune_enabled ? 1 : 0;
  c.eval.fine_tune_config = c.fine_tune;
  if (tfh_parse_classifier(c.classifier.c_str(), &c.eval.classifier) != TFH_OK)
    problems.push_back("eval.classifier: " + std::string(tfh_last_error_message()));
  if (c.threads < 1) problems.push_back("threads must be >= 1");

  collect(tfh_synthetic_spec_validate(&c.synthetic), "synthetic", problems);
  collect(tfh_image_spec_validate(&c.images), "images", problems);
  collect(tfh_train_config_validate(&c.train), "train", problems);
  collect(tfh_distill_config_validate(&c.distill), "distill", problems);
  collect(tfh_meta_train_config_validate(&c.meta_train), "meta_train", problems);
  collect(tfh_fine_tune_config_validate(&c.fine_tune), "fine_tune", problems);
  collect(tfh_eval_config_validate(&c.eval), "eval", problems);
  if (cmd == Command::kTrainBackbone || cmd == Command::kDistill)
    collect(tfh_backbone_config_validate(&c.backbone), "backbone", problems);
  if (cmd == Command::kTrainHallucinator && c.feature_shape_given)
    collect(tfh_hallucinator_config_validate(&c.hallucinator), "hallucinator", problems);

  const auto out_required = [&] {
    if (c.paths.out.empty()) problems.push_back(std::string("paths.out is required for ") + command_name(cmd));
  };
  switch (cmd) {
    case Command::kGenSynthetic:
      if (c.paths.out.empty() && c.paths.base_out.empty() && c.paths.val_out.empty() &&
          c.paths.novel_out.empty() && c.paths.images_out.empty())
        problems.push_back("gen-synthetic needs at least one of paths.out, paths.base_out, paths.val_out, "
                           "paths.novel_out, paths.images_out");
      check_split(c, problems);
      break;
    case Command::kTrainBackbone:
      require_input(c.paths.images, "images", cmd, problems);
      out_required();
      break;
    case Command::kDistill:
      require_input(c.paths.teacher, "teacher", cmd, problems);
      require_input(c.paths.images, "images", cmd, problems);
      out_required();
      break;
    case Command::kExtractFeatures:
      require_input(c.paths.backbone, "backbone", cmd, problems);
      require_input(c.paths.images, "images", cmd, problems);
      out_required();
      break;
    case Command::kTrainHallucinator:
      require_input(c.paths.features, "features", cmd, problems);
      optional_input(c.paths.model, "model", problems);
      out_required();
      break;
    case Command::kFineTune:
      require_input(c.paths.model, "model", cmd, problems);
      require_input(c.paths.features, "features", cmd, problems);
      out_required();
      break;
    case Command::kEvaluate:
    case Command::kSweepM:
    case Command::kExportFeatures:
      require_input(c.paths.features, "features", cmd, problems);
      optional_input(c.paths.model, "model", problems);
      out_required();
      if (cmd == Command::kSweepM && c.counts.empty()) problems.push_back("eval.counts must not be empty");
      if (cmd == Command::kSweepM && c.paths.model.empty())
        for (auto m : c.counts)
          if (m > 0) {
            problems.push_back("eval.counts contains M > 0, which requires paths.model");
            break;
          }
      if (cmd != Command::kSweepM && c.paths.model.empty() && c.eval.generated_per_class > 0)
        problems.push_back("eval.generated_per_class = " + std::to_string(c.eval.generated_per_class) +
                           " requires paths.model");
      break;
    case Command::kCrossDomain:
      require_input(c.paths.model, "model", cmd, problems);
      require_input(c.paths.target, "target", cmd, problems);
      out_required();
      break;
    case Command::kPrintConfig:
      break;
  }
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "; " : "") + items[i];
  return out;
}

}  // namespace

const char* command_name(Command c) {
  for (const auto& info : kCommands)
    if (info.command == c) return info.name;
  return "unknown";
}

std::optional<Command> parse_command(const std::string& name) {
  for (const auto& info : kCommands)
    if (name == info.name) return info.command;
  return std::nullopt;
}

RunConfig::RunConfig() {
  tfh_synthetic_spec_default(&synthetic);
  tfh_image_spec_default(&images);
  tfh_backbone_config_default(&backbone);
  tfh_train_config_default(&train);
  tfh_distill_config_default(&distill);
  tfh_hallucinator_config_preset(hallucinator_preset.c_str(), &hallucinator);
  tfh_meta_train_config_default(&meta_train);
  tfh_fine_tune_config_default(&fine_tune);
  tfh_eval_config_default(&eval);
}

ordered_json RunConfig::to_json() const {
  ordered_json out = ordered_json::object();
  Writer w(out);
  visit(*this, w, nullptr);
  return out;
}

std::string RunConfig::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

ConfigProblems::ConfigProblems(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

json read_config_text(const std::string& text, const std::string& origin) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw ConfigProblems({origin + ": top level must be a JSON object"});
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigProblems({origin + ": invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what()});
  }
}

json read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigProblems({"cannot read config file: " + path});
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_config_text(ss.str(), path);
}

void apply_overrides(json& root, const std::vector<Override>& overrides) {
  for (const auto& o : overrides) {
    json value;
    if (o.is_string) {
      value = o.value;
    } else {
      std::string text = o.value;
      if (text.find(',') != std::string::npos && text.front() != '[') text = "[" + text + "]";
      value = json::parse(text, nullptr, false);
      if (value.is_discarded()) value = o.value;
    }
    root[json::json_pointer(o.pointer)] = std::move(value);
  }
}

RunConfig parse_config(const json& root, Command command) {
  std::vector<std::string> problems;
  RunConfig c;
  if (!root.is_object()) throw ConfigProblems({"configuration must be a JSON object"});
  Reader r(root, "", problems);
  visit(c, r, &problems);
  r.finish();
  validate(c, command, problems);
  if (!problems.empty()) throw ConfigProblems(std::move(problems));
  return c;
}

RunConfig load_run_config(const std::string& config_path, const std::vector<Override>& overrides,
                          Command command) {
  json root = config_path.empty() ? json::object() : read_config_file(config_path);
  apply_overrides(root, overrides);
  return parse_config(root, command);
}

}  // namespace tfh::cli
