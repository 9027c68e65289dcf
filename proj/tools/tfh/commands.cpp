#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

namespace tfh::cli {

namespace {

using nlohmann::json;

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using FeatureSet = std::unique_ptr<tfh_feature_set, Deleter<tfh_feature_set, tfh_features_free>>;
using Backbone = std::unique_ptr<tfh_backbone, Deleter<tfh_backbone, tfh_backbone_free>>;
using Hallucinator = std::unique_ptr<tfh_hallucinator, Deleter<tfh_hallucinator, tfh_hallucinator_free>>;
using Report = std::unique_ptr<tfh_report, Deleter<tfh_report, tfh_report_free>>;

struct ApiFailure {
  tfh_status status;
  std::string json;
};

struct UsageFailure {
  std::string message;
};

void check(tfh_status status) {
  if (status != TFH_OK) throw ApiFailure{status, tfh_last_error_json()};
}

int exit_code_for(tfh_status status) {
  switch (status) {
    case TFH_ERR_CONFIG:
    case TFH_ERR_SHAPE:
    case TFH_ERR_CAPACITY:
    case TFH_ERR_INVALID_ARGUMENT:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

std::string shape_text(const size_t s[3]) {
  return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

FeatureSet load_features(const std::string& path, bool normalize) {
  tfh_feature_set* raw = nullptr;
  check(tfh_features_load(path.c_str(), &raw));
  FeatureSet set(raw);
  if (!normalize) return set;
  tfh_feature_set* norm = nullptr;
  check(tfh_features_normalize(set.get(), &norm));
  return FeatureSet(norm);
}

Hallucinator load_model(const std::string& path) {
  if (path.empty()) return nullptr;
  tfh_hallucinator* raw = nullptr;
  check(tfh_hallucinator_load(path.c_str(), &raw));
  return Hallucinator(raw);
}

void describe(std::ostream& out, const char* what, const tfh_feature_set* set, const std::string& path) {
  size_t n = 0, classes = 0, shape[3] = {0, 0, 0};
  check(tfh_features_info(set, &n, &classes, shape));
  out << "wrote " << what << ": " << n << " examples, " << classes << " classes, shape " << shape_text(shape)
      << " -> " << path << "\n";
}

void save_subset(std::ostream& out, const tfh_feature_set* all, const std::vector<std::size_t>& classes,
                 const std::string& path, const char* what) {
  if (path.empty()) return;
  if (classes.empty()) throw UsageFailure{std::string("split has no ") + what + " classes for " + path};
  tfh_feature_set* raw = nullptr;
  check(tfh_features_subset(all, classes.data(), classes.size(), &raw));
  FeatureSet subset(raw);
  check(tfh_features_save(subset.get(), path.c_str()));
  describe(out, what, subset.get(), path);
}

void gen_synthetic(const RunConfig& c, std::ostream& out) {
  const bool want_split = !c.paths.base_out.empty() || !c.paths.val_out.empty() || !c.paths.novel_out.empty();
  if (!c.paths.out.empty() || want_split) {
    tfh_feature_set* raw = nullptr;
    check(tfh_features_synthetic(&c.synthetic, &raw));
    FeatureSet all(raw);
    if (!c.paths.out.empty()) {
      check(tfh_features_save(all.get(), c.paths.out.c_str()));
      describe(out, "features", all.get(), c.paths.out);
    }
    if (want_split) {
      const std::size_t n = c.synthetic.num_classes;
      std::vector<std::size_t> base = c.split.base_classes, val = c.split.val_classes,
                               novel = c.split.novel_classes;
      if (base.empty() && val.empty() && novel.empty()) {
        if (c.split.n_base + c.split.n_val + c.split.n_novel > 0) {
          base.resize(c.split.n_base);
          val.resize(c.split.n_val);
          novel.resize(c.split.n_novel);
          check(tfh_split_classes(n, c.split.n_base, c.split.n_val, c.split.n_novel, c.seed, base.data(),
                                  val.data(), novel.data()));
        } else {
          for (std::size_t i = 0; i < n; ++i) (i < n / 2 ? base : novel).push_back(i);
        }
      }
      save_subset(out, all.get(), base, c.paths.base_out, "base");
      save_subset(out, all.get(), val, c.paths.val_out, "val");
      save_subset(out, all.get(), novel, c.paths.novel_out, "novel");
    }
  }
  if (!c.paths.images_out.empty()) {
    tfh_feature_set* raw = nullptr;
    check(tfh_images_synthetic(&c.images, &raw));
    FeatureSet images(raw);
    check(tfh_features_save(images.get(), c.paths.images_out.c_str()));
    describe(out, "images", images.get(), c.paths.images_out);
  }
}

void train_backbone(const RunConfig& c, std::ostream& out) {
  FeatureSet images = load_features(c.paths.images, false);
  tfh_backbone* raw = nullptr;
  double acc = 0;
  check(tfh_backbone_train(images.get(), &c.backbone, &c.train, c.seed, &raw, &acc));
  Backbone model(raw);
  check(tfh_backbone_save(model.get(), c.paths.out.c_str()));
  out << "backbone trained for " << c.train.epochs << " epochs, final train accuracy " << fixed(acc, 4)
      << " -> " << c.paths.out << "\n";
}

void distill(const RunConfig& c, std::ostream& out) {
  FeatureSet images = load_features(c.paths.images, false);
  tfh_backbone* teacher_raw = nullptr;
  check(tfh_backbone_load(c.paths.teacher.c_str(), &teacher_raw));
  Backbone teacher(teacher_raw);
  tfh_backbone* raw = nullptr;
  double acc = 0;
  check(tfh_backbone_distill(teacher.get(), images.get(), &c.distill, c.seed, &raw, &acc));
  Backbone student(raw);
  check(tfh_backbone_save(student.get(), c.paths.out.c_str()));
  out << "student distilled for " << c.distill.train.epochs << " epochs, final train accuracy " << fixed(acc, 4)
      << " -> " << c.paths.out << "\n";
}

void extract_features(const RunConfig& c, std::ostream& out) {
  FeatureSet images = load_features(c.paths.images, false);
  tfh_backbone* raw = nullptr;
  check(tfh_backbone_load(c.paths.backbone.c_str(), &raw));
  Backbone model(raw);
  tfh_feature_set* fraw = nullptr;
  check(tfh_backbone_extract(model.get(), images.get(), c.threads, &fraw));
  FeatureSet features(fraw);
  check(tfh_features_save(features.get(), c.paths.out.c_str()));
  describe(out, "features", features.get(), c.paths.out);
}

void train_hallucinator(const RunConfig& c, std::ostream& out) {
  FeatureSet base = load_features(c.paths.features, c.normalize_features);
  std::vector<double> losses(c.meta_train.epochs, 0.0);
  Hallucinator model;
  if (!c.paths.model.empty()) {
    model = load_model(c.paths.model);
    check(tfh_hallucinator_continue(model.get(), base.get(), &c.meta_train, c.seed, losses.data()));
  } else {
    tfh_hallucinator_config cfg = c.hallucinator;
    if (!c.feature_shape_given) check(tfh_features_info(base.get(), nullptr, nullptr, cfg.feature_shape));
    tfh_hallucinator* raw = nullptr;
    check(tfh_hallucinator_meta_train(base.get(), &cfg, &c.meta_train, c.seed, &raw, losses.data()));
    model.reset(raw);
  }
  for (std::size_t e = 0; e < losses.size(); ++e)
    out << "epoch " << e + 1 << "/" << losses.size() << " mean loss " << fixed(losses[e], 6) << "\n";
  check(tfh_hallucinator_save(model.get(), c.paths.out.c_str()));
  out << "hallucinator -> " << c.paths.out << "\n";
}

void fine_tune(const RunConfig& c, std::ostream& out) {
  FeatureSet support = load_features(c.paths.features, c.normalize_features);
  Hallucinator model = load_model(c.paths.model);
  const size_t m = c.fine_tune.generated_per_step;
  double before = 0, after = 0;
  check(tfh_hallucinator_support_loss(model.get(), support.get(), m, c.seed, &before));
  tfh_hallucinator* raw = nullptr;
  check(tfh_hallucinator_fine_tune(model.get(), support.get(), &c.fine_tune, c.seed, &raw));
  Hallucinator tuned(raw);
  check(tfh_hallucinator_support_loss(tuned.get(), support.get(), m, c.seed, &after));
  check(tfh_hallucinator_save(tuned.get(), c.paths.out.c_str()));
  out << "fine-tuned " << c.fine_tune.steps << " steps, support loss " << fixed(before, 6) << " -> "
      << fixed(after, 6) << " -> " << c.paths.out << "\n";
}

void print_report(std::ostream& out, const tfh_report* r) {
  out << "accuracy " << fixed(100.0 * tfh_report_mean(r), 2) << "% +- " << fixed(100.0 * tfh_report_ci95(r), 2)
      << "% over " << tfh_report_task_count(r) << " tasks (report fingerprint " << tfh_report_fingerprint(r)
      << ")\n";
}

void evaluate(const RunConfig& c, std::ostream& out) {
  FeatureSet novel = load_features(c.paths.features, c.normalize_features);
  Hallucinator model = load_model(c.paths.model);
  tfh_report* raw = nullptr;
  check(tfh_evaluate(novel.get(), model.get(), &c.eval, &raw));
  Report report(raw);
  check(tfh_report_write_json(report.get(), c.paths.out.c_str()));
  print_report(out, report.get());
  out << "report -> " << c.paths.out << "\n";
}

void sweep(const RunConfig& c, std::ostream& out) {
  FeatureSet novel = load_features(c.paths.features, c.normalize_features);
  Hallucinator model = load_model(c.paths.model);
  if (model) check(tfh_hallucinator_check_features(model.get(), novel.get()));
  std::vector<tfh_report*> raw(c.counts.size(), nullptr);
  check(tfh_sweep_generated(novel.get(), model.get(), &c.eval, c.counts.data(), c.counts.size(), raw.data()));
  std::vector<Report> reports;
  for (auto* r : raw) reports.emplace_back(r);
  std::vector<const tfh_report*> view(raw.begin(), raw.end());
  check(tfh_reports_write_csv(view.data(), view.size(), c.paths.out.c_str()));
  out << "M      accuracy   ci95\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof line, "%-6zu %7.2f%%  %5.2f%%\n", c.counts[i], 100.0 * tfh_report_mean(raw[i]),
                  100.0 * tfh_report_ci95(raw[i]));
    out << line;
  }
  out << "table -> " << c.paths.out << "\n";
}

void cross_domain(const RunConfig& c, std::ostream& out) {
  FeatureSet target = load_features(c.paths.target, c.normalize_features);
  Hallucinator model = load_model(c.paths.model);
  tfh_report* raw = nullptr;
  check(tfh_cross_domain(model.get(), target.get(), &c.eval, c.cross_domain.source_name.c_str(),
                         c.cross_domain.target_name.c_str(), &raw));
  Report report(raw);
  check(tfh_report_write_json(report.get(), c.paths.out.c_str()));
  out << c.cross_domain.source_name << " -> " << c.cross_domain.target_name << ": ";
  print_report(out, report.get());
  out << "report -> " << c.paths.out << "\n";
}

void export_features(const RunConfig& c, std::ostream& out) {
  FeatureSet novel = load_features(c.paths.features, c.normalize_features);
  Hallucinator model = load_model(c.paths.model);
  size_t rows = 0;
  check(tfh_export_features(novel.get(), model.get(), &c.eval, c.task_index, c.paths.out.c_str(), &rows));
  out << "exported " << rows << " rows of task " << c.task_index << " -> " << c.paths.out << "\n";
}

std::string error_json(const std::string& status, const std::string& message,
                       const std::vector<std::string>& problems = {}) {
  nlohmann::ordered_json j;
  j["status"] = status;
  j["message"] = message;
  if (!problems.empty()) j["problems"] = problems;
  return j.dump();
}

struct FlagSpec {
  std::string flag;
  std::string pointer;
  bool is_string;
  std::string help;
};

const std::vector<FlagSpec> kCommonFlags = {
    {"--seed", "/seed", false, "global seed (all randomness derives from it)"},
    {"--threads", "/threads", false, "worker threads for evaluation and feature extraction"},
    {"--out", "/paths/out", true, "output path"},
};

const std::vector<FlagSpec> kEvalFlags = {
    {"--model", "/paths/model", true, "hallucinator checkpoint"},
    {"--classifier", "/eval/classifier", true, "prototype, logistic or svm"},
    {"--n-way", "/eval/n_way", false, "classes per task"},
    {"--k-shot", "/eval/k_shot", false, "support examples per class"},
    {"--queries-per-class", "/eval/queries_per_class", false, "query examples per class"},
    {"--generated-per-class", "/eval/generated_per_class", false, "hallucinated examples per class (M)"},
    {"--tasks", "/eval/tasks", false, "number of evaluation tasks"},
    {"--fine-tune", "/fine_tune/enabled", false, "fine-tune the hallucinator per task (true/false)"},
    {"--fine-tune-steps", "/fine_tune/steps", false, "fine-tuning steps"},
    {"--fine-tune-learning-rate", "/fine_tune/learning_rate", false, "fine-tuning learning rate"},
    {"--fine-tune-generated", "/fine_tune/generated_per_step", false, "samples per class per fine-tuning step"},
    {"--l2", "/eval/linear/l2", false, "linear classifier L2 strength"},
    {"--max-steps", "/eval/linear/max_steps", false, "linear classifier step budget"},
    {"--linear-learning-rate", "/eval/linear/learning_rate", false, "linear classifier step size"},
    {"--normalize-features", "/normalize_features", false, "min-max normalize loaded features (true/false)"},
};

std::vector<FlagSpec> flags_for(Command cmd) {
  std::vector<FlagSpec> f;
  auto add = [&](std::initializer_list<FlagSpec> more) { f.insert(f.end(), more.begin(), more.end()); };
  auto train_flags = [&](const std::string& section) {
    for (std::string key : {"epochs", "batch_size", "learning_rate", "momentum", "weight_decay",
                            "augment_noise_std", "grad_clip_norm"}) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      f.push_back({flag, "/" + section + "/" + key, false, "training hyperparameter"});
    }
  };
  switch (cmd) {
    case Command::kGenSynthetic:
      add({{"--num-classes", "/synthetic/num_classes", false, "classes in the feature set"},
           {"--examples-per-class", "/synthetic/examples_per_class", false, "examples per class"},
           {"--shape", "/synthetic/shape", false, "feature shape d,h,w"},
           {"--center-seed", "/synthetic/center_seed", false, "seed of the class centers"},
           {"--noise-std", "/synthetic/noise_std", false, "per-element noise std"},
           {"--clip-to-unit", "/synthetic/clip_to_unit", false, "clip features to [0,1] (true/false)"},
           {"--center-offset", "/synthetic/center_offset", false, "constant added to every center"},
           {"--center-rank", "/synthetic/center_rank", false, "rank of the shared center subspace (0 = iid)"},
           {"--channel-share", "/synthetic/channel_share", false, "channel-shared fraction of center variance"},
           {"--base-out", "/paths/base_out", true, "write base classes here"},
           {"--val-out", "/paths/val_out", true, "write validation classes here"},
           {"--novel-out", "/paths/novel_out", true, "write novel classes here"},
           {"--n-base", "/split/n_base", false, "random split: base class count"},
           {"--n-val", "/split/n_val", false, "random split: validation class count"},
           {"--n-novel", "/split/n_novel", false, "random split: novel class count"},
           {"--base-classes", "/split/base_classes", false, "explicit base class ids"},
           {"--val-classes", "/split/val_classes", false, "explicit validation class ids"},
           {"--novel-classes", "/split/novel_classes", false, "explicit novel class ids"},
           {"--images-out", "/paths/images_out", true, "write a synthetic image set here"},
           {"--image-classes", "/images/num_classes", false, "image set classes"},
           {"--image-examples-per-class", "/images/examples_per_class", false, "images per class"},
           {"--image-shape", "/images/shape", false, "image shape c,H,W"},
           {"--image-noise-std", "/images/noise_std", false, "image noise std"},
           {"--template-seed", "/images/template_seed", false, "seed of the class templates"}});
      break;
    case Command::kTrainBackbone:
      add({{"--images", "/paths/images", true, "training image set (FTS1)"},
           {"--num-classes", "/backbone/num_classes", false, "base classes of the head"},
           {"--image-shape", "/backbone/image_shape", false, "image shape c,H,W"},
           {"--widths", "/backbone/widths", false, "block widths w1,w2,w3"},
           {"--feature-shape", "/backbone/feature_shape", false, "feature shape d,h,w"}});
      train_flags("train");
      break;
    case Command::kDistill:
      add({{"--teacher", "/paths/teacher", true, "teacher backbone checkpoint"},
           {"--images", "/paths/images", true, "training image set (FTS1)"},
           {"--alpha", "/distill/alpha", false, "cross-entropy weight"},
           {"--beta", "/distill/beta", false, "KL weight"},
           {"--temperature", "/distill/temperature", false, "softmax temperature"},
           {"--init-from-teacher", "/distill/init_from_teacher", false, "start from the teacher (true/false)"}});
      train_flags("distill");
      break;
    case Command::kExtractFeatures:
      add({{"--backbone", "/paths/backbone", true, "backbone checkpoint"},
           {"--images", "/paths/images", true, "image set (FTS1)"}});
      break;
    case Command::kTrainHallucinator:
      add({{"--features", "/paths/features", true, "base-class feature set (FTS1)"},
           {"--model", "/paths/model", true, "continue training this checkpoint"},
           {"--preset", "/hallucinator/preset", true, "desk, large, small_backbone or vector"},
           {"--variant", "/hallucinator/variant", true, "tensor or vector"},
           {"--feature-shape", "/hallucinator/feature_shape", false, "feature shape d,h,w"},
           {"--cond-dim", "/hallucinator/cond_dim", false, "conditional vector size"},
           {"--latent-dim", "/hallucinator/latent_dim", false, "latent noise size"},
           {"--generator-layers", "/hallucinator/generator_layers", false, "transposed convolution layers"},
           {"--final-sigmoid", "/hallucinator/final_sigmoid", false, "end the generator in a sigmoid"},
           {"--n-way", "/meta_train/n_way", false, "classes per episode"},
           {"--k-shot", "/meta_train/k_shot", false, "examples per class per episode"},
           {"--generated-per-class", "/meta_train/generated_per_class", false, "samples per class (M)"},
           {"--episodes-per-epoch", "/meta_train/episodes_per_epoch", false, "episodes per epoch"},
           {"--epochs", "/meta_train/epochs", false, "epochs"},
           {"--learning-rate", "/meta_train/learning_rate", false, "Adam learning rate"},
           {"--lr-decay-every", "/meta_train/lr_decay_every", false, "epochs between decays (0 = none)"},
           {"--lr-decay-factor", "/meta_train/lr_decay_factor", false, "decay multiplier"},
           {"--normalize-features", "/normalize_features", false, "min-max normalize loaded features"}});
      break;
    case Command::kFineTune:
      add({{"--model", "/paths/model", true, "hallucinator checkpoint"},
           {"--features", "/paths/features", true, "support feature set; every class is used"},
           {"--steps", "/fine_tune/steps", false, "fine-tuning steps"},
           {"--learning-rate", "/fine_tune/learning_rate", false, "Adam learning rate"},
           {"--generated-per-step", "/fine_tune/generated_per_step", false, "samples per class per step"},
           {"--normalize-features", "/normalize_features", false, "min-max normalize loaded features"}});
      break;
    case Command::kEvaluate:
    case Command::kSweepM:
    case Command::kExportFeatures:
      add({{"--features", "/paths/features", true, "novel-class feature set (FTS1)"}});
      f.insert(f.end(), kEvalFlags.begin(), kEvalFlags.end());
      if (cmd == Command::kSweepM) add({{"--counts", "/eval/counts", false, "list of M values, e.g. 0,1,2,5"}});
      if (cmd == Command::kExportFeatures) add({{"--task-index", "/eval/task_index", false, "task to export"}});
      break;
    case Command::kCrossDomain:
      add({{"--target", "/paths/target", true, "target-domain feature set (FTS1)"},
           {"--source-name", "/cross_domain/source_name", true, "source domain label"},
           {"--target-name", "/cross_domain/target_name", true, "target domain label"}});
      f.insert(f.end(), kEvalFlags.begin(), kEvalFlags.end());
      break;
    case Command::kPrintConfig:
      break;
  }
  f.insert(f.end(), kCommonFlags.begin(), kCommonFlags.end());
  return f;
}

const char* command_help(Command cmd) {
  switch (cmd) {
    case Command::kGenSynthetic: return "write a synthetic feature set, its class split and/or an image set";
    case Command::kTrainBackbone: return "train the embedding network with cross-entropy";
    case Command::kDistill: return "self-distill a student backbone from a teacher";
    case Command::kExtractFeatures: return "embed an image set into tensor features";
    case Command::kTrainHallucinator: return "meta-train the feature hallucinator on base classes";
    case Command::kFineTune: return "fine-tune a hallucinator on a support set";
    case Command::kEvaluate: return "evaluate N-way K-shot tasks and write a JSON report";
    case Command::kSweepM: return "evaluate several numbers of generated features and write a CSV table";
    case Command::kCrossDomain: return "evaluate a trained hallucinator on another domain";
    case Command::kExportFeatures: return "export one task's GAP'd features as CSV";
    case Command::kPrintConfig: return "print the effective configuration as JSON";
  }
  return "";
}

constexpr Command kAllCommands[] = {
    Command::kGenSynthetic,      Command::kTrainBackbone, Command::kDistill,      Command::kExtractFeatures,
    Command::kTrainHallucinator, Command::kFineTune,      Command::kEvaluate,     Command::kSweepM,
    Command::kCrossDomain,       Command::kExportFeatures, Command::kPrintConfig,
};

}  // namespace

int run(Command command, const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    out << command_name(command) << ": config fingerprint " << config.fingerprint() << ", seed " << config.seed
        << "\n";
    switch (command) {
      case Command::kGenSynthetic: gen_synthetic(config, out); break;
      case Command::kTrainBackbone: train_backbone(config, out); break;
      case Command::kDistill: distill(config, out); break;
      case Command::kExtractFeatures: extract_features(config, out); break;
      case Command::kTrainHallucinator: train_hallucinator(config, out); break;
      case Command::kFineTune: fine_tune(config, out); break;
      case Command::kEvaluate: evaluate(config, out); break;
      case Command::kSweepM: sweep(config, out); break;
      case Command::kCrossDomain: cross_domain(config, out); break;
      case Command::kExportFeatures: export_features(config, out); break;
      case Command::kPrintConfig: out << config.to_json().dump(2) << "\n"; break;
    }
    return kExitOk;
  } catch (const ApiFailure& f) {
    err << f.json << "\n";
    return exit_code_for(f.status);
  } catch (const UsageFailure& f) {
    err << error_json("config_error", f.message) << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << error_json("internal_error", e.what()) << "\n";
    return kExitRuntime;
  }
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot classification with hallucinated support features"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tfh_version()));

  struct Bound {
    FlagSpec spec;
    std::string value;
    CLI::Option* option = nullptr;
  };
  std::map<Command, std::vector<std::unique_ptr<Bound>>> bound;
  std::map<Command, std::string> config_paths;
  std::map<Command, CLI::App*> subs;
  for (Command cmd : kAllCommands) {
    CLI::App* sub = app.add_subcommand(command_name(cmd), command_help(cmd));
    subs[cmd] = sub;
    sub->add_option("--config", config_paths[cmd], "JSON configuration file; flags override its values");
    for (const auto& spec : flags_for(cmd)) {
      auto b = std::make_unique<Bound>();
      b->spec = spec;
      b->option = sub->add_option(spec.flag, b->value, spec.help);
      bound[cmd].push_back(std::move(b));
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_json("usage_error", e.what()) << "\n";
    return kExitValidation;
  }

  Command command = Command::kPrintConfig;
  for (const auto& [cmd, sub] : subs)
    if (sub->parsed()) command = cmd;

  std::vector<Override> overrides;
  for (const auto& b : bound[command])
    if (b->option->count() > 0) overrides.push_back({b->spec.pointer, b->value, b->spec.is_string});

  RunConfig config;
  try {
    config = load_run_config(config_paths[command], overrides, command);
  } catch (const ConfigProblems& e) {
    err << error_json("config_error", e.what(), e.problems()) << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << error_json("config_error", std::string("cannot apply flag: ") + e.what()) << "\n";
    return kExitValidation;
  }
  return run(command, config, out, err);
}

}  // namespace tfh::cli
