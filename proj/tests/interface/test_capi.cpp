#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "tfh/tfh.h"

namespace {

namespace fs = std::filesystem;

struct FeaturesDeleter {
  void operator()(tfh_feature_set* p) const { tfh_features_free(p); }
};
struct ModelDeleter {
  void operator()(tfh_hallucinator* p) const { tfh_hallucinator_free(p); }
};
struct ReportDeleter {
  void operator()(tfh_report* p) const { tfh_report_free(p); }
};
using Features = std::unique_ptr<tfh_feature_set, FeaturesDeleter>;
using Model = std::unique_ptr<tfh_hallucinator, ModelDeleter>;
using Report = std::unique_ptr<tfh_report, ReportDeleter>;

class ScratchDir {
 public:
  ScratchDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("tfh_capi_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

nlohmann::json last_error() { return nlohmann::json::parse(tfh_last_error_json()); }

Features synthetic(std::size_t classes, std::size_t per_class, float offset = 0.0f, std::uint64_t seed = 0) {
  tfh_synthetic_spec spec;
  tfh_synthetic_spec_default(&spec);
  spec.num_classes = classes;
  spec.examples_per_class = per_class;
  spec.center_offset = offset;
  spec.center_seed = seed;
  tfh_feature_set* out = nullptr;
  REQUIRE(tfh_features_synthetic(&spec, &out) == TFH_OK);
  return Features(out);
}

std::vector<float> example(const tfh_feature_set* set, std::size_t i, std::size_t* label) {
  std::vector<float> v(32 * 5 * 5);
  REQUIRE(tfh_features_get(set, i, v.data(), v.size(), label) == TFH_OK);
  return v;
}

Model desk_model(std::uint64_t seed) {
  tfh_hallucinator_config cfg;
  REQUIRE(tfh_hallucinator_config_preset("desk", &cfg) == TFH_OK);
  tfh_hallucinator* out = nullptr;
  REQUIRE(tfh_hallucinator_create(&cfg, seed, &out) == TFH_OK);
  return Model(out);
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("status names and version") {
  CHECK(std::string(tfh_status_name(TFH_OK)) == "ok");
  CHECK(std::string(tfh_status_name(TFH_ERR_SHAPE)) == "shape_error");
  CHECK(std::string(tfh_status_name(TFH_ERR_CONFIG)) == "config_error");
  CHECK(std::strlen(tfh_version()) > 0);
}

TEST_CASE("config validation reports every problem") {
  tfh_meta_train_config cfg;
  tfh_meta_train_config_default(&cfg);
  CHECK(tfh_meta_train_config_validate(&cfg) == TFH_OK);
  cfg.k_shot = 0;
  cfg.n_way = 0;
  REQUIRE(tfh_meta_train_config_validate(&cfg) == TFH_ERR_CONFIG);
  const auto err = last_error();
  CHECK(err["status"] == "config_error");
  REQUIRE(err["problems"].size() == 2);
  const std::string all = err["problems"].dump();
  CHECK(all.find("k_shot") != std::string::npos);
  CHECK(all.find("n_way") != std::string::npos);
}

TEST_CASE("training defaults clip gradients only for distillation") {
  tfh_train_config train;
  tfh_train_config_default(&train);
  CHECK(train.grad_clip_norm == 0.0f);
  tfh_distill_config distill;
  tfh_distill_config_default(&distill);
  CHECK(distill.train.grad_clip_norm == 1.0f);
  CHECK(distill.temperature == 4.0f);
  distill.train.grad_clip_norm = -1.0f;
  CHECK(tfh_distill_config_validate(&distill) == TFH_ERR_CONFIG);
}

TEST_CASE("null arguments are rejected without touching outputs") {
  tfh_feature_set* sentinel = reinterpret_cast<tfh_feature_set*>(0x1);
  CHECK(tfh_features_synthetic(nullptr, &sentinel) == TFH_ERR_INVALID_ARGUMENT);
  CHECK(sentinel == reinterpret_cast<tfh_feature_set*>(0x1));
  CHECK(std::string(tfh_last_error_message()).find("spec") != std::string::npos);
}

TEST_CASE("feature files round-trip through the handle API") {
  ScratchDir dir;
  auto set = synthetic(4, 3);
  std::size_t n = 0, classes = 0, shape[3] = {};
  REQUIRE(tfh_features_info(set.get(), &n, &classes, shape) == TFH_OK);
  CHECK(n == 12);
  CHECK(classes == 4);
  CHECK(shape[0] == 32);

  const auto path = dir.file("set.fts");
  REQUIRE(tfh_features_save(set.get(), path.c_str()) == TFH_OK);
  tfh_feature_set* raw = nullptr;
  REQUIRE(tfh_features_load(path.c_str(), &raw) == TFH_OK);
  Features loaded(raw);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t la = 0, lb = 0;
    const auto a = example(set.get(), i, &la);
    const auto b = example(loaded.get(), i, &lb);
    CHECK(la == lb);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
  }

  std::vector<float> tiny(3);
  CHECK(tfh_features_get(set.get(), 0, tiny.data(), tiny.size(), nullptr) == TFH_ERR_INVALID_ARGUMENT);
}

TEST_CASE("structured parse and io errors") {
  ScratchDir dir;
  auto set = synthetic(2, 2);
  const auto path = dir.file("set.fts");
  REQUIRE(tfh_features_save(set.get(), path.c_str()) == TFH_OK);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  tfh_feature_set* out = nullptr;
  REQUIRE(tfh_features_load(path.c_str(), &out) == TFH_ERR_PARSE);
  CHECK(out == nullptr);
  auto err = last_error();
  CHECK(err["status"] == "parse_error");
  CHECK(err["offset"] == 0);

  const auto missing = dir.file("absent.fts");
  REQUIRE(tfh_features_load(missing.c_str(), &out) == TFH_ERR_IO);
  err = last_error();
  CHECK(err["path"] == missing);
}

TEST_CASE("subset relabels in list order") {
  auto set = synthetic(5, 2);
  const std::size_t pick[] = {3, 1};
  tfh_feature_set* raw = nullptr;
  REQUIRE(tfh_features_subset(set.get(), pick, 2, &raw) == TFH_OK);
  Features sub(raw);
  std::size_t n = 0, classes = 0, shape[3];
  REQUIRE(tfh_features_info(sub.get(), &n, &classes, shape) == TFH_OK);
  CHECK(n == 4);
  CHECK(classes == 2);
  std::size_t label_first = 9;
  const auto first = example(sub.get(), 0, &label_first);
  CHECK(label_first == 0);
  bool found = false;
  for (std::size_t i = 0; i < 10; ++i) {
    std::size_t l = 0;
    if (example(set.get(), i, &l) == first) found = (l == 3);
  }
  CHECK(found);
}

TEST_CASE("hallucinator checkpoints and shape checks") {
  ScratchDir dir;
  auto model = desk_model(5);
  const auto path = dir.file("model.tfhm");
  REQUIRE(tfh_hallucinator_save(model.get(), path.c_str()) == TFH_OK);
  tfh_hallucinator* raw = nullptr;
  REQUIRE(tfh_hallucinator_load(path.c_str(), &raw) == TFH_OK);
  Model loaded(raw);

  tfh_hallucinator_config a, b;
  REQUIRE(tfh_hallucinator_get_config(model.get(), &a) == TFH_OK);
  REQUIRE(tfh_hallucinator_get_config(loaded.get(), &b) == TFH_OK);
  CHECK(std::memcmp(a.feature_shape, b.feature_shape, sizeof a.feature_shape) == 0);
  CHECK(a.latent_dim == b.latent_dim);

  auto support = synthetic(3, 2);
  double la = 0, lb = 0;
  REQUIRE(tfh_hallucinator_support_loss(model.get(), support.get(), 4, 11, &la) == TFH_OK);
  REQUIRE(tfh_hallucinator_support_loss(loaded.get(), support.get(), 4, 11, &lb) == TFH_OK);
  CHECK(la == lb);

  tfh_synthetic_spec spec;
  tfh_synthetic_spec_default(&spec);
  spec.num_classes = 2;
  spec.examples_per_class = 2;
  spec.shape[0] = 16;
  tfh_feature_set* other = nullptr;
  REQUIRE(tfh_features_synthetic(&spec, &other) == TFH_OK);
  Features wrong(other);
  REQUIRE(tfh_hallucinator_check_features(model.get(), wrong.get()) == TFH_ERR_SHAPE);
  const std::string msg = tfh_last_error_message();
  CHECK(msg.find("32x5x5") != std::string::npos);
  CHECK(msg.find("16x5x5") != std::string::npos);
}

TEST_CASE("meta-training reports epoch losses and logs through the callback") {
  struct Sink {
    std::vector<std::string> warnings;
    std::size_t infos = 0;
  } sink;
  tfh_set_log_callback(
      [](tfh_log_level level, const char* message, void* user) {
        auto* s = static_cast<Sink*>(user);
        if (level == TFH_LOG_WARNING) s->warnings.emplace_back(message);
        else ++s->infos;
      },
      &sink);

  auto base = synthetic(4, 6, -2.0f);
  tfh_hallucinator_config cfg;
  REQUIRE(tfh_hallucinator_config_preset("desk", &cfg) == TFH_OK);
  cfg.final_sigmoid = 1;
  tfh_meta_train_config train;
  tfh_meta_train_config_default(&train);
  train.n_way = 3;
  train.k_shot = 2;
  train.generated_per_class = 2;
  train.episodes_per_epoch = 5;
  train.epochs = 2;
  tfh_hallucinator* raw = nullptr;
  double losses[2] = {-1, -1};
  REQUIRE(tfh_hallucinator_meta_train(base.get(), &cfg, &train, 3, &raw, losses) == TFH_OK);
  Model model(raw);
  tfh_silence_log();

  CHECK(losses[0] > 0);
  CHECK(losses[1] > 0);
  CHECK(sink.infos >= 2);
  REQUIRE(sink.warnings.size() == 1);
  CHECK(sink.warnings[0].find("sigmoid") != std::string::npos);
}

TEST_CASE("evaluation reports") {
  ScratchDir dir;
  auto novel = synthetic(6, 12, 0.0f, 4);
  tfh_eval_config cfg;
  tfh_eval_config_default(&cfg);
  cfg.n_way = 5;
  cfg.k_shot = 1;
  cfg.queries_per_class = 5;
  cfg.generated_per_class = 0;
  cfg.tasks = 20;
  cfg.seed = 9;

  tfh_report* raw = nullptr;
  REQUIRE(tfh_evaluate(novel.get(), nullptr, &cfg, &raw) == TFH_OK);
  Report report(raw);
  CHECK(tfh_report_task_count(report.get()) == 20);
  const double mean = tfh_report_mean(report.get());
  CHECK(mean >= 0.0);
  CHECK(mean <= 1.0);
  CHECK(tfh_report_ci95(report.get()) >= 0.0);

  tfh_report* parsed_raw = nullptr;
  REQUIRE(tfh_report_from_json(tfh_report_json(report.get()), &parsed_raw) == TFH_OK);
  Report parsed(parsed_raw);
  CHECK(std::string(tfh_report_json(parsed.get())) == tfh_report_json(report.get()));
  CHECK(std::string(tfh_report_fingerprint(parsed.get())) == tfh_report_fingerprint(report.get()));

  cfg.generated_per_class = 2;
  tfh_report* untouched = nullptr;
  CHECK(tfh_evaluate(novel.get(), nullptr, &cfg, &untouched) != TFH_OK);
  CHECK(untouched == nullptr);

  auto model = desk_model(1);
  const std::size_t counts[] = {0, 2};
  tfh_report* sweep[2] = {nullptr, nullptr};
  REQUIRE(tfh_sweep_generated(novel.get(), model.get(), &cfg, counts, 2, sweep) == TFH_OK);
  Report s0(sweep[0]), s1(sweep[1]);
  const auto csv = dir.file("sweep.csv");
  const tfh_report* both[] = {s0.get(), s1.get()};
  REQUIRE(tfh_reports_write_csv(both, 2, csv.c_str()) == TFH_OK);
  std::ifstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == tfh_report_csv_header());
  CHECK(lines[2] == tfh_report_csv_row(s1.get()));

  CHECK(tfh_report_from_json("{not json", &parsed_raw) == TFH_ERR_PARSE);
}

TEST_CASE("classifier names") {
  tfh_classifier c = TFH_CLASSIFIER_PROTOTYPE;
  REQUIRE(tfh_parse_classifier("svm", &c) == TFH_OK);
  CHECK(c == TFH_CLASSIFIER_SVM);
  CHECK(tfh_parse_classifier("forest", &c) == TFH_ERR_CONFIG);
  CHECK(c == TFH_CLASSIFIER_SVM);
}

TEST_CASE("atomic text writes") {
  ScratchDir dir;
  const auto path = dir.file("note.txt");
  REQUIRE(tfh_write_text_file(path.c_str(), "first") == TFH_OK);
  const auto bad = dir.file("missing_dir/note.txt");
  CHECK(tfh_write_text_file(bad.c_str(), "x") == TFH_ERR_IO);
  std::ifstream in(path);
  CHECK(std::string(std::istreambuf_iterator<char>(in), {}) == "first");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(fs::path(path).parent_path())) ++entries;
  CHECK(entries == 1);
}

}
