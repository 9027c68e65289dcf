#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <unistd.h>

#include "benchmark.hpp"
#include "common/log.hpp"
#include "commands.hpp"
#include "data/feature_file.hpp"
#include "eval/evaluate.hpp"
#include "eval/prototypes.hpp"
#include "hallucinator/training.hpp"
#include "nn/checkpoint.hpp"
#include "nn/kernels.hpp"
#include "test_support.hpp"
#include "tfh/tfh.h"

using namespace tfh;
using nn::TensorD;
using testing::GraphD;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string pct(double v) { return fixed(100.0 * v, 2) + "%"; }

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

const testing::Benchmark& benchmark() {
  static const testing::Benchmark b = testing::make_benchmark();
  return b;
}

// Trained once and shared by the criteria that need a meta-trained model.
const hallucinator::HallucinatorModel& benchmark_model() {
  static const auto model = hallucinator::meta_train(benchmark().base, hallucinator::HallucinatorConfig::desk(),
                                                     testing::benchmark_meta_train(), testing::kBenchmarkSeed);
  return model;
}

eval::EvalArgs one_shot_args(std::size_t tasks) {
  eval::EvalArgs args;
  args.n_way = 5;
  args.k_shot = 1;
  args.queries_per_class = 15;
  args.tasks = tasks;
  args.seed = 2024;
  args.threads = worker_threads();
  return args;
}

nn::ParamStoreD random_params(Rng& rng, std::initializer_list<std::pair<const char*, nn::Shape>> entries,
                              bool away_from_zero = false) {
  nn::ParamStoreD p;
  for (const auto& [name, shape] : entries) {
    p.add(name, away_from_zero ? testing::random_away_from_zero(shape, rng) : testing::random_tensor(shape, rng));
  }
  return p;
}

Outcome gradient_suite() {
  double worst = 0;
  std::string worst_name;
  std::size_t checks = 0;
  auto record = [&](const char* name, const testing::GradCheck& r) {
    ++checks;
    if (r.rel_error > worst) {
      worst = r.rel_error;
      worst_name = name;
    }
  };
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const std::size_t stride = 1 + seed % 2, pad = seed % 2;
    record("conv2d", testing::check_gradients(
                         random_params(rng, {{"x", {2, 2, 5, 5}}, {"w", {3, 2, 3, 3}}, {"b", {3}}}),
                         [&](GraphD& g) {
                           return testing::project(
                               g, g.conv2d(g.param("x"), g.param("w"), g.param("b"), stride, pad), seed);
                         }));
    record("tconv2d", testing::check_gradients(
                          random_params(rng, {{"x", {2, 3, 2, 2}}, {"w", {3, 2, 3, 3}}, {"b", {2}}}),
                          [&](GraphD& g) {
                            return testing::project(g, g.tconv2d(g.param("x"), g.param("w"), g.param("b"), stride),
                                                    seed);
                          }));
    record("linear", testing::check_gradients(random_params(rng, {{"x", {3, 4}}, {"w", {5, 4}}, {"b", {5}}}),
                                              [&](GraphD& g) {
                                                return testing::project(
                                                    g, g.linear(g.param("x"), g.param("w"), g.param("b")), seed);
                                              }));
    const auto act = random_params(rng, {{"x", {2, 3, 2, 2}}}, true);
    record("relu", testing::check_gradients(
                       act, [&](GraphD& g) { return testing::project(g, g.relu(g.param("x")), seed); }));
    record("sigmoid", testing::check_gradients(
                          act, [&](GraphD& g) { return testing::project(g, g.sigmoid(g.param("x")), seed); }));
    record("gap", testing::check_gradients(
                      act, [&](GraphD& g) { return testing::project(g, g.gap(g.param("x")), seed); }));
    record("mse", testing::check_gradients(random_params(rng, {{"a", {2, 3, 2, 2}}, {"b", {2, 3, 2, 2}}}),
                                           [](GraphD& g) { return g.mse(g.param("a"), g.param("b"), 7.0); }));
    const std::vector<std::size_t> labels{0, 4, 2, 2};
    nn::ParamStoreD logits;
    logits.add("s", testing::random_tensor({4, 5}, rng, -2, 2));
    record("cross_entropy", testing::check_gradients(
                                logits, [&](GraphD& g) { return g.cross_entropy(g.param("s"), labels); }));
    const auto teacher = testing::random_tensor({4, 5}, rng, -2, 2);
    record("kl_divergence", testing::check_gradients(logits, [&](GraphD& g) {
             return g.kl_divergence(g.param("s"), g.constant(teacher), 4.0);
           }));
  }
  return {worst < 1e-4, std::to_string(checks) + " checks, worst relative error " + sci(worst) + " (" +
                            worst_name + ")"};
}

std::size_t brute_force_nearest(const std::vector<std::vector<double>>& protos, const std::vector<double>& q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < protos.size(); ++j) {
    double d = 0;
    for (std::size_t i = 0; i < q.size(); ++i) d += (protos[j][i] - q[i]) * (protos[j][i] - q[i]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

std::vector<double> spatial_mean(const nn::Tensor& t) {
  const std::size_t d = t.extent(0), hw = t.extent(1) * t.extent(2);
  std::vector<double> out(d);
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0;
    for (std::size_t i = 0; i < hw; ++i) s += t[c * hw + i];
    out[c] = s / static_cast<double>(hw);
  }
  return out;
}

Outcome oracle_equivalence() {
  Rng rng(77);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  double conv_worst = 0, tconv_worst = 0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = pick(1, 2), ci = pick(1, 4), co = pick(1, 4), k = pick(1, 3);
    const std::size_t stride = pick(1, 2), pad = pick(0, 1), h = pick(k, 8), w = pick(k, 8);
    auto x = testing::random_tensor({n, ci, h, w}, rng);
    auto wt = testing::random_tensor({co, ci, k, k}, rng);
    auto b = testing::random_tensor({co}, rng);
    conv_worst = std::max(conv_worst, testing::max_abs_diff(nn::conv2d_forward(x, wt, b, stride, pad),
                                                            testing::conv2d_reference(x, wt, b, stride, pad)));
  }
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = pick(1, 2), ci = pick(1, 4), co = pick(1, 4), k = pick(1, 3);
    const std::size_t stride = pick(1, 2), h = pick(1, 5), w = pick(1, 5);
    auto x = testing::random_tensor({n, ci, h, w}, rng);
    auto wt = testing::random_tensor({ci, co, k, k}, rng);
    auto b = testing::random_tensor({co}, rng);
    tconv_worst = std::max(tconv_worst, testing::max_abs_diff(nn::tconv2d_forward(x, wt, b, stride),
                                                              testing::tconv2d_reference(x, wt, b, stride)));
  }

  const auto& novel = benchmark().novel;
  std::size_t mismatches = 0, queries = 0;
  for (std::size_t t = 0; t < 100; ++t) {
    eval::EvalArgs args;
    args.n_way = pick(2, 8);
    args.k_shot = pick(1, 5);
    args.queries_per_class = pick(1, 15);
    args.tasks = 100;
    args.seed = 500 + t;
    const auto outcome = eval::run_task(novel, nullptr, args, t);
    std::vector<std::vector<double>> protos;
    for (const auto& cls : outcome.episode.support) {
      std::vector<double> acc;
      for (auto idx : cls) {
        const auto v = spatial_mean(novel.feature(idx));
        if (acc.empty()) acc.assign(v.size(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
      }
      for (auto& v : acc) v /= static_cast<double>(cls.size());
      protos.push_back(std::move(acc));
    }
    std::size_t q = 0;
    for (const auto& cls : outcome.episode.query) {
      for (auto idx : cls) {
        mismatches += outcome.predictions[q++] != brute_force_nearest(protos, spatial_mean(novel.feature(idx)));
        ++queries;
      }
    }
  }
  const bool pass = conv_worst < 1e-6 && tconv_worst < 1e-6 && mismatches == 0;
  return {pass, "conv2d max diff " + sci(conv_worst) + ", tconv2d max diff " +
                    sci(tconv_worst) + ", " + std::to_string(mismatches) + "/" +
                    std::to_string(queries) + " prototype predictions differ over 100 tasks"};
}

Outcome architecture_fidelity() {
  using nn::Shape;
  using Shapes = std::vector<Shape>;
  const auto large = hallucinator::HallucinatorConfig::large();
  const auto small = hallucinator::HallucinatorConfig::small_backbone();
  std::vector<std::string> failures;
  auto expect = [&](const char* what, const Shapes& got, const Shapes& want) {
    if (got != want) failures.push_back(what);
  };
  expect("large conditioner", large.conditioner().stage_shapes(large.feature_shape),
         Shapes{{512, 7, 7}, {512, 7, 7}, {512, 7, 7}, {256, 5, 5}, {6400}, {1024}});
  expect("large generator", large.generator().stage_shapes({2048}),
         Shapes{{2048}, {2048, 1, 1}, {512, 3, 3}, {512, 3, 3}, {512, 5, 5}, {512, 5, 5}, {512, 7, 7}, {512, 7, 7}});
  expect("small conditioner", small.conditioner().stage_shapes(small.feature_shape),
         Shapes{{640, 5, 5}, {640, 5, 5}, {640, 5, 5}, {320, 3, 3}, {2880}, {1024}});
  expect("small generator", small.generator().stage_shapes({2048}),
         Shapes{{2048}, {2048, 1, 1}, {640, 3, 3}, {640, 3, 3}, {640, 5, 5}});
  std::string detail = "large 512x7x7 -> 256x5x5 -> 6400 -> 1024 | 2048x1x1 -> 512x3x3 -> 512x5x5 -> 512x7x7; "
                       "small 640x5x5 -> 320x3x3 -> 2880 -> 1024 | 2048x1x1 -> 640x3x3 -> 640x5x5";
  for (const auto& f : failures) detail += "; mismatch in " + f;
  return {failures.empty(), detail};
}

Outcome hallucinator_learning() {
  hallucinator::MetaTrainHistory history;
  hallucinator::meta_train(benchmark().base, hallucinator::HallucinatorConfig::desk(),
                           testing::benchmark_meta_train(200, 1), testing::kBenchmarkSeed, &history);
  const auto& loss = history.episode_loss;
  const double first = std::accumulate(loss.begin(), loss.begin() + 10, 0.0) / 10;
  const double last = std::accumulate(loss.end() - 10, loss.end(), 0.0) / 10;
  return {loss.size() == 200 && last < 0.5 * first, "first-10 mean " + fixed(first, 3) + ", last-10 mean " +
                                                        fixed(last, 3) + ", ratio " + fixed(last / first, 3)};
}

Outcome augmentation_benefit() {
  const std::vector<std::size_t> counts{0, 1, 2, 5, 10};
  const auto reports = eval::sweep_generated(counts, benchmark().novel, &benchmark_model(), one_shot_args(600));
  std::size_t best = 1;
  for (std::size_t i = 2; i < reports.size(); ++i)
    if (reports[i].mean_accuracy > reports[best].mean_accuracy) best = i;
  const auto& base = reports[0];
  const auto& top = reports[best];
  const double gap = top.mean_accuracy - base.mean_accuracy;
  const bool disjoint = top.mean_accuracy - top.ci95 > base.mean_accuracy + base.ci95;
  std::string detail;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    detail += (i ? ", M=" : "M=") + std::to_string(counts[i]) + " " + pct(reports[i].mean_accuracy) + " +- " +
              pct(reports[i].ci95);
  }
  detail += "; best M=" + std::to_string(counts[best]) + " gap " + fixed(100 * gap, 2) + " points" +
            (disjoint ? ", CIs disjoint" : ", CIs overlap");
  return {gap >= 0.02 && disjoint, detail};
}

Outcome fine_tuning() {
  const auto& model = benchmark_model();
  const auto& novel = benchmark().novel;
  hallucinator::FineTuneConfig zero;
  zero.steps = 0;
  bool noop = true, untouched = true;
  std::size_t reduced = 0;
  const nn::ParamStore snapshot = model.params().cast<float>();
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto support = data::gather(novel, data::sample_episode(novel, 5, 1, 0, 900 + t).support);
    if (t < 10) noop = noop && nn::bit_equal(hallucinator::fine_tune(model, support, zero, t).params(), model.params());
    const double before = hallucinator::support_reconstruction_loss(model, support, 50, 7000 + t);
    const auto tuned = hallucinator::fine_tune(model, support, hallucinator::FineTuneConfig{}, t);
    reduced += hallucinator::support_reconstruction_loss(tuned, support, 50, 7000 + t) < before;
  }
  untouched = nn::bit_equal(model.params(), snapshot);

  auto args = one_shot_args(600);
  args.generated_per_class = 2;
  const auto plain = eval::evaluate(novel, &model, args);
  args.fine_tune = hallucinator::FineTuneConfig{};
  const auto tuned = eval::evaluate(novel, &model, args);
  const bool accuracy_ok = tuned.mean_accuracy >= plain.mean_accuracy - 0.005;
  return {noop && untouched && reduced >= 95 && accuracy_ok,
          std::string("t=0 ") + (noop ? "bit-exact" : "NOT bit-exact") + ", input model " +
              (untouched ? "unchanged" : "MUTATED") + ", t=10 lowered the support loss on " + std::to_string(reduced) +
              "/100 tasks, TFH " + pct(plain.mean_accuracy) + " vs TFH-ft " + pct(tuned.mean_accuracy) + " (M=2)"};
}

Outcome classifier_robustness() {
  const std::vector<std::size_t> counts{0, 1, 2};
  bool pass = true;
  std::string detail;
  for (auto kind : {eval::ClassifierKind::kPrototype, eval::ClassifierKind::kLogistic, eval::ClassifierKind::kSvm}) {
    auto args = one_shot_args(600);
    args.classifier = kind;
    const auto r = eval::sweep_generated(counts, benchmark().novel, &benchmark_model(), args);
    const bool ordered = r[1].mean_accuracy > r[0].mean_accuracy && r[2].mean_accuracy > r[0].mean_accuracy;
    pass = pass && ordered;
    if (!detail.empty()) detail += "; ";
    detail += r[0].config.classifier + " M=0/1/2 " + pct(r[0].mean_accuracy) + "/" + pct(r[1].mean_accuracy) + "/" +
              pct(r[2].mean_accuracy) + (ordered ? "" : " (ordering violated)");
  }
  return {pass, detail};
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Outcome cluster_structure() {
  const auto& model = benchmark_model();
  const auto& novel = benchmark().novel;
  double own = 0, between = 0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto support = data::gather(novel, data::sample_episode(novel, 5, 5, 0, 300 + t).support);
    const auto generated = hallucinator::hallucinate_support(model, support, 10, 400 + t);
    std::vector<std::vector<double>> protos;
    for (const auto& cls : support) protos.push_back(eval::gap_vector(hallucinator::tensor_prototype(cls)));
    double task_own = 0, task_between = 0;
    for (std::size_t j = 0; j < 5; ++j)
      for (const auto& g : generated[j]) task_own += euclidean(eval::gap_vector(g), protos[j]) / 50.0;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) task_between += euclidean(protos[i], protos[j]) / 10.0;
    own += task_own / 20.0;
    between += task_between / 20.0;
  }
  const double ratio = own / between;
  return {ratio < 0.5, "generated-to-own-prototype " + fixed(own) + ", between prototypes " + fixed(between) +
                           ", ratio " + fixed(ratio, 3)};
}

Outcome statistics() {
  const double ci = eval::ci95_half_width(std::vector<double>{1.0, 0.0});
  Rng rng(9);
  std::size_t exact = 0;
  for (int r = 0; r < 20; ++r) {
    const auto n = std::uniform_int_distribution<std::size_t>(2, 600)(rng);
    std::vector<double> acc(n);
    for (auto& a : acc) a = static_cast<double>(std::uniform_int_distribution<int>(0, 75)(rng)) / 75.0;
    const auto report = eval::EvalReport::from_json(eval::EvalReport::from_accuracies({}, acc).to_json());
    const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(n);
    const double ss =
        std::accumulate(acc.begin(), acc.end(), 0.0, [&](double s, double a) { return s + (a - mean) * (a - mean); });
    const double half = 1.96 * std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
    exact += report.mean_accuracy == mean && report.ci95 == half && report.task_count == n;
  }
  return {std::abs(ci - 0.980) <= 0.001 && exact == 20,
          "CI{1,0} = " + fixed(ci, 6) + ", " + std::to_string(exact) + "/20 reports match the oracle exactly"};
}

struct CliRun {
  int code;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::cli_main(args, out, err);
  return {code, err.str()};
}

std::string slurp(const std::filesystem::path& p) { return testing::read_text(p.string()); }

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("tfh_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(root);
  const std::string config = (fs::path(TFH_SOURCE_DIR) / "configs" / "benchmark.json").string();
  std::vector<std::string> reports;
  std::string failure;
  for (int run = 0; run < 2 && failure.empty(); ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    fs::create_directories(dir);
    const auto p = [&](const char* name) { return (dir / name).string(); };
    std::vector<std::vector<std::string>> steps = {
        {"gen-synthetic", "--config", config, "--seed", "42", "--base-out", p("base.fts"), "--novel-out",
         p("novel.fts")},
        {"train-hallucinator", "--config", config, "--seed", "42", "--features", p("base.fts"), "--epochs", "5",
         "--episodes-per-epoch", "40", "--out", p("model.tfhm")},
    };
    for (const char* threads : {"1", "4"}) {
      steps.push_back({"evaluate", "--config", config, "--seed", "42", "--features", p("novel.fts"), "--model",
                       p("model.tfhm"), "--generated-per-class", "2", "--tasks", "100", "--threads", threads,
                       "--out", (dir / (std::string("report_t") + threads + ".json")).string()});
    }
    for (const auto& step : steps) {
      const auto r = cli(step);
      if (r.code != 0) {
        failure = step[0] + " exited " + std::to_string(r.code) + ": " + r.err;
        break;
      }
    }
    if (failure.empty()) {
      reports.push_back(slurp(dir / "report_t1.json"));
      reports.push_back(slurp(dir / "report_t4.json"));
      if (run == 1 && slurp(root / "run0" / "model.tfhm") != slurp(dir / "model.tfhm")) {
        failure = "hallucinator checkpoints differ between runs";
      }
    }
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  if (!failure.empty()) return {false, failure};
  const bool same = std::all_of(reports.begin(), reports.end(), [&](const auto& r) { return r == reports[0]; });
  return {same && !reports[0].empty(),
          std::to_string(reports.size()) + " reports (2 runs x threads 1 and 4) " +
              (same ? "byte-identical" : "DIFFER") + ", " + std::to_string(reports[0].size()) + " bytes each"};
}

std::size_t rejected_flips(const std::vector<std::uint8_t>& bytes, std::size_t header,
                           const std::function<void(const std::vector<std::uint8_t>&)>& decode) {
  std::size_t rejected = 0;
  for (std::size_t at = 0; at < header; ++at) {
    for (std::uint8_t mask : {0x01, 0x80, 0xFF}) {
      auto bad = bytes;
      bad[at] ^= mask;
      try {
        decode(bad);
      } catch (const ParseError&) {
        ++rejected;
      } catch (const Error&) {
      }
    }
  }
  return rejected;
}

Outcome format_robustness() {
  const auto& set = benchmark().novel;
  const auto fts = data::encode_feature_set(set);
  const auto back = data::decode_feature_set(fts);
  bool fts_exact = back.size() == set.size() && back.num_classes() == set.num_classes() &&
                   data::encode_feature_set(back) == fts;
  for (std::size_t i = 0; fts_exact && i < set.size(); ++i)
    fts_exact = back.label(i) == set.label(i) && nn::bit_equal(back.feature(i), set.feature(i));

  const auto& model = benchmark_model();
  const auto metadata = model.config().to_json();
  const auto ckpt = nn::encode_checkpoint(model.params(), metadata);
  auto decoded = nn::decode_checkpoint(ckpt);
  const hallucinator::HallucinatorModel restored(hallucinator::HallucinatorConfig::from_json(decoded.metadata),
                                                 std::move(decoded.params));
  const bool ckpt_exact = nn::bit_equal(restored.params(), model.params()) && restored.config() == model.config() &&
                          nn::encode_checkpoint(restored.params(), restored.config().to_json()) == ckpt;

  const std::size_t fts_header = data::kFeatureFileHeaderBytes;
  const std::size_t ckpt_header = 4 + 2 + 4 + metadata.size() + 4 + 4;
  const auto fts_rejected =
      rejected_flips(fts, fts_header, [](const auto& b) { data::decode_feature_set(b); });
  const auto ckpt_rejected = rejected_flips(ckpt, ckpt_header, [](const auto& b) {
    auto ck = nn::decode_checkpoint(b);
    hallucinator::HallucinatorModel(hallucinator::HallucinatorConfig::from_json(ck.metadata), std::move(ck.params));
  });
  const bool pass = fts_exact && ckpt_exact && fts_rejected == 3 * fts_header && ckpt_rejected == 3 * ckpt_header;
  return {pass, std::string("FTS1 round-trip ") + (fts_exact ? "bit-exact" : "DIFFERS") + ", TFHM round-trip " +
                    (ckpt_exact ? "bit-exact" : "DIFFERS") + ", header flips rejected with a parse error: FTS1 " +
                    std::to_string(fts_rejected) + "/" + std::to_string(3 * fts_header) + ", TFHM " +
                    std::to_string(ckpt_rejected) + "/" + std::to_string(3 * ckpt_header)};
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite: one pass/fail line per criterion"};
  std::vector<int> only;
  app.add_option("--only", only, "run just these criteria")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);
  set_log_handler(nullptr);
  tfh_silence_log();

  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<Criterion> criteria = {
      {1, "gradient suite", 60, gradient_suite},
      {2, "oracle equivalence", 30, oracle_equivalence},
      {3, "architecture fidelity", 5, architecture_fidelity},
      {4, "hallucinator learning", 180, hallucinator_learning},
      {5, "augmentation benefit", 300, augmentation_benefit},
      {6, "fine-tuning", 300, fine_tuning},
      {7, "robustness across classifiers", 600, classifier_robustness},
      {8, "cluster structure", 60, cluster_structure},
      {9, "statistics", inf, statistics},
      {10, "determinism", inf, determinism},
      {11, "format robustness", inf, format_robustness},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    std::string timing = fixed(secs, 1) + "s";
    if (std::isfinite(c.budget_seconds)) timing += " of " + fixed(c.budget_seconds, 0) + "s";
    std::printf("[%s] criterion %d %s: %s [%s%s]\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(),
                timing.c_str(), in_budget ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
