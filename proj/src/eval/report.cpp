#include "eval/report.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "common/error.hpp"

namespace tfh::eval {

namespace {

nlohmann::json fingerprint_json(const EvalFingerprint& f) {
  nlohmann::json j;
  j["classifier"] = f.classifier;
  j["n_way"] = f.n_way;
  j["k_shot"] = f.k_shot;
  j["queries_per_class"] = f.queries_per_class;
  j["generated_per_class"] = f.generated_per_class;
  j["tasks"] = f.tasks;
  j["seed"] = f.seed;
  j["fine_tune"] = f.fine_tune;
  j["fine_tune_steps"] = f.fine_tune_steps;
  j["fine_tune_learning_rate"] = f.fine_tune_learning_rate;
  j["fine_tune_generated"] = f.fine_tune_generated;
  j["model"] = f.model;
  j["source_domain"] = f.source_domain;
  j["target_domain"] = f.target_domain;
  return j;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string EvalFingerprint::canonical_json() const { return fingerprint_json(*this).dump(); }

std::string EvalFingerprint::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_json()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double ci95_half_width(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0;
  for (double v : values) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return 1.96 * sd / std::sqrt(static_cast<double>(n));
}

EvalReport EvalReport::from_accuracies(EvalFingerprint config, std::vector<double> accuracies) {
  EvalReport r;
  r.config = std::move(config);
  r.per_task_accuracies = std::move(accuracies);
  r.task_count = r.per_task_accuracies.size();
  r.mean_accuracy = mean_of(r.per_task_accuracies);
  r.ci95 = ci95_half_width(r.per_task_accuracies);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["config_fingerprint"] = config.hash();
  j["config"] = fingerprint_json(config);
  j["task_count"] = task_count;
  j["mean_accuracy"] = mean_accuracy;
  j["ci95"] = ci95;
  j["per_task_accuracies"] = per_task_accuracies;
  return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    const auto& c = j.at("config");
    r.config.classifier = c.at("classifier").get<std::string>();
    r.config.n_way = c.at("n_way").get<std::size_t>();
    r.config.k_shot = c.at("k_shot").get<std::size_t>();
    r.config.queries_per_class = c.at("queries_per_class").get<std::size_t>();
    r.config.generated_per_class = c.at("generated_per_class").get<std::size_t>();
    r.config.tasks = c.at("tasks").get<std::size_t>();
    r.config.seed = c.at("seed").get<std::uint64_t>();
    r.config.fine_tune = c.at("fine_tune").get<bool>();
    r.config.fine_tune_steps = c.at("fine_tune_steps").get<std::size_t>();
    r.config.fine_tune_learning_rate = c.at("fine_tune_learning_rate").get<double>();
    r.config.fine_tune_generated = c.at("fine_tune_generated").get<std::size_t>();
    r.config.model = c.at("model").get<std::string>();
    r.config.source_domain = c.at("source_domain").get<std::string>();
    r.config.target_domain = c.at("target_domain").get<std::string>();
    r.task_count = j.at("task_count").get<std::size_t>();
    r.mean_accuracy = j.at("mean_accuracy").get<double>();
    r.ci95 = j.at("ci95").get<double>();
    r.per_task_accuracies = j.at("per_task_accuracies").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid report JSON: ") + e.what(), 0);
  }
}

std::string EvalReport::csv_header() {
  return "fingerprint,classifier,n_way,k_shot,generated_per_class,fine_tune,tasks,mean_accuracy,ci95";
}

std::string EvalReport::csv_row() const {
  return config.hash() + "," + config.classifier + "," + std::to_string(config.n_way) + "," +
         std::to_string(config.k_shot) + "," + std::to_string(config.generated_per_class) + "," +
         (config.fine_tune ? "1" : "0") + "," + std::to_string(task_count) + "," + fmt(mean_accuracy) + "," +
         fmt(ci95);
}

}  // namespace tfh::eval
