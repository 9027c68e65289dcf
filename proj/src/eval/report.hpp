#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tfh::eval {

/// Everything that determines an evaluation run's numbers.
struct EvalFingerprint {
  std::string classifier = "prototype";
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t queries_per_class = 15;
  std::size_t generated_per_class = 0;
  std::size_t tasks = 600;
  std::uint64_t seed = 0;
  bool fine_tune = false;
  std::size_t fine_tune_steps = 0;
  double fine_tune_learning_rate = 0;
  std::size_t fine_tune_generated = 0;
  /// Hallucinator variant ("none" without a model).
  std::string model = "none";
  std::string source_domain;
  std::string target_domain;

  /// Canonical JSON (sorted keys, no whitespace).
  std::string canonical_json() const;
  /// 16 hex digits of the FNV-1a hash of canonical_json().
  std::string hash() const;
};

double mean_of(std::span<const double> values);
/// 1.96 * unbiased sample standard deviation / sqrt(n); 0 when n < 2.
double ci95_half_width(std::span<const double> values);

struct EvalReport {
  EvalFingerprint config;
  std::vector<double> per_task_accuracies;
  std::size_t task_count = 0;
  double mean_accuracy = 0;
  double ci95 = 0;

  static EvalReport from_accuracies(EvalFingerprint config, std::vector<double> accuracies);

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);

  static std::string csv_header();
  std::string csv_row() const;
};

}  // namespace tfh::eval
