#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eval/prototypes.hpp"

namespace tfh::eval {

enum class ClassifierKind { kPrototype, kLogistic, kSvm };

const char* classifier_name(ClassifierKind kind);
ClassifierKind parse_classifier(const std::string& name);

struct LinearClassifierConfig {
  double l2 = 1.0;
  std::size_t max_steps = 2000;
  double learning_rate = 0.1;
  /// Step size at iteration t is learning_rate / (1 + decay * t) for the
  /// logistic model and learning_rate / sqrt(1 + t) for the SVM.
  double decay = 1e-3;
  double tolerance = 1e-5;

  void validate() const;
};

/// Scores are W x + b with W stored row-major as classes x dim.
struct LinearModel {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  bool converged = false;
  std::size_t steps = 0;
  /// Objective after each accepted step (logistic) or the best objective per
  /// step summed over the one-vs-rest problems (SVM); entry 0 is the start.
  std::vector<double> objective_history;

  std::vector<double> scores(std::span<const double> x) const;
  /// Argmax score, ties to the lowest class index.
  std::size_t predict(std::span<const double> x) const;
};

/// (1/n) * (sum_i CE(W x_i + b, y_i) + l2/2 * ||W||^2). Gradients are
/// written when the pointers are non-null (sized like weights and bias).
double logistic_objective(const PooledData& data, std::span<const double> weights,
                          std::span<const double> bias, double l2, std::vector<double>* grad_w,
                          std::vector<double>* grad_b);

/// Multinomial logistic regression by full-batch gradient descent with
/// backtracking; stops once the gradient norm falls below the tolerance.
LinearModel fit_logistic(const PooledData& data, const LinearClassifierConfig& cfg = {});

/// One-vs-rest L2-regularized hinge loss by sub-gradient descent, keeping the
/// best iterate of each binary problem. Converged when no binary problem has
/// improved by more than the tolerance (relative) over the last 200 steps.
LinearModel fit_svm(const PooledData& data, const LinearClassifierConfig& cfg = {});

LinearModel fit_linear_classifier(ClassifierKind kind, const AugmentedSupport& aug,
                                  const LinearClassifierConfig& cfg = {});

}  // namespace tfh::eval
