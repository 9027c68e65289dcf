#include "nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tfh::nn {

double mse_loss(std::span<const std::pair<const Tensor*, const Tensor*>> pairs, double divisor) {
  if (!(divisor > 0)) throw InvalidArgument("mse: divisor must be positive");
  double acc = 0;
  for (const auto& [a, b] : pairs) {
    if (a->shape() != b->shape()) {
      throw ShapeError("mse: shape mismatch " + shape_str(a->shape()) + " vs " +
                       shape_str(b->shape()));
    }
    for (std::size_t i = 0; i < a->size(); ++i) {
      const double d = static_cast<double>((*a)[i]) - (*b)[i];
      acc += d * d;
    }
  }
  return acc / divisor;
}

double cross_entropy_loss(std::span<const float> logits, std::size_t label) {
  if (logits.empty()) throw ShapeError("cross_entropy: empty logits");
  if (label >= logits.size()) {
    throw InvalidArgument("cross_entropy: label " + std::to_string(label) + " >= class count " +
                          std::to_string(logits.size()));
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (float v : logits) sum += std::exp(v - mx);
  return mx + std::log(sum) - logits[label];
}

namespace {
void check_distribution(std::span<const double> p, const char* role) {
  double sum = 0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument(std::string("kl_divergence: ") + role +
                            " probability outside [0,1]: " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-5) {
    throw InvalidArgument(std::string("kl_divergence: ") + role + " sums to " +
                          std::to_string(sum) + ", not 1");
  }
}
}  // namespace

double kl_divergence(std::span<const double> student, std::span<const double> teacher) {
  if (student.size() != teacher.size()) {
    throw ShapeError("kl_divergence: lengths " + std::to_string(student.size()) + " and " +
                     std::to_string(teacher.size()));
  }
  check_distribution(student, "student");
  check_distribution(teacher, "teacher");
  double acc = 0;
  for (std::size_t i = 0; i < student.size(); ++i) {
    if (student[i] > 0) acc += student[i] * std::log(student[i] / teacher[i]);
  }
  return acc;
}

std::vector<double> softmax(std::span<const float> logits, double temperature) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  double mx = logits[0] / temperature;
  for (float v : logits) mx = std::max(mx, v / temperature);
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] / temperature - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

}  // namespace tfh::nn
