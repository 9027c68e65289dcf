#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "nn/params.hpp"

namespace tfh::nn {

enum class OptimizerKind { kSgdMomentum, kAdam };

struct SgdConfig {
  float learning_rate = 0.05f;
  float momentum = 0.9f;
  float weight_decay = 5e-4f;
};

struct AdamConfig {
  float learning_rate = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

/// Optimizer state: hyperparameters plus per-parameter moment buffers, which are
/// created lazily on the first step with shapes matching the parameters.
/// Every step consumes and zeroes the accumulated gradients.
class Optimizer {
 public:
  static Optimizer sgd(const SgdConfig& cfg);
  static Optimizer adam(const AdamConfig& cfg);

  OptimizerKind kind() const { return kind_; }
  float learning_rate() const { return lr_; }
  void set_learning_rate(float lr) { lr_ = lr; }
  std::uint64_t step_count() const { return steps_; }

  void step(ParamStore& params);

 private:
  Optimizer() = default;

  OptimizerKind kind_ = OptimizerKind::kAdam;
  float lr_ = 0;
  SgdConfig sgd_;
  AdamConfig adam_;
  std::uint64_t steps_ = 0;
  std::map<std::string, Tensor, std::less<>> first_;
  std::map<std::string, Tensor, std::less<>> second_;
};

}  // namespace tfh::nn
