#include "nn/optim.hpp"

#include <cmath>

namespace tfh::nn {

Optimizer Optimizer::sgd(const SgdConfig& cfg) {
  Optimizer o;
  o.kind_ = OptimizerKind::kSgdMomentum;
  o.lr_ = cfg.learning_rate;
  o.sgd_ = cfg;
  return o;
}

Optimizer Optimizer::adam(const AdamConfig& cfg) {
  Optimizer o;
  o.kind_ = OptimizerKind::kAdam;
  o.lr_ = cfg.learning_rate;
  o.adam_ = cfg;
  return o;
}

void Optimizer::step(ParamStore& params) {
  ++steps_;
  for (auto& [name, e] : params) {
    auto& w = e.value;
    auto& g = e.grad;
    auto it = first_.find(name);
    if (it == first_.end()) {
      it = first_.emplace(name, Tensor(w.shape())).first;
      if (kind_ == OptimizerKind::kAdam) second_.emplace(name, Tensor(w.shape()));
    }
    auto& m = it->second;
    if (m.shape() != w.shape()) {
      throw ShapeError("optimizer state for '" + name + "' has shape " + shape_str(m.shape()) +
                       ", parameter has " + shape_str(w.shape()));
    }
    if (kind_ == OptimizerKind::kSgdMomentum) {
      const bool first_step = steps_ == 1;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const float gi = g[i] + sgd_.weight_decay * w[i];
        m[i] = first_step ? gi : sgd_.momentum * m[i] + gi;
        w[i] -= lr_ * m[i];
      }
    } else {
      auto& v = second_.at(name);
      const double bc1 = 1.0 - std::pow(static_cast<double>(adam_.beta1), static_cast<double>(steps_));
      const double bc2 = 1.0 - std::pow(static_cast<double>(adam_.beta2), static_cast<double>(steps_));
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = adam_.beta1 * m[i] + (1.0f - adam_.beta1) * g[i];
        v[i] = adam_.beta2 * v[i] + (1.0f - adam_.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + adam_.epsilon));
      }
    }
    g.fill(0.0f);
  }
}

}  // namespace tfh::nn
