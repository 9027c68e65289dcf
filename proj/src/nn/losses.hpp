#pragma once

#include <span>
#include <utility>
#include <vector>

#include "nn/tensor.hpp"

// Value-level loss functions (no trace); the graph versions in graph.hpp
// compute the same quantities with gradients.

namespace tfh::nn {

/// (1/divisor) * sum over pairs of the squared Frobenius distance.
double mse_loss(std::span<const std::pair<const Tensor*, const Tensor*>> pairs, double divisor);

/// -log softmax(logits)[label], evaluated with a max-shifted log-sum-exp.
double cross_entropy_loss(std::span<const float> logits, std::size_t label);

/// sum_i s_i * log(s_i / t_i). Both arguments must be probability vectors.
double kl_divergence(std::span<const double> student, std::span<const double> teacher);

std::vector<double> softmax(std::span<const float> logits, double temperature = 1.0);

}  // namespace tfh::nn
