#pragma once

#include <cstddef>

#include "nn/tensor.hpp"

// Forward and backward kernels for the layer set used by the backbone and the
// hallucinator. Batched kernels take a leading batch axis (n x c x h x w for
// the convolutions, n x features for linear). Backward kernels accumulate into
// their outputs; pass nullptr for gradients that are not needed.
//
// All reductions run sequentially in a fixed order, so results are
// bit-reproducible for identical inputs.

namespace tfh::nn {

enum class Activation { kRelu, kSigmoid };

inline std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                   std::size_t padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

inline std::size_t tconv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride) {
  return (in - 1) * stride + kernel;
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& b, std::size_t stride, std::size_t padding);
template <typename T>
void conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                     std::size_t stride, std::size_t padding, BasicTensor<T>* dx,
                     BasicTensor<T>* dw, BasicTensor<T>* db);

/// Transposed convolution without padding. Weights are c_in x c_out x kh x kw,
/// so the forward pass is the input-gradient of conv2d with the same weights.
template <typename T>
BasicTensor<T> tconv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                               const BasicTensor<T>& b, std::size_t stride);
template <typename T>
void tconv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                      std::size_t stride, BasicTensor<T>* dx, BasicTensor<T>* dw,
                      BasicTensor<T>* db);

template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& b);
template <typename T>
void linear_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                     BasicTensor<T>* dx, BasicTensor<T>* dw, BasicTensor<T>* db);

template <typename T>
BasicTensor<T> activation_forward(const BasicTensor<T>& x, Activation kind);
/// Uses the forward output `y` (both activations have derivatives expressible in y).
template <typename T>
void activation_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy, Activation kind,
                         BasicTensor<T>* dx);

/// n x c x h x w -> n x c spatial mean.
template <typename T>
BasicTensor<T> gap_forward(const BasicTensor<T>& x);
template <typename T>
void gap_backward(const Shape& x_shape, const BasicTensor<T>& dy, BasicTensor<T>* dx);

// Single-example convenience forms (no batch axis).

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              std::size_t stride, std::size_t padding);
Tensor tconv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
               std::size_t stride);
Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias);
Tensor activation(const Tensor& input, Activation kind);
Tensor gap(const Tensor& input);

}  // namespace tfh::nn
