#include "nn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tfh::nn {
namespace {

struct Range {
  std::size_t lo;
  std::size_t hi;
};

// Output positions o in [0, out) whose input coordinate o*stride + k - pad lies in
// [0, in).
Range valid_outputs(std::size_t out, std::size_t in, std::size_t k, std::size_t stride,
                    std::size_t pad) {
  std::size_t lo = 0;
  if (pad > k) lo = (pad - k + stride - 1) / stride;
  // largest o with o*stride + k - pad <= in - 1
  if (in + pad < k + 1) return {0, 0};
  std::size_t hi = (in - 1 + pad - k) / stride + 1;
  if (hi > out) hi = out;
  if (lo > hi) lo = hi;
  return {lo, hi};
}

template <typename T>
void require_rank(const BasicTensor<T>& t, std::size_t rank, const char* op, const char* role) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + role + " must have rank " + std::to_string(rank) +
                     ", got " + shape_str(t.shape()));
  }
}

template <typename T>
void require_bias(const BasicTensor<T>& b, std::size_t n, const char* op) {
  if (b.rank() != 1 || b.extent(0) != n) {
    throw ShapeError(std::string(op) + ": bias shape " + shape_str(b.shape()) + " does not match " +
                     std::to_string(n) + " output channels");
  }
}

template <typename T>
void require_same_shape(const BasicTensor<T>& t, const Shape& s, const char* op, const char* role) {
  if (t.shape() != s) {
    throw ShapeError(std::string(op) + ": " + role + " shape " + shape_str(t.shape()) +
                     " does not match expected " + shape_str(s));
  }
}

}  // namespace

namespace {

// Unfolds a batch of n x c x H x W images into a (c*kh*kw) x (n*gh*gw) matrix
// whose column (s, gy, gx) holds the patch at grid position (gy, gx).
template <typename T>
std::vector<T> im2col(const T* img, std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                      std::size_t kh, std::size_t kw, std::size_t stride, std::size_t pad,
                      std::size_t gh, std::size_t gw) {
  const std::size_t cols = n * gh * gw;
  std::vector<T> out(c * kh * kw * cols, T{0});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < kh; ++ky) {
      const Range ry = valid_outputs(gh, h, ky, stride, pad);
      for (std::size_t kx = 0; kx < kw; ++kx) {
        const Range rx = valid_outputs(gw, w, kx, stride, pad);
        T* row = out.data() + ((ch * kh + ky) * kw + kx) * cols;
        for (std::size_t s = 0; s < n; ++s) {
          const T* plane = img + (s * c + ch) * h * w;
          T* dst = row + s * gh * gw;
          for (std::size_t gy = ry.lo; gy < ry.hi; ++gy) {
            const std::size_t base = (gy * stride + ky - pad) * w + kx - pad;
            for (std::size_t gx = rx.lo; gx < rx.hi; ++gx) dst[gy * gw + gx] = plane[base + gx * stride];
          }
        }
      }
    }
  }
  return out;
}

// Adjoint of im2col: scatters the matrix back onto the images, accumulating.
template <typename T>
void col2im(const T* m, std::size_t n, std::size_t c, std::size_t h, std::size_t w, std::size_t kh,
            std::size_t kw, std::size_t stride, std::size_t pad, std::size_t gh, std::size_t gw, T* img) {
  const std::size_t cols = n * gh * gw;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < kh; ++ky) {
      const Range ry = valid_outputs(gh, h, ky, stride, pad);
      for (std::size_t kx = 0; kx < kw; ++kx) {
        const Range rx = valid_outputs(gw, w, kx, stride, pad);
        const T* row = m + ((ch * kh + ky) * kw + kx) * cols;
        for (std::size_t s = 0; s < n; ++s) {
          T* plane = img + (s * c + ch) * h * w;
          const T* src = row + s * gh * gw;
          for (std::size_t gy = ry.lo; gy < ry.hi; ++gy) {
            const std::size_t base = (gy * stride + ky - pad) * w + kx - pad;
            for (std::size_t gx = rx.lo; gx < rx.hi; ++gx) plane[base + gx * stride] += src[gy * gw + gx];
          }
        }
      }
    }
  }
}

// n x c x p (batch-major) <-> c x (n*p) (channel-major).
template <typename T>
std::vector<T> to_channel_major(const T* x, std::size_t n, std::size_t c, std::size_t p) {
  std::vector<T> out(n * c * p);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch)
      std::copy_n(x + (s * c + ch) * p, p, out.data() + ch * n * p + s * p);
  return out;
}

template <typename T>
void add_batch_major(const T* m, std::size_t n, std::size_t c, std::size_t p, T* x) {
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* src = m + ch * n * p + s * p;
      T* dst = x + (s * c + ch) * p;
      for (std::size_t i = 0; i < p; ++i) dst[i] += src[i];
    }
}

template <typename T>
inline void axpy(T* __restrict y, const T* __restrict x, T a, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) y[i] += a * x[i];
}

// Eight interleaved partial sums, combined in a fixed order.
template <typename T>
inline T dot(const T* __restrict a, const T* __restrict b, std::size_t len) {
  T part[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8)
    for (std::size_t l = 0; l < 8; ++l) part[l] += a[i + l] * b[i + l];
  T acc = ((part[0] + part[1]) + (part[2] + part[3])) + ((part[4] + part[5]) + (part[6] + part[7]));
  for (; i < len; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void add_bias_grad(const BasicTensor<T>& dy, std::size_t n, std::size_t co, std::size_t p, BasicTensor<T>* db) {
  for (std::size_t oc = 0; oc < co; ++oc) {
    T acc = 0;
    for (std::size_t s = 0; s < n; ++s) {
      const T* g = dy.ptr() + (s * co + oc) * p;
      for (std::size_t i = 0; i < p; ++i) acc += g[i];
    }
    (*db)[oc] += acc;
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& b, std::size_t stride, std::size_t padding) {
  require_rank(x, 4, "conv2d", "input");
  require_rank(w, 4, "conv2d", "weights");
  if (stride == 0) throw ShapeError("conv2d: stride must be >= 1");
  const std::size_t n = x.extent(0), ci = x.extent(1), h = x.extent(2), wd = x.extent(3);
  const std::size_t co = w.extent(0), kh = w.extent(2), kw = w.extent(3);
  if (w.extent(1) != ci) {
    throw ShapeError("conv2d: input has " + std::to_string(ci) + " channels (input " +
                     shape_str(x.shape()) + ") but weights expect " + std::to_string(w.extent(1)) +
                     " (weights " + shape_str(w.shape()) + ")");
  }
  if (h + 2 * padding < kh || wd + 2 * padding < kw) {
    throw ShapeError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                     " larger than padded input " + shape_str(x.shape()));
  }
  require_bias(b, co, "conv2d");
  const std::size_t ho = conv_out_extent(h, kh, stride, padding);
  const std::size_t wo = conv_out_extent(wd, kw, stride, padding);
  const std::size_t q = ci * kh * kw, p = n * ho * wo;
  const auto cols = im2col(x.ptr(), n, ci, h, wd, kh, kw, stride, padding, ho, wo);
  std::vector<T> ym(co * p);
  for (std::size_t oc = 0; oc < co; ++oc) {
    T* row = ym.data() + oc * p;
    std::fill_n(row, p, b[oc]);
    const T* wrow = w.ptr() + oc * q;
    for (std::size_t k = 0; k < q; ++k) axpy(row, cols.data() + k * p, wrow[k], p);
  }
  BasicTensor<T> y({n, co, ho, wo});
  add_batch_major(ym.data(), n, co, ho * wo, y.ptr());
  return y;
}

template <typename T>
void conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                     std::size_t stride, std::size_t padding, BasicTensor<T>* dx,
                     BasicTensor<T>* dw, BasicTensor<T>* db) {
  const std::size_t n = x.extent(0), ci = x.extent(1), h = x.extent(2), wd = x.extent(3);
  const std::size_t co = w.extent(0), kh = w.extent(2), kw = w.extent(3);
  const std::size_t ho = conv_out_extent(h, kh, stride, padding);
  const std::size_t wo = conv_out_extent(wd, kw, stride, padding);
  require_same_shape(dy, {n, co, ho, wo}, "conv2d backward", "output gradient");
  if (dx) require_same_shape(*dx, x.shape(), "conv2d backward", "input gradient");
  if (dw) require_same_shape(*dw, w.shape(), "conv2d backward", "weight gradient");
  if (db) require_same_shape(*db, {co}, "conv2d backward", "bias gradient");
  const std::size_t q = ci * kh * kw, p = n * ho * wo;
  if (db) add_bias_grad(dy, n, co, ho * wo, db);
  if (!dx && !dw) return;
  const auto gm = to_channel_major(dy.ptr(), n, co, ho * wo);
  if (dw) {
    const auto cols = im2col(x.ptr(), n, ci, h, wd, kh, kw, stride, padding, ho, wo);
    for (std::size_t oc = 0; oc < co; ++oc)
      for (std::size_t k = 0; k < q; ++k)
        (*dw)[oc * q + k] += dot(gm.data() + oc * p, cols.data() + k * p, p);
  }
  if (dx) {
    std::vector<T> dcols(q * p, T{0});
    for (std::size_t k = 0; k < q; ++k) {
      T* row = dcols.data() + k * p;
      for (std::size_t oc = 0; oc < co; ++oc) axpy(row, gm.data() + oc * p, w[oc * q + k], p);
    }
    col2im(dcols.data(), n, ci, h, wd, kh, kw, stride, padding, ho, wo, dx->ptr());
  }
}

template <typename T>
BasicTensor<T> tconv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                               const BasicTensor<T>& b, std::size_t stride) {
  require_rank(x, 4, "tconv2d", "input");
  require_rank(w, 4, "tconv2d", "weights");
  if (stride == 0) throw ShapeError("tconv2d: stride must be >= 1");
  const std::size_t n = x.extent(0), ci = x.extent(1), h = x.extent(2), wd = x.extent(3);
  const std::size_t co = w.extent(1), kh = w.extent(2), kw = w.extent(3);
  if (w.extent(0) != ci) {
    throw ShapeError("tconv2d: input has " + std::to_string(ci) + " channels (input " +
                     shape_str(x.shape()) + ") but weights expect " + std::to_string(w.extent(0)) +
                     " (weights " + shape_str(w.shape()) + ")");
  }
  require_bias(b, co, "tconv2d");
  const std::size_t ho = tconv_out_extent(h, kh, stride);
  const std::size_t wo = tconv_out_extent(wd, kw, stride);
  const std::size_t q = co * kh * kw, p = n * h * wd;
  const auto xm = to_channel_major(x.ptr(), n, ci, h * wd);
  std::vector<T> m(q * p, T{0});
  for (std::size_t k = 0; k < q; ++k) {
    T* row = m.data() + k * p;
    for (std::size_t ic = 0; ic < ci; ++ic) axpy(row, xm.data() + ic * p, w[ic * q + k], p);
  }
  BasicTensor<T> y({n, co, ho, wo});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t oc = 0; oc < co; ++oc) std::fill_n(y.ptr() + (s * co + oc) * ho * wo, ho * wo, b[oc]);
  col2im(m.data(), n, co, ho, wo, kh, kw, stride, 0, h, wd, y.ptr());
  return y;
}

template <typename T>
void tconv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                      std::size_t stride, BasicTensor<T>* dx, BasicTensor<T>* dw,
                      BasicTensor<T>* db) {
  const std::size_t n = x.extent(0), ci = x.extent(1), h = x.extent(2), wd = x.extent(3);
  const std::size_t co = w.extent(1), kh = w.extent(2), kw = w.extent(3);
  const std::size_t ho = tconv_out_extent(h, kh, stride);
  const std::size_t wo = tconv_out_extent(wd, kw, stride);
  require_same_shape(dy, {n, co, ho, wo}, "tconv2d backward", "output gradient");
  if (dx) require_same_shape(*dx, x.shape(), "tconv2d backward", "input gradient");
  if (dw) require_same_shape(*dw, w.shape(), "tconv2d backward", "weight gradient");
  if (db) require_same_shape(*db, {co}, "tconv2d backward", "bias gradient");
  const std::size_t q = co * kh * kw, p = n * h * wd;
  if (db) add_bias_grad(dy, n, co, ho * wo, db);
  if (!dx && !dw) return;
  const auto gcols = im2col(dy.ptr(), n, co, ho, wo, kh, kw, stride, 0, h, wd);
  if (dw) {
    const auto xm = to_channel_major(x.ptr(), n, ci, h * wd);
    for (std::size_t ic = 0; ic < ci; ++ic)
      for (std::size_t k = 0; k < q; ++k)
        (*dw)[ic * q + k] += dot(xm.data() + ic * p, gcols.data() + k * p, p);
  }
  if (dx) {
    std::vector<T> dxm(ci * p, T{0});
    for (std::size_t ic = 0; ic < ci; ++ic) {
      T* row = dxm.data() + ic * p;
      for (std::size_t k = 0; k < q; ++k) axpy(row, gcols.data() + k * p, w[ic * q + k], p);
    }
    add_batch_major(dxm.data(), n, ci, h * wd, dx->ptr());
  }
}

template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& b) {
  require_rank(x, 2, "linear", "input");
  require_rank(w, 2, "linear", "weights");
  const std::size_t n = x.extent(0), in = x.extent(1), out = w.extent(0);
  if (w.extent(1) != in) {
    throw ShapeError("linear: input length " + std::to_string(in) + " (input " +
                     shape_str(x.shape()) + ") does not match weights " + shape_str(w.shape()));
  }
  require_bias(b, out, "linear");
  BasicTensor<T> y({n, out});
  for (std::size_t s = 0; s < n; ++s) {
    const T* xr = x.ptr() + s * in;
    for (std::size_t o = 0; o < out; ++o) {
      const T* wr = w.ptr() + o * in;
      T acc = 0;
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
      y[s * out + o] = acc + b[o];
    }
  }
  return y;
}

template <typename T>
void linear_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                     BasicTensor<T>* dx, BasicTensor<T>* dw, BasicTensor<T>* db) {
  const std::size_t n = x.extent(0), in = x.extent(1), out = w.extent(0);
  require_same_shape(dy, {n, out}, "linear backward", "output gradient");
  for (std::size_t s = 0; s < n; ++s) {
    const T* xr = x.ptr() + s * in;
    const T* gr = dy.ptr() + s * out;
    for (std::size_t o = 0; o < out; ++o) {
      const T g = gr[o];
      if (db) (*db)[o] += g;
      const T* wr = w.ptr() + o * in;
      if (dx) {
        T* dxr = dx->ptr() + s * in;
        for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
      }
      if (dw) {
        T* dwr = dw->ptr() + o * in;
        for (std::size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
      }
    }
  }
}

template <typename T>
BasicTensor<T> activation_forward(const BasicTensor<T>& x, Activation kind) {
  BasicTensor<T> y = x;
  if (kind == Activation::kRelu) {
    for (auto& v : y.data()) v = v > T{0} ? v : T{0};
  } else {
    // Clamped so that the codomain stays strictly inside (0, 1) even where the
    // exact value rounds to 0 or 1.
    const T lo = std::numeric_limits<T>::min();
    const T hi = std::nextafter(T{1}, T{0});
    for (auto& v : y.data()) {
      T s;
      if (v >= T{0}) {
        s = T{1} / (T{1} + std::exp(-v));
      } else {
        const T e = std::exp(v);
        s = e / (T{1} + e);
      }
      v = s < lo ? lo : (s > hi ? hi : s);
    }
  }
  return y;
}

template <typename T>
void activation_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy, Activation kind,
                         BasicTensor<T>* dx) {
  require_same_shape(dy, y.shape(), "activation backward", "output gradient");
  if (!dx) return;
  const std::size_t n = y.size();
  if (kind == Activation::kRelu) {
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] > T{0}) (*dx)[i] += dy[i];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) (*dx)[i] += dy[i] * y[i] * (T{1} - y[i]);
  }
}

template <typename T>
BasicTensor<T> gap_forward(const BasicTensor<T>& x) {
  require_rank(x, 4, "gap", "input");
  const std::size_t n = x.extent(0), c = x.extent(1), hw = x.extent(2) * x.extent(3);
  BasicTensor<T> y({n, c});
  for (std::size_t i = 0; i < n * c; ++i) {
    const T* p = x.ptr() + i * hw;
    T acc = 0;
    for (std::size_t j = 0; j < hw; ++j) acc += p[j];
    y[i] = acc / static_cast<T>(hw);
  }
  return y;
}

template <typename T>
void gap_backward(const Shape& x_shape, const BasicTensor<T>& dy, BasicTensor<T>* dx) {
  const std::size_t n = x_shape[0], c = x_shape[1], hw = x_shape[2] * x_shape[3];
  require_same_shape(dy, {n, c}, "gap backward", "output gradient");
  if (!dx) return;
  for (std::size_t i = 0; i < n * c; ++i) {
    const T g = dy[i] / static_cast<T>(hw);
    T* p = dx->ptr() + i * hw;
    for (std::size_t j = 0; j < hw; ++j) p[j] += g;
  }
}

#define TFH_INSTANTIATE(T)                                                                       \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                         const BasicTensor<T>&, std::size_t, std::size_t);      \
  template void conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                const BasicTensor<T>&, std::size_t, std::size_t,                \
                                BasicTensor<T>*, BasicTensor<T>*, BasicTensor<T>*);             \
  template BasicTensor<T> tconv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                          const BasicTensor<T>&, std::size_t);                  \
  template void tconv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                 const BasicTensor<T>&, std::size_t, BasicTensor<T>*,           \
                                 BasicTensor<T>*, BasicTensor<T>*);                             \
  template BasicTensor<T> linear_forward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                         const BasicTensor<T>&);                                \
  template void linear_backward(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*,        \
                                BasicTensor<T>*);                                               \
  template BasicTensor<T> activation_forward(const BasicTensor<T>&, Activation);                \
  template void activation_backward(const BasicTensor<T>&, const BasicTensor<T>&, Activation,   \
                                    BasicTensor<T>*);                                           \
  template BasicTensor<T> gap_forward(const BasicTensor<T>&);                                   \
  template void gap_backward(const Shape&, const BasicTensor<T>&, BasicTensor<T>*);

TFH_INSTANTIATE(float)
TFH_INSTANTIATE(double)
#undef TFH_INSTANTIATE

namespace {

Tensor add_batch(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank-" + std::to_string(rank) + " input, got " +
                     shape_str(t.shape()));
  }
  Shape s{1};
  s.insert(s.end(), t.shape().begin(), t.shape().end());
  return t.reshaped(std::move(s));
}

Tensor drop_batch(const Tensor& t) {
  Shape s(t.shape().begin() + 1, t.shape().end());
  return t.reshaped(std::move(s));
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  return drop_batch(conv2d_forward(add_batch(input, 3, "conv2d"), weights, bias, stride, padding));
}

Tensor tconv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
               std::size_t stride) {
  return drop_batch(tconv2d_forward(add_batch(input, 3, "tconv2d"), weights, bias, stride));
}

Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  return drop_batch(linear_forward(add_batch(input, 1, "linear"), weights, bias));
}

Tensor activation(const Tensor& input, Activation kind) {
  return activation_forward(input, kind);
}

Tensor gap(const Tensor& input) { return drop_batch(gap_forward(add_batch(input, 3, "gap"))); }

}  // namespace tfh::nn
