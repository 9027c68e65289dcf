#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "nn/graph.hpp"
#include "nn/params.hpp"
#include "nn/tensor.hpp"

namespace tfh::testing {

using GraphD = nn::BasicGraph<double>;

template <typename T = double>
nn::BasicTensor<T> random_tensor(const nn::Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  nn::BasicTensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

/// Values with magnitude in [0.1, 1] and random sign, away from ReLU's kink.
inline nn::TensorD random_away_from_zero(const nn::Shape& shape, Rng& rng) {
  std::uniform_real_distribution<double> mag(0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  nn::TensorD t(shape);
  for (auto& v : t.data()) v = sign(rng) ? mag(rng) : -mag(rng);
  return t;
}

template <typename T>
nn::BasicTensor<T> conv2d_reference(const nn::BasicTensor<T>& x, const nn::BasicTensor<T>& w,
                                    const nn::BasicTensor<T>& b, std::size_t stride, std::size_t pad) {
  const std::size_t n = x.extent(0), c = x.extent(1), h = x.extent(2), wd = x.extent(3);
  const std::size_t oc = w.extent(0), kh = w.extent(2), kw = w.extent(3);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
  nn::BasicTensor<T> y({n, oc, oh, ow});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < oc; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          T acc = b[o];
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t p = 0; p < kh; ++p)
              for (std::size_t q = 0; q < kw; ++q) {
                const long r = static_cast<long>(i * stride + p) - static_cast<long>(pad);
                const long col = static_cast<long>(j * stride + q) - static_cast<long>(pad);
                if (r < 0 || col < 0 || r >= static_cast<long>(h) || col >= static_cast<long>(wd)) continue;
                acc += w[((o * c + ch) * kh + p) * kw + q] *
                       x[((s * c + ch) * h + static_cast<std::size_t>(r)) * wd + static_cast<std::size_t>(col)];
              }
          y[((s * oc + o) * oh + i) * ow + j] = acc;
        }
  return y;
}

template <typename T>
nn::BasicTensor<T> tconv2d_reference(const nn::BasicTensor<T>& x, const nn::BasicTensor<T>& w,
                                     const nn::BasicTensor<T>& b, std::size_t stride) {
  const std::size_t n = x.extent(0), ic = x.extent(1), h = x.extent(2), wd = x.extent(3);
  const std::size_t oc = w.extent(1), kh = w.extent(2), kw = w.extent(3);
  const std::size_t oh = (h - 1) * stride + kh, ow = (wd - 1) * stride + kw;
  nn::BasicTensor<T> y({n, oc, oh, ow});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < oc; ++o)
      for (std::size_t i = 0; i < oh * ow; ++i) y[(s * oc + o) * oh * ow + i] = b[o];
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < ic; ++ch)
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < wd; ++j) {
          const T xv = x[((s * ic + ch) * h + i) * wd + j];
          for (std::size_t o = 0; o < oc; ++o)
            for (std::size_t p = 0; p < kh; ++p)
              for (std::size_t q = 0; q < kw; ++q)
                y[((s * oc + o) * oh + i * stride + p) * ow + j * stride + q] +=
                    xv * w[((ch * oc + o) * kh + p) * kw + q];
        }
  return y;
}

template <typename T>
double max_abs_diff(const nn::BasicTensor<T>& a, const nn::BasicTensor<T>& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

/// Squared distance of `out` to a fixed random target: turns any output into
/// a scalar whose gradient touches every element.
inline GraphD::Var project(GraphD& g, GraphD::Var out, std::uint64_t seed) {
  Rng rng(seed);
  return g.mse(out, g.constant(random_tensor(g.shape(out), rng)), 1.0);
}

struct GradCheck {
  /// max over parameters of ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-12)
  double rel_error = 0;
  std::size_t checked = 0;
};

/// Central differences over every element of every parameter in `params`.
inline GradCheck check_gradients(nn::ParamStoreD params, const std::function<GraphD::Var(GraphD&)>& loss,
                                 double h = 1e-6) {
  params.zero_grad();
  {
    GraphD g(&params);
    g.backward(loss(g));
  }
  GradCheck out;
  std::vector<std::string> names;
  for (const auto& [name, entry] : params) names.push_back(name);
  for (const auto& name : names) {
    auto& value = params.value(name);
    const auto& analytic = params.grad(name);
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double orig = value[i];
      value[i] = orig + h;
      double up, down;
      {
        GraphD g(static_cast<const nn::ParamStoreD*>(&params));
        up = g.value(loss(g))[0];
      }
      value[i] = orig - h;
      {
        GraphD g(static_cast<const nn::ParamStoreD*>(&params));
        down = g.value(loss(g))[0];
      }
      value[i] = orig;
      const double numeric = (up - down) / (2 * h);
      diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
      ++out.checked;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
    out.rel_error = std::max(out.rel_error, std::sqrt(diff2) / denom);
  }
  return out;
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("tfh_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace tfh::testing
