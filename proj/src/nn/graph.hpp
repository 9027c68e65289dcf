#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nn/kernels.hpp"
#include "nn/params.hpp"

namespace tfh::nn {

/// Reverse-mode differentiation over a recorded trace.
///
/// Each operation evaluates eagerly and appends a node; `backward` walks the
/// nodes in reverse creation order (a valid topological order) and
/// accumulates parameter gradients into the bound ParamStore. A trace can be
/// differentiated once.
///
/// Tensors carry a leading batch axis: n x c x h x w for convolution and
/// pooling, n x features for linear layers and concatenation.
template <typename T>
class BasicGraph {
 public:
  struct Var {
    std::size_t id = std::numeric_limits<std::size_t>::max();
  };

  explicit BasicGraph(BasicParamStore<T>* params = nullptr) : params_(params) {}

  /// Inference-only trace over shared parameters; backward is rejected, so
  /// concurrent graphs may read one store.
  explicit BasicGraph(const BasicParamStore<T>* params)
      : params_(const_cast<BasicParamStore<T>*>(params)), read_only_(true) {}

  BasicGraph(const BasicGraph&) = delete;
  BasicGraph& operator=(const BasicGraph&) = delete;

  Var constant(BasicTensor<T> value) { return push(std::move(value), false, nullptr); }

  /// Leaf bound to a named parameter; repeated lookups share one node.
  Var param(const std::string& name) {
    if (!params_) throw StateError("graph has no parameter store bound");
    if (auto it = param_nodes_.find(name); it != param_nodes_.end()) return Var{it->second};
    auto& entry = params_->entry(name);
    Var v = push(entry.value, !read_only_, nullptr);
    if (!read_only_) nodes_[v.id].param = &entry;
    param_nodes_.emplace(name, v.id);
    return v;
  }

  const BasicTensor<T>& value(Var v) const { return node(v).value; }
  const Shape& shape(Var v) const { return node(v).value.shape(); }

  Var conv2d(Var x, Var w, Var b, std::size_t stride, std::size_t padding) {
    auto y = conv2d_forward(value(x), value(w), value(b), stride, padding);
    return push_op(std::move(y), {x, w, b}, [=](BasicGraph& g, std::size_t out) {
      conv2d_backward(g.value(x), g.value(w), g.nodes_[out].grad, stride, padding, g.grad_ptr(x),
                      g.grad_ptr(w), g.grad_ptr(b));
    });
  }

  Var tconv2d(Var x, Var w, Var b, std::size_t stride) {
    auto y = tconv2d_forward(value(x), value(w), value(b), stride);
    return push_op(std::move(y), {x, w, b}, [=](BasicGraph& g, std::size_t out) {
      tconv2d_backward(g.value(x), g.value(w), g.nodes_[out].grad, stride, g.grad_ptr(x),
                       g.grad_ptr(w), g.grad_ptr(b));
    });
  }

  Var linear(Var x, Var w, Var b) {
    auto y = linear_forward(value(x), value(w), value(b));
    return push_op(std::move(y), {x, w, b}, [=](BasicGraph& g, std::size_t out) {
      linear_backward(g.value(x), g.value(w), g.nodes_[out].grad, g.grad_ptr(x), g.grad_ptr(w),
                      g.grad_ptr(b));
    });
  }

  Var activation(Var x, Activation kind) {
    auto y = activation_forward(value(x), kind);
    return push_op(std::move(y), {x}, [=](BasicGraph& g, std::size_t out) {
      activation_backward(g.nodes_[out].value, g.nodes_[out].grad, kind, g.grad_ptr(x));
    });
  }
  Var relu(Var x) { return activation(x, Activation::kRelu); }
  Var sigmoid(Var x) { return activation(x, Activation::kSigmoid); }

  Var gap(Var x) {
    auto y = gap_forward(value(x));
    return push_op(std::move(y), {x}, [=](BasicGraph& g, std::size_t out) {
      gap_backward(g.shape(x), g.nodes_[out].grad, g.grad_ptr(x));
    });
  }

  /// n x ... -> n x (product of the rest).
  Var flatten(Var x) {
    const auto& s = shape(x);
    Shape target{s[0], shape_numel(s) / s[0]};
    return reshape_to(x, std::move(target));
  }

  /// n x ... -> n x per_example.
  Var reshape(Var x, const Shape& per_example) {
    Shape target{shape(x)[0]};
    target.insert(target.end(), per_example.begin(), per_example.end());
    return reshape_to(x, std::move(target));
  }

  /// Row-wise concatenation of n x a and n x b into n x (a + b).
  Var concat(Var a, Var b) {
    const auto& va = value(a);
    const auto& vb = value(b);
    if (va.rank() != 2 || vb.rank() != 2 || va.extent(0) != vb.extent(0)) {
      throw ShapeError("concat: incompatible shapes " + shape_str(va.shape()) + " and " +
                       shape_str(vb.shape()));
    }
    const std::size_t n = va.extent(0), ca = va.extent(1), cb = vb.extent(1);
    BasicTensor<T> y({n, ca + cb});
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(va.ptr() + r * ca, ca, y.ptr() + r * (ca + cb));
      std::copy_n(vb.ptr() + r * cb, cb, y.ptr() + r * (ca + cb) + ca);
    }
    return push_op(std::move(y), {a, b}, [=](BasicGraph& g, std::size_t out) {
      const auto& dy = g.nodes_[out].grad;
      if (auto* da = g.grad_ptr(a)) {
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t i = 0; i < ca; ++i) (*da)[r * ca + i] += dy[r * (ca + cb) + i];
      }
      if (auto* db = g.grad_ptr(b)) {
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t i = 0; i < cb; ++i) (*db)[r * cb + i] += dy[r * (ca + cb) + ca + i];
      }
    });
  }

  /// Repeats each leading-axis row `times` times consecutively.
  Var repeat_rows(Var x, std::size_t times) {
    if (times == 0) throw ShapeError("repeat_rows: times must be >= 1");
    const auto& vx = value(x);
    Shape s = vx.shape();
    const std::size_t rows = s[0], row = vx.size() / rows;
    s[0] = rows * times;
    BasicTensor<T> y(s);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t t = 0; t < times; ++t)
        std::copy_n(vx.ptr() + r * row, row, y.ptr() + (r * times + t) * row);
    return push_op(std::move(y), {x}, [=](BasicGraph& g, std::size_t out) {
      auto* dx = g.grad_ptr(x);
      if (!dx) return;
      const auto& dy = g.nodes_[out].grad;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t t = 0; t < times; ++t)
          for (std::size_t i = 0; i < row; ++i) (*dx)[r * row + i] += dy[(r * times + t) * row + i];
    });
  }

  Var add(Var a, Var b) {
    if (shape(a) != shape(b)) {
      throw ShapeError("add: shape mismatch " + shape_str(shape(a)) + " vs " + shape_str(shape(b)));
    }
    BasicTensor<T> y = value(a);
    const auto& vb = value(b);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += vb[i];
    return push_op(std::move(y), {a, b}, [=](BasicGraph& g, std::size_t out) {
      const auto& dy = g.nodes_[out].grad;
      if (auto* da = g.grad_ptr(a))
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i];
      if (auto* db = g.grad_ptr(b))
        for (std::size_t i = 0; i < dy.size(); ++i) (*db)[i] += dy[i];
    });
  }

  Var scale(Var a, T factor) {
    BasicTensor<T> y = value(a);
    for (auto& v : y.data()) v *= factor;
    return push_op(std::move(y), {a}, [=](BasicGraph& g, std::size_t out) {
      const auto& dy = g.nodes_[out].grad;
      if (auto* da = g.grad_ptr(a))
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += factor * dy[i];
    });
  }

  /// Sum of squared element differences divided by `divisor`.
  Var mse(Var a, Var b, T divisor) {
    if (shape(a) != shape(b)) {
      throw ShapeError("mse: shape mismatch " + shape_str(shape(a)) + " vs " + shape_str(shape(b)));
    }
    if (!(divisor > T{0})) throw InvalidArgument("mse: divisor must be positive");
    const auto& va = value(a);
    const auto& vb = value(b);
    T acc = 0;
    for (std::size_t i = 0; i < va.size(); ++i) {
      const T d = va[i] - vb[i];
      acc += d * d;
    }
    BasicTensor<T> y({1}, acc / divisor);
    return push_op(std::move(y), {a, b}, [=](BasicGraph& g, std::size_t out) {
      const T seed = g.nodes_[out].grad[0] * T{2} / divisor;
      const auto& xa = g.value(a);
      const auto& xb = g.value(b);
      auto* da = g.grad_ptr(a);
      auto* db = g.grad_ptr(b);
      for (std::size_t i = 0; i < xa.size(); ++i) {
        const T d = seed * (xa[i] - xb[i]);
        if (da) (*da)[i] += d;
        if (db) (*db)[i] -= d;
      }
    });
  }

  /// Mean over the batch of -log softmax(logits)[label].
  Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
    const auto& vl = value(logits);
    if (vl.rank() != 2 || vl.extent(0) != labels.size()) {
      throw ShapeError("cross_entropy: logits " + shape_str(vl.shape()) + " vs " +
                       std::to_string(labels.size()) + " labels");
    }
    const std::size_t n = vl.extent(0), c = vl.extent(1);
    for (auto y : labels) {
      if (y >= c) {
        throw InvalidArgument("cross_entropy: label " + std::to_string(y) + " >= class count " +
                              std::to_string(c));
      }
    }
    BasicTensor<T> probs({n, c});
    T total = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const T lse = log_softmax_row(vl.ptr() + r * c, c, T{1}, probs.ptr() + r * c);
      total += lse - vl[r * c + labels[r]];
    }
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    BasicTensor<T> y({1}, total / static_cast<T>(n));
    return push_op(std::move(y), {logits}, [=, probs = std::move(probs), lab = std::move(lab)](
                                               BasicGraph& g, std::size_t out) {
      auto* dl = g.grad_ptr(logits);
      if (!dl) return;
      const T seed = g.nodes_[out].grad[0] / static_cast<T>(n);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < c; ++i) {
          const T target = i == lab[r] ? T{1} : T{0};
          (*dl)[r * c + i] += seed * (probs[r * c + i] - target);
        }
      }
    });
  }

  /// Batch-mean KL(student || teacher) on temperature-softened softmax
  /// outputs, scaled by temperature^2. No gradient flows to the teacher.
  Var kl_divergence(Var student_logits, Var teacher_logits, T temperature) {
    const auto& vs = value(student_logits);
    const auto& vt = value(teacher_logits);
    if (vs.rank() != 2 || vs.shape() != vt.shape()) {
      throw ShapeError("kl_divergence: student " + shape_str(vs.shape()) + " vs teacher " +
                       shape_str(vt.shape()));
    }
    if (!(temperature > T{0})) throw InvalidArgument("kl_divergence: temperature must be > 0");
    const std::size_t n = vs.extent(0), c = vs.extent(1);
    BasicTensor<T> s_prob({n, c});
    BasicTensor<T> log_ratio({n, c});
    std::vector<T> t_prob(c);
    T total = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const T lse_s = log_softmax_row(vs.ptr() + r * c, c, temperature, s_prob.ptr() + r * c);
      const T lse_t = log_softmax_row(vt.ptr() + r * c, c, temperature, t_prob.data());
      T row = 0;
      for (std::size_t i = 0; i < c; ++i) {
        const T log_s = vs[r * c + i] / temperature - lse_s;
        const T log_t = vt[r * c + i] / temperature - lse_t;
        log_ratio[r * c + i] = log_s - log_t;
        row += s_prob[r * c + i] * (log_s - log_t);
      }
      total += row;
    }
    const T t2 = temperature * temperature;
    BasicTensor<T> y({1}, t2 * total / static_cast<T>(n));
    return push_op(
        std::move(y), {student_logits},
        [=, s_prob = std::move(s_prob), log_ratio = std::move(log_ratio)](BasicGraph& g,
                                                                          std::size_t out) {
          auto* ds = g.grad_ptr(student_logits);
          if (!ds) return;
          const T seed = g.nodes_[out].grad[0] * t2 / (static_cast<T>(n) * temperature);
          for (std::size_t r = 0; r < n; ++r) {
            T mean = 0;
            for (std::size_t i = 0; i < c; ++i) mean += s_prob[r * c + i] * log_ratio[r * c + i];
            for (std::size_t i = 0; i < c; ++i) {
              (*ds)[r * c + i] += seed * s_prob[r * c + i] * (log_ratio[r * c + i] - mean);
            }
          }
        });
  }

  /// Accumulates d(loss)/d(param) into the bound store's gradients.
  void backward(Var loss) {
    if (read_only_) throw StateError("backward on an inference-only trace");
    if (backward_done_) throw StateError("backward called twice on the same trace");
    auto& root = node(loss);
    if (root.value.size() != 1) {
      throw ShapeError("backward: loss must be a scalar, got " + shape_str(root.value.shape()));
    }
    backward_done_ = true;
    if (!root.requires_grad) return;
    root.grad = BasicTensor<T>(root.value.shape(), T{1});
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      auto& nd = nodes_[i];
      if (nd.grad.empty()) continue;
      if (nd.backward) nd.backward(*this, i);
      if (nd.param) {
        auto& pg = nd.param->grad;
        for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += nd.grad[k];
      }
    }
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  using BackwardFn = std::function<void(BasicGraph&, std::size_t)>;

  struct Node {
    BasicTensor<T> value;
    BasicTensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
    typename BasicParamStore<T>::Entry* param = nullptr;
  };

  // Writes softmax(x / temperature) into `probs` and returns logsumexp(x / temperature).
  static T log_softmax_row(const T* x, std::size_t c, T temperature, T* probs) {
    T mx = x[0] / temperature;
    for (std::size_t i = 1; i < c; ++i) mx = std::max(mx, x[i] / temperature);
    T sum = 0;
    for (std::size_t i = 0; i < c; ++i) {
      probs[i] = std::exp(x[i] / temperature - mx);
      sum += probs[i];
    }
    for (std::size_t i = 0; i < c; ++i) probs[i] /= sum;
    return mx + std::log(sum);
  }

  Node& node(Var v) {
    if (v.id >= nodes_.size()) throw StateError("variable does not belong to this graph");
    return nodes_[v.id];
  }
  const Node& node(Var v) const { return const_cast<BasicGraph*>(this)->node(v); }

  Var push(BasicTensor<T> value, bool requires_grad, BackwardFn fn) {
    if (backward_done_) throw StateError("cannot extend a trace after backward");
    nodes_.push_back(Node{std::move(value), {}, requires_grad, std::move(fn), nullptr});
    return Var{nodes_.size() - 1};
  }

  Var push_op(BasicTensor<T> value, std::initializer_list<Var> inputs, BackwardFn fn) {
    bool rg = false;
    for (auto in : inputs) rg = rg || node(in).requires_grad;
    return push(std::move(value), rg, rg ? std::move(fn) : BackwardFn{});
  }

  Var reshape_to(Var x, Shape target) {
    auto y = value(x).reshaped(std::move(target));
    return push_op(std::move(y), {x}, [=](BasicGraph& g, std::size_t out) {
      auto* dx = g.grad_ptr(x);
      if (!dx) return;
      const auto& dy = g.nodes_[out].grad;
      for (std::size_t i = 0; i < dy.size(); ++i) (*dx)[i] += dy[i];
    });
  }

  BasicTensor<T>* grad_ptr(Var v) {
    auto& nd = nodes_[v.id];
    if (!nd.requires_grad) return nullptr;
    if (nd.grad.empty()) nd.grad = BasicTensor<T>(nd.value.shape());
    return &nd.grad;
  }

  BasicParamStore<T>* params_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::size_t> param_nodes_;
  bool read_only_ = false;
  bool backward_done_ = false;
};

using Graph = BasicGraph<float>;
using GraphD = BasicGraph<double>;

}  // namespace tfh::nn
