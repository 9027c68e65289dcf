#include "eval/linear_classifier.hpp"

#include <algorithm>
#include <cmath>

namespace tfh::eval {

const char* classifier_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kPrototype: return "prototype";
    case ClassifierKind::kLogistic: return "logistic";
    case ClassifierKind::kSvm: return "svm";
  }
  return "unknown";
}

ClassifierKind parse_classifier(const std::string& name) {
  if (name == "prototype" || name == "prototypical") return ClassifierKind::kPrototype;
  if (name == "logistic") return ClassifierKind::kLogistic;
  if (name == "svm") return ClassifierKind::kSvm;
  throw ConfigError("unknown classifier '" + name + "' (expected prototype, logistic or svm)");
}

void LinearClassifierConfig::validate() const {
  std::vector<std::string> problems;
  if (!(l2 >= 0)) problems.push_back("l2 must be >= 0");
  if (max_steps < 1) problems.push_back("max_steps must be >= 1");
  if (!(learning_rate > 0)) problems.push_back("classifier learning_rate must be > 0");
  if (!(decay >= 0)) problems.push_back("decay must be >= 0");
  if (!(tolerance > 0)) problems.push_back("tolerance must be > 0");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::vector<double> LinearModel::scores(std::span<const double> x) const {
  if (x.size() != dim) {
    throw ShapeError("linear model of dimension " + std::to_string(dim) + " given a vector of length " +
                     std::to_string(x.size()));
  }
  std::vector<double> s(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double acc = bias[c];
    for (std::size_t i = 0; i < dim; ++i) acc += weights[c * dim + i] * x[i];
    s[c] = acc;
  }
  return s;
}

std::size_t LinearModel::predict(std::span<const double> x) const {
  const auto s = scores(x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < s.size(); ++c)
    if (s[c] > s[best]) best = c;
  return best;
}

namespace {

void check_data(const PooledData& data) {
  if (data.num_classes < 2) throw InvalidArgument("linear classifiers need at least 2 classes");
  if (data.x.empty()) throw InvalidArgument("linear classifiers need at least one training vector");
  const std::size_t d = data.x[0].size();
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    if (data.x[i].size() != d) throw ShapeError("training vectors have mixed lengths");
    if (data.y[i] >= data.num_classes) throw InvalidArgument("training label out of range");
  }
}

double norm2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (double v : a) s += v * v;
  for (double v : b) s += v * v;
  return s;
}

}  // namespace

double logistic_objective(const PooledData& data, std::span<const double> weights,
                          std::span<const double> bias, double l2, std::vector<double>* grad_w,
                          std::vector<double>* grad_b) {
  const std::size_t c = data.num_classes, d = data.x.at(0).size(), n = data.x.size();
  if (grad_w) grad_w->assign(c * d, 0.0);
  if (grad_b) grad_b->assign(c, 0.0);
  std::vector<double> z(c);
  double total = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto& x = data.x[s];
    double zmax = -INFINITY;
    for (std::size_t k = 0; k < c; ++k) {
      double acc = bias[k];
      for (std::size_t i = 0; i < d; ++i) acc += weights[k * d + i] * x[i];
      z[k] = acc;
      zmax = std::max(zmax, acc);
    }
    double sum = 0;
    for (std::size_t k = 0; k < c; ++k) sum += std::exp(z[k] - zmax);
    const double lse = zmax + std::log(sum);
    total += lse - z[data.y[s]];
    if (grad_w || grad_b) {
      for (std::size_t k = 0; k < c; ++k) {
        const double r = std::exp(z[k] - lse) - (k == data.y[s] ? 1.0 : 0.0);
        if (grad_b) (*grad_b)[k] += r;
        if (grad_w)
          for (std::size_t i = 0; i < d; ++i) (*grad_w)[k * d + i] += r * x[i];
      }
    }
  }
  double reg = 0;
  for (double w : weights) reg += w * w;
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad_w)
    for (std::size_t j = 0; j < c * d; ++j) (*grad_w)[j] = ((*grad_w)[j] + l2 * weights[j]) * inv_n;
  if (grad_b)
    for (auto& g : *grad_b) g *= inv_n;
  return (total + 0.5 * l2 * reg) * inv_n;
}

LinearModel fit_logistic(const PooledData& data, const LinearClassifierConfig& cfg) {
  cfg.validate();
  check_data(data);
  LinearModel m;
  m.num_classes = data.num_classes;
  m.dim = data.x[0].size();
  m.weights.assign(m.num_classes * m.dim, 0.0);
  m.bias.assign(m.num_classes, 0.0);

  std::vector<double> gw, gb, trial_w, trial_b;
  double f = logistic_objective(data, m.weights, m.bias, cfg.l2, &gw, &gb);
  m.objective_history.push_back(f);
  for (std::size_t t = 0; t < cfg.max_steps; ++t) {
    const double g2 = norm2(gw, gb);
    if (std::sqrt(g2) < cfg.tolerance) {
      m.converged = true;
      break;
    }
    double eta = cfg.learning_rate / (1.0 + cfg.decay * static_cast<double>(t));
    double f_new = f;
    for (int halvings = 0; halvings < 60; ++halvings, eta *= 0.5) {
      trial_w = m.weights;
      trial_b = m.bias;
      for (std::size_t j = 0; j < gw.size(); ++j) trial_w[j] -= eta * gw[j];
      for (std::size_t j = 0; j < gb.size(); ++j) trial_b[j] -= eta * gb[j];
      f_new = logistic_objective(data, trial_w, trial_b, cfg.l2, nullptr, nullptr);
      if (f_new <= f - 0.5 * eta * g2) break;
    }
    if (!(f_new < f)) break;
    m.weights.swap(trial_w);
    m.bias.swap(trial_b);
    f = logistic_objective(data, m.weights, m.bias, cfg.l2, &gw, &gb);
    m.objective_history.push_back(f);
    m.steps = t + 1;
  }
  if (!m.converged && std::sqrt(norm2(gw, gb)) < cfg.tolerance) m.converged = true;
  return m;
}

LinearModel fit_svm(const PooledData& data, const LinearClassifierConfig& cfg) {
  cfg.validate();
  check_data(data);
  constexpr std::size_t kStallWindow = 200;
  const std::size_t c = data.num_classes, d = data.x[0].size(), n = data.x.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  LinearModel m;
  m.num_classes = c;
  m.dim = d;
  m.weights.assign(c * d, 0.0);
  m.bias.assign(c, 0.0);
  m.converged = true;
  std::vector<double> history(cfg.max_steps + 1, 0.0);

  for (std::size_t k = 0; k < c; ++k) {
    std::vector<double> w(d, 0.0), gw(d);
    double b = 0;
    auto objective = [&](std::vector<double>* grad, double* grad_b) {
      double hinge = 0, reg = 0;
      if (grad) std::fill(grad->begin(), grad->end(), 0.0);
      if (grad_b) *grad_b = 0;
      for (std::size_t s = 0; s < n; ++s) {
        const double y = data.y[s] == k ? 1.0 : -1.0;
        double score = b;
        for (std::size_t i = 0; i < d; ++i) score += w[i] * data.x[s][i];
        const double margin = 1.0 - y * score;
        if (margin > 0) {
          hinge += margin;
          if (grad)
            for (std::size_t i = 0; i < d; ++i) (*grad)[i] -= y * data.x[s][i];
          if (grad_b) *grad_b -= y;
        }
      }
      for (std::size_t i = 0; i < d; ++i) {
        reg += w[i] * w[i];
        if (grad) (*grad)[i] = ((*grad)[i] + cfg.l2 * w[i]) * inv_n;
      }
      if (grad_b) *grad_b *= inv_n;
      return (hinge + 0.5 * cfg.l2 * reg) * inv_n;
    };

    double gb = 0;
    double best = objective(&gw, &gb);
    std::vector<double> best_w = w;
    double best_b = b;
    double window_start = best;
    history[0] += best;
    bool stalled = false;
    std::size_t t = 0;
    for (; t < cfg.max_steps; ++t) {
      const double eta = cfg.learning_rate / std::sqrt(1.0 + static_cast<double>(t));
      for (std::size_t i = 0; i < d; ++i) w[i] -= eta * gw[i];
      b -= eta * gb;
      const double f = objective(&gw, &gb);
      if (f < best) {
        best = f;
        best_w = w;
        best_b = b;
      }
      history[t + 1] += best;
      if ((t + 1) % kStallWindow == 0) {
        if (window_start - best <= cfg.tolerance * (1.0 + std::abs(best))) {
          stalled = true;
          ++t;
          break;
        }
        window_start = best;
      }
    }
    for (std::size_t r = t + 1; r <= cfg.max_steps; ++r) history[r] += best;
    m.converged = m.converged && stalled;
    m.steps = std::max(m.steps, t);
    std::copy(best_w.begin(), best_w.end(), m.weights.begin() + static_cast<std::ptrdiff_t>(k * d));
    m.bias[k] = best_b;
  }
  history.resize(m.steps + 1);
  m.objective_history = std::move(history);
  return m;
}

LinearModel fit_linear_classifier(ClassifierKind kind, const AugmentedSupport& aug,
                                  const LinearClassifierConfig& cfg) {
  const PooledData data = pool_support(aug);
  switch (kind) {
    case ClassifierKind::kLogistic: return fit_logistic(data, cfg);
    case ClassifierKind::kSvm: return fit_svm(data, cfg);
    case ClassifierKind::kPrototype: break;
  }
  throw InvalidArgument("fit_linear_classifier: prototype classifier has no linear fit");
}

}  // namespace tfh::eval
