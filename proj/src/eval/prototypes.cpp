#include "eval/prototypes.hpp"

namespace tfh::eval {

void AugmentedSupport::validate() const {
  if (support.empty()) throw InvalidArgument("augmented support has no classes");
  if (!generated.empty() && generated.size() != support.size()) {
    throw InvalidArgument("augmented support: " + std::to_string(support.size()) + " support classes but " +
                          std::to_string(generated.size()) + " generated classes");
  }
  if (!class_ids.empty() && class_ids.size() != support.size()) {
    throw InvalidArgument("augmented support: class id count does not match class count");
  }
  for (std::size_t j = 0; j < support.size(); ++j) {
    const std::size_t m = generated.empty() ? 0 : generated[j].size();
    if (support[j].size() + m == 0) {
      throw InvalidArgument("augmented support class " + std::to_string(j) + " is empty");
    }
  }
}

Vector gap_vector(const nn::Tensor& feature) {
  if (feature.rank() != 3) {
    throw ShapeError("gap expects a d x h x w tensor, got " + nn::shape_str(feature.shape()));
  }
  const std::size_t d = feature.extent(0), hw = feature.extent(1) * feature.extent(2);
  Vector out(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double acc = 0;
    for (std::size_t i = 0; i < hw; ++i) acc += feature[c * hw + i];
    out[c] = acc / static_cast<double>(hw);
  }
  return out;
}

std::vector<Vector> augmented_vector_prototypes(const AugmentedSupport& aug) {
  aug.validate();
  std::vector<Vector> protos;
  protos.reserve(aug.num_classes());
  for (std::size_t j = 0; j < aug.num_classes(); ++j) {
    Vector acc;
    std::size_t count = 0;
    auto absorb = [&](const nn::Tensor& t) {
      const Vector v = gap_vector(t);
      if (acc.empty()) acc.assign(v.size(), 0.0);
      if (v.size() != acc.size()) {
        throw ShapeError("class " + std::to_string(j) + " mixes feature depths " + std::to_string(acc.size()) +
                         " and " + std::to_string(v.size()));
      }
      for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
      ++count;
    };
    for (const auto& t : aug.support[j]) absorb(t);
    if (!aug.generated.empty())
      for (const auto& t : aug.generated[j]) absorb(t);
    for (auto& v : acc) v /= static_cast<double>(count);
    protos.push_back(std::move(acc));
  }
  return protos;
}

std::size_t nearest_prototype(const std::vector<Vector>& prototypes, std::span<const double> query) {
  if (prototypes.empty()) throw InvalidArgument("nearest_prototype: no prototypes");
  std::size_t best = 0;
  double best_dist = 0;
  for (std::size_t j = 0; j < prototypes.size(); ++j) {
    const auto& p = prototypes[j];
    if (p.size() != query.size()) {
      throw ShapeError("nearest_prototype: query length " + std::to_string(query.size()) +
                       " vs prototype length " + std::to_string(p.size()));
    }
    double dist = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double diff = query[i] - p[i];
      dist += diff * diff;
    }
    if (j == 0 || dist < best_dist) {
      best = j;
      best_dist = dist;
    }
  }
  return best;
}

std::size_t nearest_prototype_predict(const std::vector<Vector>& prototypes, const nn::Tensor& query) {
  const Vector q = gap_vector(query);
  return nearest_prototype(prototypes, q);
}

PooledData pool_support(const AugmentedSupport& aug) {
  aug.validate();
  PooledData out;
  out.num_classes = aug.num_classes();
  for (std::size_t j = 0; j < aug.num_classes(); ++j) {
    for (const auto& t : aug.support[j]) {
      out.x.push_back(gap_vector(t));
      out.y.push_back(j);
    }
    if (aug.generated.empty()) continue;
    for (const auto& t : aug.generated[j]) {
      out.x.push_back(gap_vector(t));
      out.y.push_back(j);
    }
  }
  return out;
}

}  // namespace tfh::eval
