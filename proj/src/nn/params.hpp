#pragma once

#include <map>
#include <string>

#include "nn/tensor.hpp"

namespace tfh::nn {

/// Named parameters with one gradient accumulator per parameter. Iteration is
/// in name order, which fixes the order of checkpoint entries and optimizer
/// updates.
template <typename T>
class BasicParamStore {
 public:
  struct Entry {
    BasicTensor<T> value;
    BasicTensor<T> grad;
  };
  using Map = std::map<std::string, Entry, std::less<>>;

  void add(const std::string& name, BasicTensor<T> value) {
    if (entries_.count(name)) throw InvalidArgument("duplicate parameter name '" + name + "'");
    BasicTensor<T> grad(value.shape());
    entries_.emplace(name, Entry{std::move(value), std::move(grad)});
  }

  bool contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

  Entry& entry(std::string_view name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvalidArgument("unknown parameter '" + std::string(name) + "'");
    return it->second;
  }
  const Entry& entry(std::string_view name) const {
    return const_cast<BasicParamStore*>(this)->entry(name);
  }

  BasicTensor<T>& value(std::string_view name) { return entry(name).value; }
  const BasicTensor<T>& value(std::string_view name) const { return entry(name).value; }
  BasicTensor<T>& grad(std::string_view name) { return entry(name).grad; }
  const BasicTensor<T>& grad(std::string_view name) const { return entry(name).grad; }

  void zero_grad() {
    for (auto& [name, e] : entries_) e.grad.fill(T{0});
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_) n += e.value.size();
    return n;
  }

  typename Map::iterator begin() { return entries_.begin(); }
  typename Map::iterator end() { return entries_.end(); }
  typename Map::const_iterator begin() const { return entries_.begin(); }
  typename Map::const_iterator end() const { return entries_.end(); }

  template <typename U>
  BasicParamStore<U> cast() const {
    BasicParamStore<U> out;
    for (const auto& [name, e] : entries_) out.add(name, e.value.template cast<U>());
    return out;
  }

 private:
  Map entries_;
};

using ParamStore = BasicParamStore<float>;
using ParamStoreD = BasicParamStore<double>;

/// Names and values bit-identical (gradients are ignored).
template <typename T>
bool bit_equal(const BasicParamStore<T>& a, const BasicParamStore<T>& b) {
  if (a.size() != b.size()) return false;
  auto ia = a.begin();
  for (auto ib = b.begin(); ib != b.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !bit_equal(ia->second.value, ib->second.value)) return false;
  }
  return true;
}

}  // namespace tfh::nn
