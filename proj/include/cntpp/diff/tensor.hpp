#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "cntpp/core/errors.hpp"

namespace cntpp {

// Named parameter tensor with per-parameter Adam state.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;  // row-major
  std::vector<double> m, v;  // Adam moments
  std::int64_t step = 0;

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }
};

inline std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

// Ordered map keeps serialization and iteration deterministic.
class ParamStore {
 public:
  Tensor& add(const std::string& name, std::vector<std::size_t> shape) {
    if (params_.count(name))
      throw ConfigError("duplicate parameter name: " + name);
    Tensor t;
    t.shape = std::move(shape);
    const std::size_t n = shape_size(t.shape);
    t.data.assign(n, 0.0);
    t.m.assign(n, 0.0);
    t.v.assign(n, 0.0);
    return params_.emplace(name, std::move(t)).first->second;
  }

  Tensor& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }
  bool contains(const std::string& name) const {
    return params_.count(name) != 0;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

  std::size_t total_values() const {
    std::size_t n = 0;
    for (const auto& [k, t] : params_) n += t.size();
    return n;
  }

 private:
  std::map<std::string, Tensor> params_;
};

// Gradient accumulator keyed like the ParamStore. Only touched parameters
// get an entry, which lets optimizer steps skip unused branches entirely.
class GradStore {
 public:
  std::vector<double>& buffer_for(const std::string& name, std::size_t n) {
    auto it = grads_.find(name);
    if (it == grads_.end())
      it = grads_.emplace(name, std::vector<double>(n, 0.0)).first;
    return it->second;
  }
  const std::vector<double>* find(const std::string& name) const {
    auto it = grads_.find(name);
    return it == grads_.end() ? nullptr : &it->second;
  }
  void zero() {
    for (auto& [k, g] : grads_) std::fill(g.begin(), g.end(), 0.0);
  }
  void scale(double c) {
    for (auto& [k, g] : grads_)
      for (double& x : g) x *= c;
  }
  // Ordered, deterministic accumulation of another gradient set.
  void accumulate(const GradStore& other) {
    for (const auto& [k, g] : other.grads_) {
      auto& dst = buffer_for(k, g.size());
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  }
  auto begin() const { return grads_.begin(); }
  auto end() const { return grads_.end(); }
  std::size_t size() const { return grads_.size(); }
  void clear() { grads_.clear(); }

 private:
  std::map<std::string, std::vector<double>> grads_;
};

}  // namespace cntpp
