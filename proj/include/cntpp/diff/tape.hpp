#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cntpp/core/errors.hpp"
#include "cntpp/core/rng.hpp"
#include "cntpp/diff/tensor.hpp"

namespace cntpp {

inline double stable_softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

// Reverse-mode tape over vector values. Creation order is the topological
// order, so backward() is a single reverse sweep; every architecture in this
// project is a static feed-forward composition, which keeps the op set small.
class Tape {
 public:
  using Var = int;

  explicit Tape(const ParamStore* params = nullptr) : params_(params) {}

  // ---- leaves ----

  Var constant(std::vector<double> v) {
    Node n;
    n.op = Op::kConstant;
    n.value = std::move(v);
    return push(std::move(n));
  }
  Var constant(double x) { return constant(std::vector<double>{x}); }

  Var param(const std::string& name) {
    auto it = param_cache_.find(name);
    if (it != param_cache_.end()) return it->second;
    if (!params_) throw ConfigError("tape has no parameter store");
    const Tensor& t = params_->at(name);
    Node n;
    n.op = Op::kParam;
    n.external = t.data.data();
    n.external_size = t.data.size();
    n.param_name = name;
    const Var v = push(std::move(n));
    param_cache_.emplace(name, v);
    return v;
  }

  // ---- elementwise / structural ops ----

  Var add(Var a, Var b) { return binary(Op::kAdd, a, b, size_of(a)); }
  Var sub(Var a, Var b) { return binary(Op::kSub, a, b, size_of(a)); }
  Var mul(Var a, Var b) { return binary(Op::kMul, a, b, size_of(a)); }

  Var scale(Var a, double c) {
    Node n = unary(Op::kScale, a);
    n.c = c;
    auto va = value(a);
    n.value.resize(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) n.value[i] = va[i] * c;
    return push(std::move(n));
  }

  // y = a * s[0], s a size-1 var.
  Var scale_by(Var a, Var s) {
    check_size(s, 1, "scale_by");
    Node n;
    n.op = Op::kScaleBy;
    n.a = a;
    n.b = s;
    auto va = value(a);
    const double sv = value(s)[0];
    n.value.resize(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) n.value[i] = va[i] * sv;
    return push(std::move(n));
  }

  // y = w x, w flat row-major (rows x cols).
  Var matvec(Var w, Var x, std::size_t rows, std::size_t cols) {
    check_size(w, rows * cols, "matvec weights");
    check_size(x, cols, "matvec input");
    Node n;
    n.op = Op::kMatVec;
    n.a = w;
    n.b = x;
    n.rows = rows;
    n.cols = cols;
    n.value.assign(rows, 0.0);
    auto vw = value(w);
    auto vx = value(x);
    for (std::size_t i = 0; i < rows; ++i) {
      const double* wr = vw.data() + i * cols;
      double acc = 0.0;
      for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * vx[j];
      n.value[i] = acc;
    }
    return push(std::move(n));
  }

  // y = w x + b.
  Var affine(Var w, Var b, Var x, std::size_t rows, std::size_t cols) {
    check_size(b, rows, "affine bias");
    const Var wx = matvec(w, x, rows, cols);
    return add(wx, b);
  }

  Var tanh_(Var a) {
    Node n = unary(Op::kTanh, a);
    map_in_place(n, a, [](double x) { return std::tanh(x); });
    return push(std::move(n));
  }
  Var sigmoid_(Var a) {
    Node n = unary(Op::kSigmoid, a);
    map_in_place(n, a, [](double x) { return sigmoid(x); });
    return push(std::move(n));
  }
  Var softplus_(Var a) {
    Node n = unary(Op::kSoftplus, a);
    map_in_place(n, a, [](double x) { return stable_softplus(x); });
    return push(std::move(n));
  }
  Var exp_(Var a) {
    Node n = unary(Op::kExp, a);
    map_in_place(n, a, [](double x) { return std::exp(x); });
    return push(std::move(n));
  }
  Var log_(Var a) {
    Node n = unary(Op::kLog, a);
    map_in_place(n, a, [](double x) { return std::log(x); });
    return push(std::move(n));
  }
  Var neg(Var a) { return scale(a, -1.0); }

  // y = 1 - a^2 (the tanh tangent factor).
  Var one_minus_sq(Var a) {
    Node n = unary(Op::kOneMinusSq, a);
    map_in_place(n, a, [](double x) { return 1.0 - x * x; });
    return push(std::move(n));
  }

  Var sum(Var a) {
    Node n = unary(Op::kSum, a);
    double acc = 0.0;
    for (double x : value(a)) acc += x;
    n.value = {acc};
    return push(std::move(n));
  }

  Var dot(Var a, Var b) {
    check_size(b, size_of(a), "dot");
    Node n;
    n.op = Op::kDot;
    n.a = a;
    n.b = b;
    auto va = value(a);
    auto vb = value(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) acc += va[i] * vb[i];
    n.value = {acc};
    return push(std::move(n));
  }

  Var concat(Var a, Var b) {
    Node n;
    n.op = Op::kConcat;
    n.a = a;
    n.b = b;
    auto va = value(a);
    auto vb = value(b);
    n.value.reserve(va.size() + vb.size());
    n.value.assign(va.begin(), va.end());
    n.value.insert(n.value.end(), vb.begin(), vb.end());
    return push(std::move(n));
  }

  Var slice(Var a, std::size_t offset, std::size_t len) {
    if (offset + len > size_of(a)) throw ConfigError("slice out of range");
    Node n = unary(Op::kSlice, a);
    n.rows = offset;
    auto va = value(a);
    n.value.assign(va.begin() + offset, va.begin() + offset + len);
    return push(std::move(n));
  }

  Var softmax_(Var a) {
    Node n = unary(Op::kSoftmax, a);
    auto va = value(a);
    double mx = va[0];
    for (double x : va) mx = std::max(mx, x);
    n.value.resize(va.size());
    double z = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
      n.value[i] = std::exp(va[i] - mx);
      z += n.value[i];
    }
    for (double& x : n.value) x /= z;
    return push(std::move(n));
  }

  Var logsumexp(Var a) {
    Node n = unary(Op::kLogSumExp, a);
    auto va = value(a);
    double mx = va[0];
    for (double x : va) mx = std::max(mx, x);
    double z = 0.0;
    for (double x : va) z += std::exp(x - mx);
    n.value = {mx + std::log(z)};
    return push(std::move(n));
  }

  // y_i = a_i - s[0].
  Var sub_broadcast(Var a, Var s) {
    check_size(s, 1, "sub_broadcast");
    Node n;
    n.op = Op::kSubBroadcast;
    n.a = a;
    n.b = s;
    auto va = value(a);
    const double sv = value(s)[0];
    n.value.resize(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) n.value[i] = va[i] - sv;
    return push(std::move(n));
  }

  // Gradient reversal: identity forward, -gamma * grad backward.
  Var grl(Var a, double gamma) {
    if (gamma < 0.0) throw ConfigError("grl: gamma must be >= 0");
    Node n = unary(Op::kGrl, a);
    n.c = gamma;
    auto va = value(a);
    n.value.assign(va.begin(), va.end());
    return push(std::move(n));
  }

  // Inverted dropout; the kept mask (scaled by 1/(1-rate)) is stored so the
  // same realization can be applied to tangent paths via apply_mask_of.
  Var dropout(Var a, double rate, RngStream& rng) {
    if (rate <= 0.0) return a;
    Node n = unary(Op::kDropout, a);
    auto va = value(a);
    n.aux.resize(va.size());
    n.value.resize(va.size());
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < va.size(); ++i) {
      n.aux[i] = rng.uniform() < rate ? 0.0 : keep_scale;
      n.value[i] = va[i] * n.aux[i];
    }
    return push(std::move(n));
  }

  // y = a o mask(dropout_node); linear, used for derivative propagation.
  Var apply_mask_of(Var dropout_node, Var a) {
    const Node& dn = nodes_[dropout_node];
    if (dn.op != Op::kDropout)
      throw ConfigError("apply_mask_of: source is not a dropout node");
    check_size(a, dn.aux.size(), "apply_mask_of");
    Node n;
    n.op = Op::kMaskLike;
    n.a = a;
    n.b = dropout_node;
    auto va = value(a);
    n.value.resize(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) n.value[i] = va[i] * dn.aux[i];
    return push(std::move(n));
  }

  // ---- access ----

  std::span<const double> value(Var v) const {
    const Node& n = nodes_[v];
    if (n.external) return {n.external, n.external_size};
    return {n.value.data(), n.value.size()};
  }
  double scalar(Var v) const {
    auto s = value(v);
    if (s.size() != 1) throw ConfigError("scalar() on non-scalar var");
    return s[0];
  }
  std::size_t size_of(Var v) const { return value(v).size(); }
  std::size_t node_count() const { return nodes_.size(); }

  // ---- backward ----

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once in reverse; parameter
  // leaf gradients are accumulated into `grads` by name.
  void backward(Var loss, GradStore& grads) {
    check_size(loss, 1, "backward loss");
    for (auto& n : nodes_) n.grad.clear();
    nodes_[loss].grad.assign(1, 1.0);
    for (int i = loss; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.grad.empty()) continue;
      pull(i, n);
    }
    for (const auto& n : nodes_) {
      if (n.op == Op::kParam && !n.grad.empty()) {
        auto& dst = grads.buffer_for(n.param_name, n.external_size);
        for (std::size_t i = 0; i < n.external_size; ++i) dst[i] += n.grad[i];
      }
    }
  }

 private:
  enum class Op {
    kConstant,
    kParam,
    kAdd,
    kSub,
    kMul,
    kScale,
    kScaleBy,
    kMatVec,
    kTanh,
    kSigmoid,
    kSoftplus,
    kExp,
    kLog,
    kOneMinusSq,
    kSum,
    kDot,
    kConcat,
    kSlice,
    kSoftmax,
    kLogSumExp,
    kSubBroadcast,
    kGrl,
    kDropout,
    kMaskLike,
  };

  struct Node {
    Op op = Op::kConstant;
    int a = -1, b = -1;
    std::size_t rows = 0, cols = 0;
    double c = 0.0;
    std::vector<double> value;
    std::vector<double> aux;   // dropout mask (pre-scaled)
    std::vector<double> grad;  // filled during backward
    const double* external = nullptr;  // parameter view
    std::size_t external_size = 0;
    std::string param_name;
  };

  Var push(Node&& n) {
    nodes_.push_back(std::move(n));
    return static_cast<Var>(nodes_.size() - 1);
  }

  Node unary(Op op, Var a) {
    Node n;
    n.op = op;
    n.a = a;
    return n;
  }

  Var binary(Op op, Var a, Var b, std::size_t expect) {
    check_size(b, expect, "binary op");
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    auto va = value(a);
    auto vb = value(b);
    n.value.resize(va.size());
    switch (op) {
      case Op::kAdd:
        for (std::size_t i = 0; i < va.size(); ++i) n.value[i] = va[i] + vb[i];
        break;
      case Op::kSub:
        for (std::size_t i = 0; i < va.size(); ++i) n.value[i] = va[i] - vb[i];
        break;
      case Op::kMul:
        for (std::size_t i = 0; i < va.size(); ++i) n.value[i] = va[i] * vb[i];
        break;
      default:
        throw ConfigError("binary: bad op");
    }
    return push(std::move(n));
  }

  template <class Fn>
  void map_in_place(Node& n, Var a, Fn&& f) {
    auto va = value(a);
    n.value.resize(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) n.value[i] = f(va[i]);
  }

  void check_size(Var v, std::size_t expect, const char* what) const {
    if (size_of(v) != expect)
      throw ConfigError(std::string("shape mismatch in ") + what + ": got " +
                        std::to_string(size_of(v)) + ", expected " +
                        std::to_string(expect));
  }

  std::vector<double>& grad_buf(Var v) {
    Node& n = nodes_[v];
    if (n.grad.empty())
      n.grad.assign(n.external ? n.external_size : n.value.size(), 0.0);
    return n.grad;
  }

  void pull(int, Node& n) {
    const std::vector<double>& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
      case Op::kParam:
        break;
      case Op::kAdd: {
        auto& ga = grad_buf(n.a);
        auto& gb = grad_buf(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        auto& ga = grad_buf(n.a);
        auto& gb = grad_buf(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::kMul: {
        auto va = value(n.a);
        auto vb = value(n.b);
        auto& ga = grad_buf(n.a);
        auto& gb = grad_buf(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * vb[i];
          gb[i] += g[i] * va[i];
        }
        break;
      }
      case Op::kScale: {
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.c;
        break;
      }
      case Op::kScaleBy: {
        auto va = value(n.a);
        const double sv = value(n.b)[0];
        auto& ga = grad_buf(n.a);
        auto& gs = grad_buf(n.b);
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * sv;
          acc += g[i] * va[i];
        }
        gs[0] += acc;
        break;
      }
      case Op::kMatVec: {
        auto vw = value(n.a);
        auto vx = value(n.b);
        auto& gw = grad_buf(n.a);
        auto& gx = grad_buf(n.b);
        for (std::size_t i = 0; i < n.rows; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          double* gwr = gw.data() + i * n.cols;
          const double* wr = vw.data() + i * n.cols;
          for (std::size_t j = 0; j < n.cols; ++j) {
            gwr[j] += gi * vx[j];
            gx[j] += gi * wr[j];
          }
        }
        break;
      }
      case Op::kTanh: {
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        break;
      }
      case Op::kSigmoid: {
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        break;
      }
      case Op::kSoftplus: {
        auto va = value(n.a);
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * sigmoid(va[i]);
        break;
      }
      case Op::kExp: {
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * n.value[i];
        break;
      }
      case Op::kLog: {
        auto va = value(n.a);
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / va[i];
        break;
      }
      case Op::kOneMinusSq: {
        auto va = value(n.a);
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * (-2.0 * va[i]);
        break;
      }
      case Op::kSum: {
        auto& ga = grad_buf(n.a);
        for (double& x : ga) x += g[0];
        break;
      }
      case Op::kDot: {
        auto va = value(n.a);
        auto vb = value(n.b);
        auto& ga = grad_buf(n.a);
        auto& gb = grad_buf(n.b);
        for (std::size_t i = 0; i < va.size(); ++i) {
          ga[i] += g[0] * vb[i];
          gb[i] += g[0] * va[i];
        }
        break;
      }
      case Op::kConcat: {
        auto& ga = grad_buf(n.a);
        auto& gb = grad_buf(n.b);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[ga.size() + i];
        break;
      }
      case Op::kSlice: {
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[n.rows + i] += g[i];
        break;
      }
      case Op::kSoftmax: {
        auto& ga = grad_buf(n.a);
        double gy = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * n.value[i];
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += n.value[i] * (g[i] - gy);
        break;
      }
      case Op::kLogSumExp: {
        auto va = value(n.a);
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < va.size(); ++i)
          ga[i] += g[0] * std::exp(va[i] - n.value[0]);
        break;
      }
      case Op::kSubBroadcast: {
        auto& ga = grad_buf(n.a);
        auto& gs = grad_buf(n.b);
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          acc += g[i];
        }
        gs[0] -= acc;
        break;
      }
      case Op::kGrl: {
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += -n.c * g[i];
        break;
      }
      case Op::kDropout: {
        auto& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.aux[i];
        break;
      }
      case Op::kMaskLike: {
        auto& ga = grad_buf(n.a);
        const std::vector<double>& mask = nodes_[n.b].aux;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
        break;
      }
    }
  }

  const ParamStore* params_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, Var> param_cache_;
};

}  // namespace cntpp
