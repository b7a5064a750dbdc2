#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cntpp/core/rng.hpp"
#include "cntpp/diff/tape.hpp"
#include "cntpp/diff/tensor.hpp"

namespace cntpp {

enum class Activation { identity, tanh, softplus };

struct LayerSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::identity;
  // Positive mode: stored weights pass through softplus before use, so every
  // effective weight is > 0 and the layer is monotone in its inputs.
  bool positive_weights = false;
};

// Affine-activation stack with a parameter-name prefix ("<prefix>.w<i>",
// "<prefix>.b<i>").
struct MlpSpec {
  std::string prefix;
  std::vector<LayerSpec> layers;

  static MlpSpec stack(std::string prefix, std::vector<std::size_t> dims,
                       Activation hidden_act, Activation out_act,
                       bool positive = false) {
    MlpSpec s;
    s.prefix = std::move(prefix);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      const bool last = i + 2 == dims.size();
      s.layers.push_back(
          {dims[i], dims[i + 1], last ? out_act : hidden_act, positive});
    }
    return s;
  }

  std::string weight_name(std::size_t i) const {
    return prefix + ".w" + std::to_string(i);
  }
  std::string bias_name(std::size_t i) const {
    return prefix + ".b" + std::to_string(i);
  }
};

// Weights ~ N(0, 1/fan_in), biases zero.
inline void init_mlp(ParamStore& params, const MlpSpec& spec, RngStream& rng) {
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    Tensor& w = params.add(spec.weight_name(i), {l.out, l.in});
    const double s = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (double& x : w.data) x = s * rng.normal();
    params.add(spec.bias_name(i), {l.out});
  }
}

inline Tape::Var apply_activation(Tape& tape, Tape::Var v, Activation act) {
  switch (act) {
    case Activation::identity:
      return v;
    case Activation::tanh:
      return tape.tanh_(v);
    case Activation::softplus:
      return tape.softplus_(v);
  }
  return v;
}

// Forward pass recorded on the tape. `hidden_dropout` > 0 applies inverted
// dropout after each hidden activation; `dropout_vars` (optional) collects
// the dropout node ids so tangent passes can reuse the same masks.
inline Tape::Var mlp_forward(Tape& tape, const MlpSpec& spec, Tape::Var input,
                             double hidden_dropout = 0.0,
                             RngStream* dropout_rng = nullptr,
                             std::vector<Tape::Var>* dropout_vars = nullptr) {
  Tape::Var h = input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    Tape::Var w = tape.param(spec.weight_name(i));
    if (l.positive_weights) w = tape.softplus_(w);
    Tape::Var b = tape.param(spec.bias_name(i));
    h = apply_activation(tape, tape.affine(w, b, h, l.out, l.in), l.act);
    const bool last = i + 1 == spec.layers.size();
    if (!last && hidden_dropout > 0.0 && dropout_rng) {
      h = tape.dropout(h, hidden_dropout, *dropout_rng);
      if (dropout_vars) dropout_vars->push_back(h);
    }
  }
  return h;
}

// Tape-free forward pass; mirrors mlp_forward exactly (same op order).
inline std::vector<double> mlp_eval(const ParamStore& params,
                                    const MlpSpec& spec,
                                    std::span<const double> input) {
  std::vector<double> h(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Tensor& w = params.at(spec.weight_name(i));
    const Tensor& b = params.at(spec.bias_name(i));
    next.assign(l.out, 0.0);
    for (std::size_t r = 0; r < l.out; ++r) {
      const double* wr = w.data.data() + r * l.in;
      double acc = 0.0;
      if (l.positive_weights)
        for (std::size_t c = 0; c < l.in; ++c)
          acc += stable_softplus(wr[c]) * h[c];
      else
        for (std::size_t c = 0; c < l.in; ++c) acc += wr[c] * h[c];
      acc += b.data[r];
      switch (l.act) {
        case Activation::identity:
          break;
        case Activation::tanh:
          acc = std::tanh(acc);
          break;
        case Activation::softplus:
          acc = stable_softplus(acc);
          break;
      }
      next[r] = acc;
    }
    h.swap(next);
  }
  return h;
}

}  // namespace cntpp
