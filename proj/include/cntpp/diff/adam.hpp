#pragma once

#include <cmath>
#include <string>

#include "cntpp/core/errors.hpp"
#include "cntpp/diff/tensor.hpp"

namespace cntpp {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam, applied in place to every parameter that has a
// gradient entry. Parameters an experiment variant never touches keep both
// their values and their optimizer state untouched.
inline void adam_step(ParamStore& params, const GradStore& grads,
                      const AdamConfig& cfg = {}) {
  for (auto& [name, t] : params) {
    const std::vector<double>* g = grads.find(name);
    if (!g) continue;
    if (g->size() != t.size())
      throw ConfigError("adam_step: gradient shape mismatch for " + name);
    for (double gv : *g)
      if (!std::isfinite(gv))
        throw NumericError("adam_step: non-finite gradient for " + name);
    t.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t.step));
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double gv = (*g)[i];
      t.m[i] = cfg.beta1 * t.m[i] + (1.0 - cfg.beta1) * gv;
      t.v[i] = cfg.beta2 * t.v[i] + (1.0 - cfg.beta2) * gv * gv;
      const double mhat = t.m[i] / bc1;
      const double vhat = t.v[i] / bc2;
      t.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace cntpp
