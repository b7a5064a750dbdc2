#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cntpp/core/rng.hpp"

namespace cntpp {

// Frozen random MLP used by the synthetic world: `depth` tanh hidden layers
// of `width` units, linear output scaled by `output_scale`. Weights are
// N(0, 1/fan_in) from the stream handed to the constructor, biases zero.
class FixedMlp {
 public:
  FixedMlp() = default;
  FixedMlp(std::size_t in, std::size_t out, std::size_t width,
           std::size_t depth, double output_scale, RngStream& rng)
      : in_(in), out_(out), width_(width), depth_(depth),
        output_scale_(output_scale) {
    std::size_t prev = in;
    for (std::size_t l = 0; l < depth; ++l) {
      weights_.push_back(random_matrix(width, prev, rng));
      prev = width;
    }
    weights_.push_back(random_matrix(out, prev, rng));
  }

  std::size_t input_dim() const { return in_; }
  std::size_t output_dim() const { return out_; }

  std::vector<double> eval(std::span<const double> x) const {
    return eval_impl(x, 0.0, nullptr);
  }

  // Adds N(0, noise_scale^2) to every hidden pre-activation, simulating
  // behavioural uncertainty in the observation network.
  std::vector<double> eval_noisy(std::span<const double> x, double noise_scale,
                                 RngStream& rng) const {
    return eval_impl(x, noise_scale, &rng);
  }

  double eval_scalar(std::span<const double> x) const { return eval(x)[0]; }

  void hash_into(Fnv1a& h) const {
    h.update_u64(in_);
    h.update_u64(out_);
    h.update_u64(width_);
    h.update_u64(depth_);
    h.update_double(output_scale_);
    for (const auto& w : weights_)
      for (double v : w) h.update_double(v);
  }

 private:
  static std::vector<double> random_matrix(std::size_t rows, std::size_t cols,
                                           RngStream& rng) {
    std::vector<double> w(rows * cols);
    const double s = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& x : w) x = s * rng.normal();
    return w;
  }

  std::vector<double> eval_impl(std::span<const double> x, double noise_scale,
                                RngStream* rng) const {
    std::vector<double> h(x.begin(), x.end());
    std::vector<double> next;
    std::size_t prev = in_;
    for (std::size_t l = 0; l < depth_; ++l) {
      next.assign(width_, 0.0);
      const double* w = weights_[l].data();
      for (std::size_t r = 0; r < width_; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < prev; ++c) acc += w[r * prev + c] * h[c];
        if (noise_scale > 0.0 && rng) acc += noise_scale * rng->normal();
        next[r] = std::tanh(acc);
      }
      h.swap(next);
      prev = width_;
    }
    next.assign(out_, 0.0);
    const double* w = weights_.back().data();
    for (std::size_t r = 0; r < out_; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < prev; ++c) acc += w[r * prev + c] * h[c];
      next[r] = output_scale_ * acc;
    }
    return next;
  }

  std::size_t in_ = 0, out_ = 0, width_ = 0, depth_ = 0;
  double output_scale_ = 1.0;
  std::vector<std::vector<double>> weights_;
};

}  // namespace cntpp
