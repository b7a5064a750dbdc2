#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cntpp/core/errors.hpp"
#include "cntpp/core/rng.hpp"

namespace cntpp {

namespace detail {
inline void check_rate(double rate, double rate_bound, double t) {
  if (rate < 0.0)
    throw NumericError("thinning: negative rate " + std::to_string(rate) +
                       " at t=" + std::to_string(t));
  // Small relative slack absorbs round-off in caller-supplied bounds.
  if (rate > rate_bound * (1.0 + 1e-9))
    throw NumericError("thinning: rate " + std::to_string(rate) +
                       " exceeds bound " + std::to_string(rate_bound) +
                       " at t=" + std::to_string(t));
}
}  // namespace detail

// Ogata thinning over [t_start, t_end]: candidates from a homogeneous
// Poisson(rate_bound) process, accepted with probability rate(t)/rate_bound.
// rate must satisfy 0 <= rate(t) <= rate_bound on the interval.
template <class RateFn>
std::vector<double> thinning_sample(RateFn&& rate, double rate_bound,
                                    double t_start, double t_end,
                                    RngStream& rng) {
  if (!(rate_bound > 0.0))
    throw std::invalid_argument("thinning_sample: rate_bound must be > 0");
  std::vector<double> out;
  double t = t_start;
  while (true) {
    t += rng.exponential(rate_bound);
    if (t > t_end) break;
    const double r = rate(t);
    detail::check_rate(r, rate_bound, t);
    if (rng.uniform() * rate_bound < r) out.push_back(t);
  }
  return out;
}

// First accepted point after t_start, or nullopt if none falls before t_end.
template <class RateFn>
std::optional<double> thinning_next(RateFn&& rate, double rate_bound,
                                    double t_start, double t_end,
                                    RngStream& rng) {
  if (!(rate_bound > 0.0))
    throw std::invalid_argument("thinning_next: rate_bound must be > 0");
  double t = t_start;
  while (true) {
    t += rng.exponential(rate_bound);
    if (t > t_end) return std::nullopt;
    const double r = rate(t);
    detail::check_rate(r, rate_bound, t);
    if (rng.uniform() * rate_bound < r) return t;
  }
}

}  // namespace cntpp
