#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace cntpp {

// Left-Riemann sum of a scalar integrand over [t1, t2] with the given step.
// The final partial cell is included with its true width.
template <class Fn>
double quadrature(Fn&& f, double t1, double t2, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("quadrature: step must be > 0");
  if (!(t2 >= t1)) throw std::invalid_argument("quadrature: t2 < t1");
  double acc = 0.0;
  std::size_t i = 0;
  for (double t = t1; t < t2; t = t1 + static_cast<double>(++i) * step) {
    const double w = std::min(step, t2 - t);
    acc += f(t) * w;
  }
  return acc;
}

// Vector-valued variant; f returns a vector of fixed dimension.
template <class Fn>
std::vector<double> quadrature_vec(Fn&& f, double t1, double t2, double step) {
  if (!(step > 0.0))
    throw std::invalid_argument("quadrature_vec: step must be > 0");
  if (!(t2 >= t1)) throw std::invalid_argument("quadrature_vec: t2 < t1");
  std::vector<double> acc;
  std::size_t i = 0;
  for (double t = t1; t < t2; t = t1 + static_cast<double>(++i) * step) {
    const double w = std::min(step, t2 - t);
    std::vector<double> v = f(t);
    if (acc.empty()) acc.assign(v.size(), 0.0);
    for (std::size_t d = 0; d < v.size(); ++d) acc[d] += v[d] * w;
  }
  return acc;
}

}  // namespace cntpp
