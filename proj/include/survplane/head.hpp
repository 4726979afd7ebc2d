#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace survplane {

// Numerically stable logistic sigmoid.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// x such that softplus(x) == y, for y > 0.
inline double inverse_softplus(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("inverse_softplus: y must be positive");
  // log(exp(y) - 1) = y + log(1 - exp(-y))
  return y + std::log(-std::expm1(-y));
}

// log(sigmoid(x)) without overflow at either tail.
inline double log_sigmoid(double x) { return -softplus(-x); }

// Stage classifier plus the family of time-shifted classifiers sharing its
// normal vector. The slope of the time-dependent bias and the ranking scale
// are stored as unconstrained reals and mapped through softplus, keeping the
// conversion CDF non-decreasing in t and the ranking probability strictly
// increasing in the risk difference.
struct HyperplaneHead {
  std::vector<double> w;    // shared hyperplane normal, dimension d_e
  double beta = 0.0;        // bias at t = 0
  double alpha_raw = 0.0;   // effective slope = softplus(alpha_raw)
  double gamma_raw = 0.0;   // effective ranking scale = softplus(gamma_raw)

  double alpha() const { return softplus(alpha_raw); }
  double gamma() const { return softplus(gamma_raw); }
};

// Signed-distance proxy from the stage hyperplane; the constant bias is
// irrelevant for ranking and excluded.
inline double risk(const HyperplaneHead& head, const std::vector<double>& f) {
  if (f.size() != head.w.size())
    throw std::invalid_argument("risk: embedding dimension " + std::to_string(f.size()) +
                                " != head dimension " + std::to_string(head.w.size()));
  double r = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) r += head.w[i] * f[i];
  return r;
}

// Bias of the classifier at normalized time t.
inline double bias_at(const HyperplaneHead& head, double t) {
  return head.alpha() * t + head.beta;
}

// Probability of conversion within normalized time t; t = 0 gives the stage
// probability.
inline double cdf_at(const HyperplaneHead& head, const std::vector<double>& f, double t) {
  return sigmoid(risk(head, f) + bias_at(head, t));
}

}  // namespace survplane
