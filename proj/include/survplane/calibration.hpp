#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace survplane {

// Monotone map from raw risk to [0, 1], anchored at the empirical deciles of
// a validation risk sample: the k-th decile maps to k/10. Between knots the
// map is a monotone cubic Hermite interpolant.
struct Calibrator {
  std::vector<double> knot_risks;   // non-decreasing, duplicate deciles collapsed
  std::vector<double> knot_values;  // strictly increasing within [0, 1]
  std::vector<double> knot_slopes;  // Fritsch-Carlson limited tangents

  bool fitted() const { return knot_risks.size() >= 2; }
};

// Percentile with the linear-interpolation definition (inclusive endpoints).
// `sorted` must be ascending.
inline double percentile_sorted(const std::vector<double>& sorted, double pct) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
  if (pct <= 0.0) return sorted.front();
  if (pct >= 100.0) return sorted.back();
  const double rank = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Fritsch-Carlson tangents for a monotone cubic Hermite through (x, y).
// Secant-averaged initialization, then the radius-3 limiter.
inline std::vector<double> fritsch_carlson_slopes(const std::vector<double>& x,
                                                  const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n)
    throw std::invalid_argument("fritsch_carlson_slopes: need >= 2 matching points");
  std::vector<double> secant(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = x[i + 1] - x[i];
    if (!(h > 0.0)) throw std::invalid_argument("fritsch_carlson_slopes: x must increase");
    secant[i] = (y[i + 1] - y[i]) / h;
  }
  std::vector<double> m(n);
  m[0] = secant[0];
  m[n - 1] = secant[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (secant[i - 1] * secant[i] <= 0.0)
      m[i] = 0.0;
    else
      m[i] = 0.5 * (secant[i - 1] + secant[i]);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (secant[i] == 0.0) {
      m[i] = 0.0;
      m[i + 1] = 0.0;
      continue;
    }
    const double a = m[i] / secant[i];
    const double b = m[i + 1] / secant[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      m[i] = tau * a * secant[i];
      m[i + 1] = tau * b * secant[i];
    }
  }
  return m;
}

// Cubic Hermite evaluation on the segment [x0, x1].
inline double hermite_eval(double x0, double x1, double y0, double y1, double m0,
                           double m1, double x) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
}

// Fits decile knots on the validation risks. Tied deciles are collapsed to a
// single knot whose mapped value is the mean of the merged decile values,
// keeping the knot sequence a function.
inline Calibrator fit_calibrator(std::vector<double> risks) {
  if (risks.size() < 11)
    throw std::invalid_argument("fit_calibrator: need at least 11 risk values");
  for (double r : risks)
    if (!std::isfinite(r)) throw std::invalid_argument("fit_calibrator: non-finite risk");
  std::sort(risks.begin(), risks.end());
  if (risks.front() == risks.back())
    throw std::runtime_error("fit_calibrator: degenerate risk distribution (all values equal)");

  std::vector<double> knots(11), values(11);
  for (int k = 0; k <= 10; ++k) {
    knots[k] = percentile_sorted(risks, 10.0 * k);
    values[k] = 0.1 * k;
  }

  Calibrator cal;
  std::size_t i = 0;
  while (i < knots.size()) {
    std::size_t j = i;
    double value_sum = 0.0;
    while (j < knots.size() && knots[j] == knots[i]) {
      value_sum += values[j];
      ++j;
    }
    cal.knot_risks.push_back(knots[i]);
    cal.knot_values.push_back(value_sum / static_cast<double>(j - i));
    i = j;
  }
  cal.knot_slopes = fritsch_carlson_slopes(cal.knot_risks, cal.knot_values);
  return cal;
}

// Evaluates the calibration map; outside the knot range the map clamps to the
// endpoint values 0 and 1.
inline double calibrate(const Calibrator& cal, double r) {
  if (!cal.fitted()) throw std::logic_error("calibrate: calibrator not fitted");
  const auto& xs = cal.knot_risks;
  if (r <= xs.front()) return r == xs.front() ? cal.knot_values.front() : 0.0;
  if (r >= xs.back()) return r == xs.back() ? cal.knot_values.back() : 1.0;
  const std::size_t seg =
      static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), r) - xs.begin()) - 1;
  if (r == xs[seg]) return cal.knot_values[seg];  // exact knot passthrough
  const double y = hermite_eval(xs[seg], xs[seg + 1], cal.knot_values[seg],
                                cal.knot_values[seg + 1], cal.knot_slopes[seg],
                                cal.knot_slopes[seg + 1], r);
  return std::clamp(y, 0.0, 1.0);
}

}  // namespace survplane
