#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "survplane/domain.hpp"
#include "survplane/metrics.hpp"
#include "survplane/rng.hpp"

namespace survplane {

// Affine feature-space transform emulating a scanner change. Empty matrix
// and offset mean identity.
struct DomainShift {
  std::vector<std::vector<double>> matrix;  // d x d
  std::vector<double> offset;               // d

  bool is_identity() const { return matrix.empty() && offset.empty(); }
};

// Severity-scaled shift: a product of small Givens rotations (two passes over
// adjacent coordinate pairs) followed by a mild per-row exponential scale,
// plus an offset. Invertible and well-conditioned for severity in [0, 1].
inline DomainShift make_domain_shift(std::size_t d, double severity, std::uint64_t seed) {
  if (severity < 0.0) throw std::invalid_argument("make_domain_shift: negative severity");
  DomainShift shift;
  if (severity == 0.0 || d == 0) return shift;
  Rng rng(derive_seed(seed, 0xD05E));

  std::vector<std::vector<double>> b(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) b[i][i] = 1.0;
  auto rotate = [&](std::size_t i, std::size_t j, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    for (std::size_t col = 0; col < d; ++col) {
      const double bi = b[i][col], bj = b[j][col];
      b[i][col] = c * bi - s * bj;
      b[j][col] = s * bi + c * bj;
    }
  };
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t i = 0; i + 1 < d; ++i)
      rotate(i, i + 1, severity * 0.25 * 3.14159265358979323846 * rng.uniform(-1.0, 1.0));
  for (std::size_t i = 0; i < d; ++i) {
    const double scale = std::exp(severity * rng.uniform(-0.5, 0.5));
    for (std::size_t col = 0; col < d; ++col) b[i][col] *= scale;
  }
  shift.matrix = std::move(b);
  shift.offset.resize(d);
  for (double& o : shift.offset) o = severity * rng.uniform(-0.5, 0.5);
  return shift;
}

inline std::vector<double> apply_shift(const DomainShift& shift, const std::vector<double>& x) {
  if (shift.is_identity()) return x;
  const std::size_t d = x.size();
  if (shift.matrix.size() != d || shift.offset.size() != d)
    throw std::invalid_argument("apply_shift: dimension mismatch");
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double sum = shift.offset[i];
    for (std::size_t j = 0; j < d; ++j) sum += shift.matrix[i][j] * x[j];
    out[i] = sum;
  }
  return out;
}

// Latent progression model: severity s(t) = s0 + rate * t per eye, conversion
// when s crosses the threshold. Informative feature dims carry monotone
// powers of s plus observation noise; the rest are pure noise.
struct SynthConfig {
  std::size_t n_eyes = 200;
  std::size_t feature_dim = 8;
  std::size_t informative_dims = 2;
  double baseline_min = 0.0;
  double baseline_max = 0.6;
  double log_rate_mu = -4.6;     // rate ~ LogNormal, severity units per month
  double log_rate_sigma = 0.4;
  double conversion_threshold = 1.0;
  double noise_std = 0.05;
  double visit_interval_min = 3.0;   // months
  double visit_interval_max = 12.0;
  double study_length_months = 84.0;
  // Observed converter fraction enforced by rescaling all rates; <= 0 keeps
  // the drawn rates untouched.
  double converter_target_fraction = 0.2;
  DomainShift shift;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  std::map<std::string, double> conversion_months;  // true t* per eye, from baseline
};

inline void validate_synth_config(const SynthConfig& config) {
  if (config.n_eyes == 0) throw std::invalid_argument("synth: n_eyes must be positive");
  if (config.informative_dims < 1 || config.informative_dims > config.feature_dim)
    throw std::invalid_argument("synth: need feature_dim >= informative_dims >= 1");
  if (!(config.baseline_min >= 0.0 && config.baseline_min <= config.baseline_max))
    throw std::invalid_argument("synth: invalid baseline severity range");
  if (!(config.baseline_max < config.conversion_threshold))
    throw std::invalid_argument("synth: baseline severity must start below the threshold");
  if (!(config.log_rate_sigma >= 0.0)) throw std::invalid_argument("synth: negative rate sigma");
  if (!(config.noise_std >= 0.0)) throw std::invalid_argument("synth: negative noise std");
  if (!(config.visit_interval_min > 0.0 && config.visit_interval_min <= config.visit_interval_max))
    throw std::invalid_argument("synth: invalid visit interval range");
  if (!(config.study_length_months >= 0.0))
    throw std::invalid_argument("synth: negative study length");
  if (config.converter_target_fraction > 1.0)
    throw std::invalid_argument("synth: converter fraction above 1");
}

inline std::string synth_eye_id(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "eye" + digits;
}

inline std::pair<Cohort, GroundTruth> generate(const SynthConfig& config) {
  validate_synth_config(config);
  const std::size_t n = config.n_eyes;

  // Pass 1: latent state and visit schedule per eye, each from its own
  // derived stream.
  std::vector<double> baseline(n), rate(n);
  std::vector<std::vector<double>> schedule(n);
  for (std::size_t e = 0; e < n; ++e) {
    Rng rng(derive_seed(config.seed, e));
    baseline[e] = rng.uniform(config.baseline_min, config.baseline_max);
    rate[e] = rng.log_normal(config.log_rate_mu, config.log_rate_sigma);
    double t = 0.0;
    schedule[e].push_back(0.0);
    while (true) {
      t += rng.uniform(config.visit_interval_min, config.visit_interval_max);
      if (t > config.study_length_months) break;
      schedule[e].push_back(t);
    }
  }

  // Rescale rates so that exactly round(n * fraction) eyes convert within
  // their own observation window.
  double rescale = 1.0;
  if (config.converter_target_fraction > 0.0) {
    const std::size_t want =
        static_cast<std::size_t>(std::llround(config.converter_target_fraction * n));
    if (want > 0) {
      std::vector<double> ratio;  // conversion time over observed span
      ratio.reserve(n);
      for (std::size_t e = 0; e < n; ++e) {
        const double span = schedule[e].back();
        const double t_star = (config.conversion_threshold - baseline[e]) / rate[e];
        ratio.push_back(span > 0.0 ? t_star / span
                                   : std::numeric_limits<double>::infinity());
      }
      std::sort(ratio.begin(), ratio.end());
      rescale = ratio[want - 1];
      if (!std::isfinite(rescale))
        throw std::runtime_error("synth: converter target unreachable (single-visit eyes)");
    }
  }

  Cohort cohort;
  cohort.feature_dim = config.feature_dim;
  cohort.labeled = true;
  GroundTruth truth;

  for (std::size_t e = 0; e < n; ++e) {
    Rng noise(derive_seed(config.seed, n + e));
    const double rho = rate[e] * rescale;
    const double t_star = (config.conversion_threshold - baseline[e]) / rho;
    const double last = schedule[e].back();
    const bool converts = t_star <= last;
    const std::string id = synth_eye_id(e);
    truth.conversion_months[id] = t_star;

    std::vector<Visit> visits;
    for (double tv : schedule[e]) {
      Visit v;
      v.visit_time = tv;
      const double s = baseline[e] + rho * tv;
      v.features.resize(config.feature_dim);
      for (std::size_t m = 0; m < config.feature_dim; ++m) {
        if (m < config.informative_dims)
          v.features[m] = std::pow(s, static_cast<double>(m + 1)) +
                          config.noise_std * noise.normal();
        else
          v.features[m] = noise.normal();
      }
      v.features = apply_shift(config.shift, v.features);
      SurvivalLabel label;
      label.event = converts ? 1 : 0;
      label.time_months = converts ? t_star - tv : last - tv;
      v.label = label;
      visits.push_back(std::move(v));
    }
    cohort.eyes.emplace(id, std::move(visits));
  }
  return {std::move(cohort), std::move(truth)};
}

// Concordance of the ideal risk score (negative residual time to the true
// conversion) over the cohort's pre-conversion visits; the reference upper
// bound for trained models.
inline double oracle_concordance(const Cohort& cohort, const GroundTruth& truth) {
  std::vector<double> risks;
  std::vector<SurvivalLabel> labels;
  for (const auto& [id, visits] : cohort.eyes) {
    const auto it = truth.conversion_months.find(id);
    if (it == truth.conversion_months.end())
      throw std::invalid_argument("oracle_concordance: missing ground truth for " + id);
    for (const auto& v : visits) {
      if (!v.label.has_value()) throw std::invalid_argument("oracle_concordance: missing label");
      if (derive_stage(*v.label) == 1) continue;
      risks.push_back(-(it->second - v.visit_time));
      labels.push_back(*v.label);
    }
  }
  return concordance(risks, labels);
}

}  // namespace survplane
