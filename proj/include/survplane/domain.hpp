#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace survplane {

// Survival label of a single visit. For converter eyes (event = 1),
// time_months is the interval from this visit to the first converted visit;
// it is <= 0 once the visit itself is in the converted stage. For censored
// eyes (event = 0) it is the interval to the last observed visit.
struct SurvivalLabel {
  double time_months = 0.0;
  int event = 0;
};

struct Visit {
  double visit_time = 0.0;  // months since the eye's first visit
  std::vector<double> features;
  std::optional<SurvivalLabel> label;
  // Optional alternative acquisitions of the same visit; predictions are
  // averaged over them at inference time.
  std::vector<std::vector<double>> views;
};

// Eyes with time-ordered visits. std::map keeps eye iteration order
// deterministic for sampling and serialization.
struct Cohort {
  std::map<std::string, std::vector<Visit>> eyes;
  std::size_t feature_dim = 0;
  bool labeled = false;

  std::size_t visit_count() const {
    std::size_t n = 0;
    for (const auto& [id, visits] : eyes) n += visits.size();
    return n;
  }
};

struct TimeNormalizer {
  double horizon_months = 36.0;
};

// Linear map of months onto horizon units (36 months -> 1.0 by default).
// Values past the horizon pass through unclamped; extrapolation is the
// caller's explicit choice.
inline double normalize_time(double months, const TimeNormalizer& norm = {}) {
  if (!(norm.horizon_months > 0.0))
    throw std::invalid_argument("normalize_time: horizon must be positive");
  if (months < 0.0)
    throw std::invalid_argument("normalize_time: months must be non-negative");
  return months / norm.horizon_months;
}

// Stage at the visit: 1 once the eye has converted (event observed and the
// conversion lies at or before this visit), else 0.
inline int derive_stage(const SurvivalLabel& label) {
  return (label.event == 1 && label.time_months <= 0.0) ? 1 : 0;
}

struct Violation {
  std::string eye_id;
  std::size_t visit_index = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }

  std::string to_string() const {
    std::ostringstream os;
    for (const auto& v : violations)
      os << v.eye_id << "[" << v.visit_index << "]: " << v.message << "\n";
    return os.str();
  }
};

// Checks every structural invariant and reports all violations; never throws.
inline ValidationReport validate_cohort(const Cohort& cohort) {
  constexpr double kLabelTolerance = 1e-6;  // months
  ValidationReport report;
  auto add = [&](const std::string& eye, std::size_t idx, std::string msg) {
    report.violations.push_back({eye, idx, std::move(msg)});
  };

  for (const auto& [eye_id, visits] : cohort.eyes) {
    for (std::size_t i = 0; i < visits.size(); ++i) {
      const Visit& v = visits[i];
      if (i > 0 && !(v.visit_time > visits[i - 1].visit_time))
        add(eye_id, i, "visit_time not strictly increasing");
      if (v.features.size() != cohort.feature_dim)
        add(eye_id, i,
            "feature dimension " + std::to_string(v.features.size()) +
                " != cohort dimension " + std::to_string(cohort.feature_dim));
      for (const auto& view : v.views)
        if (view.size() != cohort.feature_dim) {
          add(eye_id, i, "view dimension mismatch");
          break;
        }
      if (!cohort.labeled) continue;

      if (!v.label.has_value()) {
        add(eye_id, i, "labeled cohort has visit without label");
        continue;
      }
      const SurvivalLabel& lab = *v.label;
      if (!std::isfinite(lab.time_months))
        add(eye_id, i, "label time is not finite");
      if (lab.event != 0 && lab.event != 1)
        add(eye_id, i, "event indicator must be 0 or 1");
      if (lab.event == 0 && lab.time_months < 0.0)
        add(eye_id, i, "censoring time before current visit");
    }
    if (!cohort.labeled) continue;

    // Eye-level label consistency.
    const Visit* prev = nullptr;
    for (std::size_t i = 0; i < visits.size(); ++i) {
      if (!visits[i].label.has_value()) continue;
      if (prev) {
        const SurvivalLabel& a = *prev->label;
        const SurvivalLabel& b = *visits[i].label;
        if (a.event != b.event)
          add(eye_id, i, "event indicator changes within eye");
        if (a.event == 1 && b.event == 1) {
          const double gap = visits[i].visit_time - prev->visit_time;
          if (std::abs(a.time_months - gap - b.time_months) > kLabelTolerance)
            add(eye_id, i, "conversion time inconsistent with visit gap");
        }
      }
      prev = &visits[i];
    }
  }
  return report;
}

// Copy with all labels removed, for unsupervised fine-tuning inputs.
inline Cohort without_labels(const Cohort& cohort) {
  Cohort out = cohort;
  out.labeled = false;
  for (auto& [id, visits] : out.eyes)
    for (auto& v : visits) v.label.reset();
  return out;
}

}  // namespace survplane
