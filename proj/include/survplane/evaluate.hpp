#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "survplane/calibration.hpp"
#include "survplane/domain.hpp"
#include "survplane/metrics.hpp"
#include "survplane/model.hpp"
#include "survplane/rng.hpp"

namespace survplane {

// Per-visit predictions over the evaluation protocol: pre-conversion labeled
// visits only, multi-view averaged.
struct ScoredCohort {
  std::vector<std::string> eye_ids;
  std::vector<double> visit_times;
  std::vector<double> risks;
  std::vector<SurvivalLabel> labels;
  // scores[h][i]: conversion probability of visit i within horizon h
  std::vector<std::vector<double>> scores;
  std::vector<double> horizons_months;
};

inline ScoredCohort score_cohort(const Model& model, const Cohort& cohort,
                                 const std::vector<double>& horizons_months,
                                 const TimeNormalizer& normalizer = {}) {
  ScoredCohort out;
  out.horizons_months = horizons_months;
  out.scores.resize(horizons_months.size());
  for (const auto& [id, visits] : cohort.eyes) {
    for (const auto& v : visits) {
      if (!v.label.has_value())
        throw std::invalid_argument("score_cohort: cohort must be labeled");
      if (derive_stage(*v.label) == 1) continue;
      out.eye_ids.push_back(id);
      out.visit_times.push_back(v.visit_time);
      out.risks.push_back(risk_multiview(model, v));
      out.labels.push_back(*v.label);
      for (std::size_t h = 0; h < horizons_months.size(); ++h)
        out.scores[h].push_back(
            predict_multiview(model, v, normalize_time(horizons_months[h], normalizer)));
    }
  }
  return out;
}

struct HorizonMetrics {
  double horizon_months = 0.0;
  std::optional<double> auroc;
  std::optional<double> balanced_acc;
  double threshold = 0.0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::string note;  // reason when a metric is undefined
};

struct MetricSummary {
  std::map<std::string, double> mean;
  std::map<std::string, double> stddev;
  std::map<std::string, std::size_t> undefined;  // resamples skipped per metric
  std::size_t resamples = 0;
};

struct EvalReport {
  std::size_t n_visits = 0;
  std::size_t n_eyes = 0;
  std::vector<HorizonMetrics> horizons;
  std::optional<double> concordance_index;
  std::string concordance_note;
  std::optional<MetricSummary> bootstrap;
};

// Point metrics on a scored cohort. Thresholds come from the caller (selected
// on a validation cohort) or, when absent, from the evaluated data itself.
inline EvalReport evaluate_scored(const ScoredCohort& scored,
                                  const std::map<double, double>* thresholds = nullptr) {
  EvalReport report;
  report.n_visits = scored.risks.size();
  {
    std::vector<std::string> ids = scored.eye_ids;
    std::sort(ids.begin(), ids.end());
    report.n_eyes = std::unique(ids.begin(), ids.end()) - ids.begin();
  }
  for (std::size_t h = 0; h < scored.horizons_months.size(); ++h) {
    HorizonMetrics hm;
    hm.horizon_months = scored.horizons_months[h];
    try {
      const HorizonEval eval =
          build_horizon_eval(hm.horizon_months, scored.scores[h], scored.labels);
      for (std::size_t i = 0; i < eval.scores.size(); ++i) {
        if (!eval.included[i]) continue;
        (eval.truth[i] == 1 ? hm.n_positive : hm.n_negative) += 1;
      }
      hm.auroc = horizon_auroc(eval);
      if (thresholds && thresholds->count(hm.horizon_months))
        hm.threshold = thresholds->at(hm.horizon_months);
      else
        hm.threshold = select_threshold(eval);
      hm.balanced_acc = balanced_accuracy(eval, hm.threshold);
    } catch (const undefined_metric_error& e) {
      hm.note = e.what();
    }
    report.horizons.push_back(hm);
  }
  try {
    report.concordance_index = concordance(scored.risks, scored.labels);
  } catch (const undefined_metric_error& e) {
    report.concordance_note = e.what();
  }
  return report;
}

// Eye-level bootstrap: each resample keeps one uniformly drawn eligible
// visit per eye and recomputes every metric. Undefined metrics are skipped
// and counted. Resample r draws from its own stream derived from (seed, r),
// so results do not depend on evaluation order.
inline MetricSummary bootstrap_eye_level(const Model& model, const Cohort& cohort,
                                         const std::vector<double>& horizons_months,
                                         std::size_t n_resamples, std::uint64_t seed,
                                         const TimeNormalizer& normalizer = {},
                                         const std::map<double, double>* thresholds = nullptr) {
  const ScoredCohort scored = score_cohort(model, cohort, horizons_months, normalizer);

  // Group scored visit indices per eye.
  std::map<std::string, std::vector<std::size_t>> per_eye;
  for (std::size_t i = 0; i < scored.eye_ids.size(); ++i)
    per_eye[scored.eye_ids[i]].push_back(i);

  std::map<std::string, std::vector<double>> values;
  MetricSummary summary;
  summary.resamples = n_resamples;

  for (std::size_t r = 0; r < n_resamples; ++r) {
    Rng rng(derive_seed(seed, r));
    std::vector<std::size_t> chosen;
    chosen.reserve(per_eye.size());
    for (const auto& [id, indices] : per_eye)
      chosen.push_back(indices[rng.below(indices.size())]);

    std::vector<double> risks;
    std::vector<SurvivalLabel> labels;
    for (std::size_t idx : chosen) {
      risks.push_back(scored.risks[idx]);
      labels.push_back(scored.labels[idx]);
    }
    for (std::size_t h = 0; h < horizons_months.size(); ++h) {
      std::vector<double> scores;
      for (std::size_t idx : chosen) scores.push_back(scored.scores[h][idx]);
      const std::string suffix = std::to_string(static_cast<int>(horizons_months[h]));
      try {
        const HorizonEval eval = build_horizon_eval(horizons_months[h], scores, labels);
        values["auroc_" + suffix].push_back(horizon_auroc(eval));
        const double threshold = (thresholds && thresholds->count(horizons_months[h]))
                                     ? thresholds->at(horizons_months[h])
                                     : select_threshold(eval);
        values["balanced_acc_" + suffix].push_back(balanced_accuracy(eval, threshold));
      } catch (const undefined_metric_error&) {
        summary.undefined["auroc_" + suffix] += 1;
        summary.undefined["balanced_acc_" + suffix] += 1;
      }
    }
    try {
      values["concordance"].push_back(concordance(risks, labels));
    } catch (const undefined_metric_error&) {
      summary.undefined["concordance"] += 1;
    }
  }

  for (const auto& [name, vals] : values) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(vals.size());
    summary.mean[name] = mean;
    summary.stddev[name] = std::sqrt(var);
  }
  return summary;
}

}  // namespace survplane
