#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "survplane/domain.hpp"

namespace survplane {

// A metric that has no defined value on the given sample (empty class, no
// comparable pairs). Reported, never silently skipped.
struct undefined_metric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Horizon-classification view of a scored sample set: who converts within
// `horizon_months`. Censored-before-horizon samples and already-converted
// samples carry included = false.
struct HorizonEval {
  double horizon_months = 0.0;
  std::vector<double> scores;
  std::vector<bool> included;
  std::vector<int> truth;  // 1 = converts within the horizon
};

// Applies the inclusion rules: positives have an observed event inside
// (0, horizon]; samples surviving past the horizon are negatives (converters
// too, unless post_horizon_converters_negative is off); censored at or
// before the horizon and already-converted samples are excluded.
inline HorizonEval build_horizon_eval(double horizon_months, const std::vector<double>& scores,
                                      const std::vector<SurvivalLabel>& labels,
                                      bool post_horizon_converters_negative = true) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("build_horizon_eval: size mismatch");
  HorizonEval eval;
  eval.horizon_months = horizon_months;
  eval.scores = scores;
  eval.included.resize(labels.size(), false);
  eval.truth.resize(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const SurvivalLabel& lab = labels[i];
    if (lab.event == 1 && lab.time_months <= 0.0) continue;  // already converted
    if (lab.event == 1 && lab.time_months <= horizon_months) {
      eval.included[i] = true;
      eval.truth[i] = 1;
    } else if (lab.time_months > horizon_months) {
      if (lab.event == 1 && !post_horizon_converters_negative) continue;
      eval.included[i] = true;
      eval.truth[i] = 0;
    }
    // censored at or before the horizon: excluded
  }
  return eval;
}

// AUROC via the rank-sum form of the Mann-Whitney statistic; tied scores get
// mid-ranks, so ties contribute 0.5 per pair.
inline double horizon_auroc(const HorizonEval& eval) {
  std::vector<std::pair<double, int>> pts;  // (score, truth)
  for (std::size_t i = 0; i < eval.scores.size(); ++i)
    if (eval.included[i]) pts.emplace_back(eval.scores[i], eval.truth[i]);
  std::size_t n_pos = 0;
  for (const auto& [s, y] : pts) n_pos += (y == 1);
  const std::size_t n_neg = pts.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw undefined_metric_error("horizon_auroc: needs a positive and a negative sample");

  std::sort(pts.begin(), pts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i;
    while (j < pts.size() && pts[j].first == pts[i].first) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (pts[k].second == 1) rank_sum_pos += mid_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Mean of sensitivity and specificity, predicting positive at
// score >= threshold.
inline double balanced_accuracy(const HorizonEval& eval, double threshold) {
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < eval.scores.size(); ++i) {
    if (!eval.included[i]) continue;
    const bool predicted = eval.scores[i] >= threshold;
    if (eval.truth[i] == 1)
      predicted ? ++tp : ++fn;
    else
      predicted ? ++fp : ++tn;
  }
  if (tp + fn == 0 || tn + fp == 0)
    throw undefined_metric_error("balanced_accuracy: needs a positive and a negative sample");
  const double sens = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double spec = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return 0.5 * (sens + spec);
}

// Operating point maximizing balanced accuracy among midpoints of adjacent
// distinct scores; ties resolve to the smallest threshold.
inline double select_threshold(const HorizonEval& eval) {
  std::vector<double> scores;
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < eval.scores.size(); ++i) {
    if (!eval.included[i]) continue;
    scores.push_back(eval.scores[i]);
    (eval.truth[i] == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg)
    throw undefined_metric_error("select_threshold: needs a positive and a negative sample");
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  if (scores.size() < 2) return scores.front();  // all scores tied
  double best_threshold = 0.0;
  double best_value = -1.0;
  for (std::size_t i = 0; i + 1 < scores.size(); ++i) {
    const double candidate = 0.5 * (scores[i] + scores[i + 1]);
    const double value = balanced_accuracy(eval, candidate);
    if (value > best_value) {
      best_value = value;
      best_threshold = candidate;
    }
  }
  return best_threshold;
}

// Harrell's concordance: over pairs whose conversion order is identified
// (earlier time had its event observed), the fraction ranked correctly by
// risk, with half credit for risk ties.
inline double concordance(const std::vector<double>& risks,
                          const std::vector<SurvivalLabel>& labels) {
  if (risks.size() != labels.size())
    throw std::invalid_argument("concordance: size mismatch");
  double comparable = 0.0;
  double concordant = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (i == j) continue;
      if (!(labels[i].time_months < labels[j].time_months) || labels[i].event != 1) continue;
      comparable += 1.0;
      if (risks[i] > risks[j])
        concordant += 1.0;
      else if (risks[i] == risks[j])
        concordant += 0.5;
    }
  }
  if (comparable == 0.0)
    throw undefined_metric_error("concordance: no comparable pairs");
  return concordant / comparable;
}

// Product-limit survival curve over distinct event times.
struct KMCurve {
  std::vector<double> times;        // distinct event times, ascending
  std::vector<double> survival;     // S immediately after each event time
  std::vector<std::size_t> at_risk; // risk-set size at each event time
  std::vector<std::size_t> events;  // events at each time
};

inline KMCurve kaplan_meier(const std::vector<SurvivalLabel>& labels) {
  if (labels.empty()) throw std::invalid_argument("kaplan_meier: empty sample");
  for (const auto& lab : labels)
    if (!(lab.time_months >= 0.0))
      throw std::invalid_argument("kaplan_meier: times must be non-negative");

  // Sort times; at each distinct event time the risk set is everyone whose
  // observed time is >= it (censoring at the same time leaves the risk set
  // after the event).
  std::vector<std::pair<double, int>> obs;  // (time, event)
  obs.reserve(labels.size());
  for (const auto& lab : labels) obs.emplace_back(lab.time_months, lab.event);
  std::sort(obs.begin(), obs.end());

  KMCurve curve;
  double survival = 1.0;
  std::size_t i = 0;
  const std::size_t n = obs.size();
  while (i < n) {
    std::size_t j = i;
    std::size_t deaths = 0;
    while (j < n && obs[j].first == obs[i].first) {
      deaths += (obs[j].second == 1);
      ++j;
    }
    if (deaths > 0) {
      const std::size_t at_risk = n - i;
      survival *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      curve.times.push_back(obs[i].first);
      curve.survival.push_back(survival);
      curve.at_risk.push_back(at_risk);
      curve.events.push_back(deaths);
    }
    i = j;
  }
  return curve;
}

// Right-continuous step lookup; S(t) = 1 before the first event time.
inline double km_survival_at(const KMCurve& curve, double t) {
  double s = 1.0;
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    if (curve.times[i] <= t)
      s = curve.survival[i];
    else
      break;
  }
  return s;
}

struct RiskGroupKM {
  double lower = 0.0;  // calibrated-risk interval [lower, upper)
  double upper = 1.0;  // last group is closed at 1
  std::size_t size = 0;
  KMCurve curve;
};

// Splits samples into calibrated-risk bands at the cut points and fits one
// survival curve per nonempty band. Returns groups in increasing risk order.
inline std::vector<RiskGroupKM> stratify_and_km(const std::vector<double>& calibrated_risks,
                                                const std::vector<SurvivalLabel>& labels,
                                                const std::vector<double>& cut_points = {1.0 / 3.0,
                                                                                         2.0 / 3.0}) {
  if (calibrated_risks.size() != labels.size())
    throw std::invalid_argument("stratify_and_km: size mismatch");
  if (calibrated_risks.empty()) throw std::invalid_argument("stratify_and_km: empty input");
  for (std::size_t i = 0; i + 1 < cut_points.size(); ++i)
    if (!(cut_points[i] < cut_points[i + 1]))
      throw std::invalid_argument("stratify_and_km: cut points must be sorted");
  for (double c : cut_points)
    if (!(c > 0.0 && c < 1.0))
      throw std::invalid_argument("stratify_and_km: cut points must lie in (0, 1)");

  const std::size_t n_groups = cut_points.size() + 1;
  std::vector<std::vector<SurvivalLabel>> members(n_groups);
  for (std::size_t i = 0; i < calibrated_risks.size(); ++i) {
    std::size_t g = 0;
    while (g < cut_points.size() && calibrated_risks[i] >= cut_points[g]) ++g;
    members[g].push_back(labels[i]);
  }
  std::vector<RiskGroupKM> out;
  for (std::size_t g = 0; g < n_groups; ++g) {
    if (members[g].empty()) continue;
    RiskGroupKM group;
    group.lower = g == 0 ? 0.0 : cut_points[g - 1];
    group.upper = g == cut_points.size() ? 1.0 : cut_points[g];
    group.size = members[g].size();
    group.curve = kaplan_meier(members[g]);
    out.push_back(std::move(group));
  }
  return out;
}

}  // namespace survplane
