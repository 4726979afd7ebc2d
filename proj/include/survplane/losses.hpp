#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "survplane/model.hpp"

namespace survplane {

enum class TrainMode { kSupervised, kUnsupervised };

constexpr double kBceEps = 1e-7;

// Binary cross entropy with a soft target; the prediction is clamped away
// from {0, 1} before the logs.
inline double bce(double target, double pred) {
  if (!(target >= 0.0 && target <= 1.0))
    throw std::invalid_argument("bce: target must lie in [0, 1]");
  const double p = std::clamp(pred, kBceEps, 1.0 - kBceEps);
  return -(target * std::log(p) + (1.0 - target) * std::log1p(-p));
}

// One visit drawn into a training batch.
struct BatchSample {
  int eye = 0;                 // eye ordinal within the cohort
  std::vector<double> input;   // encoder input
  double time_months = 0.0;    // T, supervised mode only
  int event = 0;               // E, supervised mode only
  int stage = 0;               // derived stage y, supervised mode only
};

// Intra-subject pair: `early` precedes `late` by a positive visit-time gap.
struct TrainPair {
  BatchSample early;  // never in the converted stage in supervised batches
  BatchSample late;
  double gap = 0.0;   // normalized time between the visits, > 0
};

struct PairBatch {
  std::vector<TrainPair> pairs;
  bool supervised = true;
};

// Ordered index pairs over the flattened batch samples (pair i contributes
// indices 2i for early, 2i+1 for late). converts_before holds (m, n) with m
// converting before n; converts_after its mirror.
struct ComparablePairSets {
  std::vector<std::pair<std::size_t, std::size_t>> converts_before;
  std::vector<std::pair<std::size_t, std::size_t>> converts_after;

  std::size_t total() const { return converts_before.size() + converts_after.size(); }
};

struct RankSample {
  double time_months = 0.0;
  int event = 0;
  int eye = 0;
};

// Censoring-aware comparable pairs over all ordered sample pairs, including
// cross-eye ones. (m, n) is comparable with m first when T_m < T_n and
// either m's conversion was observed or both samples come from the same eye.
inline ComparablePairSets ranking_sets(const std::vector<RankSample>& samples) {
  ComparablePairSets sets;
  const std::size_t n = samples.size();
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      if (m == k) continue;
      const RankSample& a = samples[m];
      const RankSample& b = samples[k];
      const bool same_eye = a.eye == b.eye;
      if (a.time_months < b.time_months && (a.event == 1 || same_eye))
        sets.converts_before.emplace_back(m, k);
      if (a.time_months > b.time_months && (b.event == 1 || same_eye))
        sets.converts_after.emplace_back(m, k);
    }
  }
  return sets;
}

// Without labels only intra-subject order is known: the later visit of every
// pair converts first.
inline ComparablePairSets intra_subject_sets(std::size_t n_pairs) {
  ComparablePairSets sets;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    sets.converts_before.emplace_back(2 * i + 1, 2 * i);
    sets.converts_after.emplace_back(2 * i, 2 * i + 1);
  }
  return sets;
}

inline std::vector<RankSample> batch_rank_samples(const PairBatch& batch) {
  std::vector<RankSample> samples;
  samples.reserve(2 * batch.pairs.size());
  for (const auto& pair : batch.pairs) {
    samples.push_back({pair.early.time_months, pair.early.event, pair.early.eye});
    samples.push_back({pair.late.time_months, pair.late.event, pair.late.eye});
  }
  return samples;
}

// Pairwise logistic ranking loss on risk differences, averaged over all
// comparable pairs; zero when there is nothing to compare.
inline double ranking_loss(const std::vector<double>& risks, const ComparablePairSets& sets,
                           double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("ranking_loss: gamma must be positive");
  const std::size_t n = sets.total();
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (const auto& [m, k] : sets.converts_before)
    sum -= log_sigmoid(gamma * (risks.at(m) - risks.at(k)));
  for (const auto& [m, k] : sets.converts_after)
    sum -= log_sigmoid(-gamma * (risks.at(m) - risks.at(k)));
  return sum / static_cast<double>(n);
}

// Per-sample quantities shared by loss evaluation and backprop.
struct PairForward {
  std::vector<double> embed_early, embed_late;
  double risk_early = 0.0, risk_late = 0.0;
  double p0_early = 0.0;    // stage probability from the early visit
  double p0_late = 0.0;     // stage probability from the late visit
  double p_gap_early = 0.0; // conversion within the gap, forecast from early
};

inline PairForward pair_forward(const Model& model, const TrainPair& pair,
                                GradientTape* tape_early = nullptr,
                                GradientTape* tape_late = nullptr) {
  PairForward f;
  f.embed_early = encoder_forward(model.encoder, pair.early.input, tape_early);
  f.embed_late = encoder_forward(model.encoder, pair.late.input, tape_late);
  f.risk_early = risk(model.head, f.embed_early);
  f.risk_late = risk(model.head, f.embed_late);
  f.p0_early = sigmoid(f.risk_early + model.head.beta);
  f.p0_late = sigmoid(f.risk_late + model.head.beta);
  f.p_gap_early = sigmoid(f.risk_early + bias_at(model.head, pair.gap));
  return f;
}

// Mean over pairs of the three supervised stage terms: both visits against
// their stage labels plus the forecast from the early visit against the late
// stage label.
inline double classification_loss(const PairBatch& batch, const Model& model) {
  if (!batch.supervised)
    throw std::invalid_argument("classification_loss: labels required");
  if (batch.pairs.empty()) throw std::invalid_argument("classification_loss: empty batch");
  double sum = 0.0;
  for (const auto& pair : batch.pairs) {
    const PairForward f = pair_forward(model, pair);
    sum += bce(pair.early.stage, f.p0_early) + bce(pair.late.stage, f.p0_late) +
           bce(pair.late.stage, f.p_gap_early);
  }
  return sum / static_cast<double>(batch.pairs.size());
}

// Mean over pairs of bce(target = stage probability at the late visit,
// pred = forecast from the early visit). Label-free.
inline double consistency_loss(const PairBatch& batch, const Model& model) {
  if (batch.pairs.empty()) throw std::invalid_argument("consistency_loss: empty batch");
  double sum = 0.0;
  for (const auto& pair : batch.pairs) {
    const PairForward f = pair_forward(model, pair);
    sum += bce(f.p0_late, f.p_gap_early);
  }
  return sum / static_cast<double>(batch.pairs.size());
}

struct LossBreakdown {
  double classification = 0.0;
  double consistency = 0.0;
  double ranking = 0.0;
  double total = 0.0;
};

// Equal-weight sum of the components. Supervised mode ranks all ordered
// sample pairs of the batch; unsupervised mode drops the classification term
// and ranks intra-subject pairs only.
inline LossBreakdown total_loss(const PairBatch& batch, const Model& model, TrainMode mode) {
  if (batch.pairs.empty()) throw std::invalid_argument("total_loss: empty batch");
  if (mode == TrainMode::kSupervised && !batch.supervised)
    throw std::invalid_argument("total_loss: supervised mode needs a labeled batch");
  LossBreakdown out;
  std::vector<double> risks;
  risks.reserve(2 * batch.pairs.size());
  for (const auto& pair : batch.pairs) {
    const PairForward f = pair_forward(model, pair);
    risks.push_back(f.risk_early);
    risks.push_back(f.risk_late);
    if (mode == TrainMode::kSupervised)
      out.classification += bce(pair.early.stage, f.p0_early) +
                            bce(pair.late.stage, f.p0_late) +
                            bce(pair.late.stage, f.p_gap_early);
    out.consistency += bce(f.p0_late, f.p_gap_early);
  }
  const double b = static_cast<double>(batch.pairs.size());
  out.classification /= b;
  out.consistency /= b;

  const ComparablePairSets sets = (mode == TrainMode::kSupervised)
                                      ? ranking_sets(batch_rank_samples(batch))
                                      : intra_subject_sets(batch.pairs.size());
  out.ranking = ranking_loss(risks, sets, model.head.gamma());
  out.total = out.classification + out.consistency + out.ranking;
  return out;
}

}  // namespace survplane
