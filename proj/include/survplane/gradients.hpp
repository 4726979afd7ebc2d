#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "survplane/losses.hpp"
#include "survplane/model.hpp"

namespace survplane {

struct GradientOptions {
  // When set, the consistency target (the late visit's stage probability)
  // is treated as a constant and receives no gradient.
  bool stop_consistency_target = false;
};

// d bce(target, sigmoid(z)) / dz. Zero where the prediction clamp binds,
// matching the value computation exactly.
inline double bce_grad_logit(double pred, double target) {
  if (pred <= kBceEps || pred >= 1.0 - kBceEps) return 0.0;
  return pred - target;
}

// d bce(target, pred) / d target, with the prediction already clamped.
inline double bce_grad_target(double pred) {
  const double p = std::clamp(pred, kBceEps, 1.0 - kBceEps);
  return std::log1p(-p) - std::log(p);
}

struct LossGradients {
  LossBreakdown breakdown;
  ModelGradients grads;
};

// Analytic gradient of total_loss with respect to every parameter. The two
// Siamese branches share one parameter set, so both visits of each pair
// accumulate into the same encoder and head gradients.
inline LossGradients loss_gradients(const PairBatch& batch, const Model& model, TrainMode mode,
                                    const GradientOptions& options = {}) {
  if (batch.pairs.empty()) throw std::invalid_argument("loss_gradients: empty batch");
  if (mode == TrainMode::kSupervised && !batch.supervised)
    throw std::invalid_argument("loss_gradients: supervised mode needs a labeled batch");

  const std::size_t n_pairs = batch.pairs.size();
  const double inv_b = 1.0 / static_cast<double>(n_pairs);
  const std::size_t n_samples = 2 * n_pairs;

  std::vector<PairForward> fwd(n_pairs);
  std::vector<GradientTape> tapes(n_samples);
  std::vector<double> risks(n_samples);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    fwd[i] = pair_forward(model, batch.pairs[i], &tapes[2 * i], &tapes[2 * i + 1]);
    risks[2 * i] = fwd[i].risk_early;
    risks[2 * i + 1] = fwd[i].risk_late;
  }

  LossGradients out;
  out.grads = ModelGradients::zeros(model);

  // Scalar cotangents: d total / d risk per flattened sample, plus the head
  // scalars (alpha and gamma first via their effective values).
  std::vector<double> g_risk(n_samples, 0.0);
  double g_beta = 0.0, g_alpha_eff = 0.0, g_gamma_eff = 0.0;

  for (std::size_t i = 0; i < n_pairs; ++i) {
    const TrainPair& pair = batch.pairs[i];
    const PairForward& f = fwd[i];

    if (mode == TrainMode::kSupervised) {
      out.breakdown.classification +=
          inv_b * (bce(pair.early.stage, f.p0_early) + bce(pair.late.stage, f.p0_late) +
                   bce(pair.late.stage, f.p_gap_early));
      const double d_early = inv_b * bce_grad_logit(f.p0_early, pair.early.stage);
      g_risk[2 * i] += d_early;
      g_beta += d_early;
      const double d_late = inv_b * bce_grad_logit(f.p0_late, pair.late.stage);
      g_risk[2 * i + 1] += d_late;
      g_beta += d_late;
      const double d_gap = inv_b * bce_grad_logit(f.p_gap_early, pair.late.stage);
      g_risk[2 * i] += d_gap;
      g_beta += d_gap;
      g_alpha_eff += d_gap * pair.gap;
    }

    out.breakdown.consistency += inv_b * bce(f.p0_late, f.p_gap_early);
    const double d_pred = inv_b * bce_grad_logit(f.p_gap_early, f.p0_late);
    g_risk[2 * i] += d_pred;
    g_beta += d_pred;
    g_alpha_eff += d_pred * pair.gap;
    if (!options.stop_consistency_target) {
      const double d_target = inv_b * bce_grad_target(f.p_gap_early) * f.p0_late *
                              (1.0 - f.p0_late);
      g_risk[2 * i + 1] += d_target;
      g_beta += d_target;
    }
  }

  const ComparablePairSets sets = (mode == TrainMode::kSupervised)
                                      ? ranking_sets(batch_rank_samples(batch))
                                      : intra_subject_sets(n_pairs);
  const double gamma = model.head.gamma();
  out.breakdown.ranking = ranking_loss(risks, sets, gamma);
  if (sets.total() > 0) {
    const double inv_n = 1.0 / static_cast<double>(sets.total());
    for (const auto& [m, k] : sets.converts_before) {
      const double diff = risks[m] - risks[k];
      const double u = sigmoid(gamma * diff) - 1.0;  // d(-log sigmoid(x))/dx
      g_risk[m] += inv_n * gamma * u;
      g_risk[k] -= inv_n * gamma * u;
      g_gamma_eff += inv_n * diff * u;
    }
    for (const auto& [m, k] : sets.converts_after) {
      const double diff = risks[m] - risks[k];
      const double u = sigmoid(gamma * diff);  // d(-log(1 - sigmoid(x)))/dx
      g_risk[m] += inv_n * gamma * u;
      g_risk[k] -= inv_n * gamma * u;
      g_gamma_eff += inv_n * diff * u;
    }
  }

  out.breakdown.total =
      out.breakdown.classification + out.breakdown.consistency + out.breakdown.ranking;

  // Push the risk cotangents through w and the shared encoder.
  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::vector<double>& embed =
        (s % 2 == 0) ? fwd[s / 2].embed_early : fwd[s / 2].embed_late;
    for (std::size_t j = 0; j < embed.size(); ++j) out.grads.w[j] += g_risk[s] * embed[j];
    std::vector<double> grad_embed(embed.size());
    for (std::size_t j = 0; j < embed.size(); ++j) grad_embed[j] = g_risk[s] * model.head.w[j];
    encoder_backward(model.encoder, tapes[s], grad_embed, out.grads.encoder);
  }
  out.grads.beta = g_beta;
  // softplus'(x) = sigmoid(x)
  out.grads.alpha_raw = g_alpha_eff * sigmoid(model.head.alpha_raw);
  out.grads.gamma_raw = g_gamma_eff * sigmoid(model.head.gamma_raw);
  return out;
}

}  // namespace survplane
