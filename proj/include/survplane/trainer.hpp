#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "survplane/domain.hpp"
#include "survplane/gradients.hpp"
#include "survplane/losses.hpp"
#include "survplane/metrics.hpp"
#include "survplane/model.hpp"
#include "survplane/rng.hpp"

namespace survplane {

enum class SelectionMetric { kConcordance, kHorizonAuroc };

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t updates_per_epoch = 300;
  std::size_t batch_pairs = 16;
  double lr_min = 1e-6;
  double lr_max = 1e-4;
  std::size_t cyclic_half_period = 1500;  // updates per ramp
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kSupervised;
  double max_gap_months = 36.0;
  double damd_fraction = 0.5;  // fraction of late visits in the converted stage
  SelectionMetric selection_metric = SelectionMetric::kConcordance;
  double selection_horizon_months = 12.0;  // used with kHorizonAuroc
  std::vector<std::size_t> hidden_sizes = {32, 16};
  TimeNormalizer normalizer;
  bool stop_consistency_target = false;
  // Fine-tuning freeze switches; a frozen group keeps its initial values.
  bool freeze_encoder = false;
  bool freeze_normal = false;       // w
  bool freeze_bias_params = false;  // beta and the time slope
  bool freeze_ranking_scale = false;
};

inline void validate_train_config(const TrainConfig& config) {
  if (!(config.lr_min <= config.lr_max))
    throw std::invalid_argument("train config: lr_min must not exceed lr_max");
  if (!(config.lr_min > 0.0)) throw std::invalid_argument("train config: lr_min must be positive");
  if (config.batch_pairs < 2)
    throw std::invalid_argument("train config: ranking needs at least 2 pairs per batch");
  if (!(config.damd_fraction >= 0.0 && config.damd_fraction <= 1.0))
    throw std::invalid_argument("train config: damd_fraction must lie in [0, 1]");
  if (!(config.max_gap_months > 0.0))
    throw std::invalid_argument("train config: max_gap_months must be positive");
  if (config.cyclic_half_period == 0)
    throw std::invalid_argument("train config: cyclic half period must be positive");
  if (config.hidden_sizes.empty())
    throw std::invalid_argument("train config: encoder needs at least one layer size");
}

// Triangular schedule: lr_min at step 0, lr_max after one half period, back
// to lr_min after the full period.
inline double lr_at(const TrainConfig& config, std::size_t step) {
  const std::size_t period = 2 * config.cyclic_half_period;
  const std::size_t pos = step % period;
  const double ramp = static_cast<double>(pos <= config.cyclic_half_period
                                              ? pos
                                              : period - pos) /
                      static_cast<double>(config.cyclic_half_period);
  return config.lr_min + (config.lr_max - config.lr_min) * ramp;
}

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step = 0;

  static OptimizerState zeros(std::size_t n) {
    return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0};
  }
};

// One AdamW update: Adam moments with bias correction plus decoupled weight
// decay applied directly to the parameters.
inline void adamw_step(std::vector<double>& params, const std::vector<double>& grads,
                       OptimizerState& state, double lr, double weight_decay,
                       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw std::invalid_argument("adamw_step: shape mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw std::runtime_error("adamw_step: non-finite gradient at parameter " +
                               std::to_string(i));
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = beta1 * m + (1.0 - beta1) * grads[i];
    v = beta2 * v + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps) + lr * weight_decay * params[i];
  }
}

// Indexed pair pools over a cohort. Supervised pools split on the late
// visit's stage so converter pairs can be oversampled; the early visit is
// always pre-conversion. Unsupervised pools take every ordered intra-subject
// pair within the gap window.
class PairSampler {
 public:
  PairSampler(const Cohort& cohort, const TrainConfig& config)
      : cohort_(&cohort), config_(&config) {
    const bool supervised = config.mode == TrainMode::kSupervised;
    int eye_ordinal = 0;
    for (const auto& [eye_id, visits] : cohort.eyes) {
      for (std::size_t j = 0; j < visits.size(); ++j) {
        for (std::size_t k = j + 1; k < visits.size(); ++k) {
          const double gap = visits[k].visit_time - visits[j].visit_time;
          if (!(gap > 0.0 && gap <= config.max_gap_months)) continue;
          if (supervised) {
            if (!visits[j].label || !visits[k].label)
              throw std::invalid_argument("sample_batch: supervised mode needs labels");
            if (derive_stage(*visits[j].label) != 0) continue;
            if (derive_stage(*visits[k].label) == 1)
              converter_pool_.push_back({eye_ordinal, j, k});
            else
              stable_pool_.push_back({eye_ordinal, j, k});
          } else {
            stable_pool_.push_back({eye_ordinal, j, k});
          }
        }
      }
      eye_ids_.push_back(eye_id);
      ++eye_ordinal;
    }
  }

  PairBatch sample(Rng& rng) const {
    const TrainConfig& config = *config_;
    const bool supervised = config.mode == TrainMode::kSupervised;
    const std::size_t b = config.batch_pairs;
    PairBatch batch;
    batch.supervised = supervised;
    batch.pairs.reserve(b);
    if (supervised) {
      const std::size_t n_converter =
          static_cast<std::size_t>(std::floor(config.damd_fraction * static_cast<double>(b)));
      if (n_converter > 0 && converter_pool_.empty())
        throw std::runtime_error(
            "sample_batch: no converter pairs available to satisfy damd_fraction");
      if (n_converter < b && stable_pool_.empty())
        throw std::runtime_error("sample_batch: no pre-conversion pairs available");
      for (std::size_t i = 0; i < n_converter; ++i)
        batch.pairs.push_back(make_pair(converter_pool_[rng.below(converter_pool_.size())]));
      for (std::size_t i = n_converter; i < b; ++i)
        batch.pairs.push_back(make_pair(stable_pool_[rng.below(stable_pool_.size())]));
    } else {
      if (stable_pool_.empty())
        throw std::runtime_error("sample_batch: no intra-subject pairs within the gap window");
      for (std::size_t i = 0; i < b; ++i)
        batch.pairs.push_back(make_pair(stable_pool_[rng.below(stable_pool_.size())]));
    }
    return batch;
  }

  std::size_t eligible_pairs() const { return converter_pool_.size() + stable_pool_.size(); }

 private:
  struct PoolEntry {
    int eye;
    std::size_t early, late;
  };

  TrainPair make_pair(const PoolEntry& entry) const {
    const auto& visits = cohort_->eyes.at(eye_ids_[entry.eye]);
    const Visit& early = visits[entry.early];
    const Visit& late = visits[entry.late];
    TrainPair pair;
    pair.gap = normalize_time(late.visit_time - early.visit_time, config_->normalizer);
    pair.early = make_sample(entry.eye, early);
    pair.late = make_sample(entry.eye, late);
    return pair;
  }

  BatchSample make_sample(int eye, const Visit& visit) const {
    BatchSample s;
    s.eye = eye;
    s.input = visit.features;
    if (config_->mode == TrainMode::kSupervised) {
      s.time_months = visit.label->time_months;
      s.event = visit.label->event;
      s.stage = derive_stage(*visit.label);
    }
    return s;
  }

  const Cohort* cohort_;
  const TrainConfig* config_;
  std::vector<std::string> eye_ids_;
  std::vector<PoolEntry> converter_pool_;
  std::vector<PoolEntry> stable_pool_;
};

inline PairBatch sample_batch(const Cohort& cohort, const TrainConfig& config, Rng& rng) {
  return PairSampler(cohort, config).sample(rng);
}

// Risk scores of every pre-conversion labeled visit, with the matching
// labels; the shared evaluation protocol for selection and test metrics.
inline void collect_risks(const Model& model, const Cohort& cohort, std::vector<double>& risks,
                          std::vector<SurvivalLabel>& labels) {
  risks.clear();
  labels.clear();
  for (const auto& [id, visits] : cohort.eyes) {
    for (const auto& v : visits) {
      if (!v.label.has_value())
        throw std::invalid_argument("collect_risks: cohort must be labeled");
      if (derive_stage(*v.label) == 1) continue;
      risks.push_back(risk_multiview(model, v));
      labels.push_back(*v.label);
    }
  }
}

inline double selection_value(const Model& model, const Cohort& validation,
                              const TrainConfig& config) {
  std::vector<double> risks;
  std::vector<SurvivalLabel> labels;
  collect_risks(model, validation, risks, labels);
  if (config.selection_metric == SelectionMetric::kConcordance) return concordance(risks, labels);
  std::vector<double> scores(risks.size());
  const double t = normalize_time(config.selection_horizon_months, config.normalizer);
  std::size_t i = 0;
  for (const auto& [id, visits] : validation.eyes)
    for (const auto& v : visits) {
      if (derive_stage(*v.label) == 1) continue;
      scores[i++] = predict_multiview(model, v, t);
    }
  return horizon_auroc(build_horizon_eval(config.selection_horizon_months, scores, labels));
}

struct EpochRecord {
  std::size_t epoch = 0;
  double classification = 0.0;
  double consistency = 0.0;
  double ranking = 0.0;
  double total = 0.0;
  double validation_metric = 0.0;
};

struct TrainResult {
  Model model;                       // best-validation checkpointed weights
  std::vector<EpochRecord> history;  // one record per epoch
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
};

inline Model init_model(std::size_t feature_dim, const TrainConfig& config) {
  std::vector<std::size_t> sizes;
  sizes.push_back(feature_dim);
  sizes.insert(sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
  Rng rng(derive_seed(config.seed, 0x1817));
  Model model;
  model.encoder = EncoderParams::glorot(sizes, rng);
  const std::size_t d_e = model.encoder.output_dim();
  const double limit = std::sqrt(6.0 / static_cast<double>(d_e + 1));
  model.head.w.resize(d_e);
  for (double& x : model.head.w) x = rng.uniform(-limit, limit);
  model.head.beta = 0.0;
  model.head.alpha_raw = inverse_softplus(1.0);
  model.head.gamma_raw = inverse_softplus(1.0);
  return model;
}

namespace detail {

inline void zero_frozen(const Model& model, const TrainConfig& config,
                        std::vector<double>& flat_grads) {
  std::size_t encoder_n = model.encoder.parameter_count();
  const std::size_t d_e = model.head.w.size();
  if (config.freeze_encoder)
    std::fill(flat_grads.begin(), flat_grads.begin() + encoder_n, 0.0);
  if (config.freeze_normal)
    std::fill(flat_grads.begin() + encoder_n, flat_grads.begin() + encoder_n + d_e, 0.0);
  if (config.freeze_bias_params) {
    flat_grads[encoder_n + d_e] = 0.0;      // beta
    flat_grads[encoder_n + d_e + 1] = 0.0;  // alpha_raw
  }
  if (config.freeze_ranking_scale) flat_grads[encoder_n + d_e + 2] = 0.0;
}

inline TrainResult run_training(Model model, const Cohort& train_cohort,
                                const Cohort& validation, const TrainConfig& config) {
  validate_train_config(config);
  const PairSampler sampler(train_cohort, config);
  Rng rng(derive_seed(config.seed, 0x5A3B));

  TrainResult result;
  result.model = model;
  if (config.epochs == 0) return result;

  std::vector<double> params = flatten_parameters(model);
  OptimizerState opt = OptimizerState::zeros(params.size());
  GradientOptions grad_options{config.stop_consistency_target};
  bool have_best = false;
  std::size_t global_step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t update = 0; update < config.updates_per_epoch; ++update) {
      const PairBatch batch = sampler.sample(rng);
      LossGradients lg = loss_gradients(batch, model, config.mode, grad_options);
      if (!std::isfinite(lg.breakdown.total))
        throw std::runtime_error("train: loss diverged at step " + std::to_string(global_step));
      std::vector<double> flat = flatten_gradients(lg.grads);
      zero_frozen(model, config, flat);
      adamw_step(params, flat, opt, lr_at(config, global_step), config.weight_decay);
      unflatten_parameters(model, params);
      record.classification += lg.breakdown.classification;
      record.consistency += lg.breakdown.consistency;
      record.ranking += lg.breakdown.ranking;
      record.total += lg.breakdown.total;
      ++global_step;
    }
    const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(1, config.updates_per_epoch));
    record.classification *= inv;
    record.consistency *= inv;
    record.ranking *= inv;
    record.total *= inv;
    record.validation_metric = selection_value(model, validation, config);
    result.history.push_back(record);
    if (!have_best || record.validation_metric > result.best_metric) {
      have_best = true;
      result.best_metric = record.validation_metric;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

}  // namespace detail

// Supervised training from a fresh initialization; returns the weights of
// the best validation epoch along with the per-epoch history.
inline TrainResult train(const Cohort& train_cohort, const Cohort& validation,
                         const TrainConfig& config) {
  if (config.mode == TrainMode::kSupervised && !train_cohort.labeled)
    throw std::invalid_argument("train: supervised mode needs a labeled training cohort");
  return detail::run_training(init_model(train_cohort.feature_dim, config), train_cohort,
                              validation, config);
}

// Label-free adaptation of an existing model on an unlabeled cohort; the
// labeled validation cohort is used only for model selection.
inline TrainResult finetune_unsupervised(const Model& initial, const Cohort& unlabeled_cohort,
                                         const Cohort& labeled_validation,
                                         const TrainConfig& config) {
  if (config.mode != TrainMode::kUnsupervised)
    throw std::invalid_argument("finetune_unsupervised: config.mode must be unsupervised");
  if (initial.encoder.input_dim() != unlabeled_cohort.feature_dim)
    throw std::invalid_argument("finetune_unsupervised: feature dimension mismatch");
  return detail::run_training(initial, unlabeled_cohort, labeled_validation, config);
}

}  // namespace survplane
