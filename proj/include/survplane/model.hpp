#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "survplane/domain.hpp"
#include "survplane/encoder.hpp"
#include "survplane/head.hpp"

namespace survplane {

struct Model {
  EncoderParams encoder;
  HyperplaneHead head;

  std::size_t parameter_count() const {
    return encoder.parameter_count() + head.w.size() + 3;
  }
};

inline double model_risk(const Model& model, const std::vector<double>& input) {
  return risk(model.head, encoder_forward(model.encoder, input));
}

inline double model_cdf(const Model& model, const std::vector<double>& input, double t) {
  return cdf_at(model.head, encoder_forward(model.encoder, input), t);
}

// The visit's views, or its primary feature vector when no extra views exist.
inline std::vector<const std::vector<double>*> visit_views(const Visit& visit) {
  std::vector<const std::vector<double>*> out;
  if (visit.views.empty()) {
    out.push_back(&visit.features);
  } else {
    for (const auto& v : visit.views) out.push_back(&v);
  }
  return out;
}

// Mean conversion probability over the visit's views.
inline double predict_multiview(const Model& model, const Visit& visit, double t) {
  const auto views = visit_views(visit);
  if (views.empty()) throw std::invalid_argument("predict_multiview: visit has no views");
  double sum = 0.0;
  for (const auto* v : views) sum += model_cdf(model, *v, t);
  return sum / static_cast<double>(views.size());
}

// Mean risk score over the visit's views.
inline double risk_multiview(const Model& model, const Visit& visit) {
  const auto views = visit_views(visit);
  if (views.empty()) throw std::invalid_argument("risk_multiview: visit has no views");
  double sum = 0.0;
  for (const auto* v : views) sum += model_risk(model, *v);
  return sum / static_cast<double>(views.size());
}

// Flat parameter order: encoder layers (weights then bias, layer by layer),
// then w, beta, alpha_raw, gamma_raw. The optimizer and the checkpoint
// payload both rely on this order.
inline std::vector<double> flatten_parameters(const Model& model) {
  std::vector<double> flat;
  flat.reserve(model.parameter_count());
  for (std::size_t l = 0; l < model.encoder.layer_count(); ++l) {
    flat.insert(flat.end(), model.encoder.weights[l].begin(), model.encoder.weights[l].end());
    flat.insert(flat.end(), model.encoder.biases[l].begin(), model.encoder.biases[l].end());
  }
  flat.insert(flat.end(), model.head.w.begin(), model.head.w.end());
  flat.push_back(model.head.beta);
  flat.push_back(model.head.alpha_raw);
  flat.push_back(model.head.gamma_raw);
  return flat;
}

inline void unflatten_parameters(Model& model, const std::vector<double>& flat) {
  if (flat.size() != model.parameter_count())
    throw std::invalid_argument("unflatten_parameters: size mismatch");
  std::size_t pos = 0;
  for (std::size_t l = 0; l < model.encoder.layer_count(); ++l) {
    for (double& x : model.encoder.weights[l]) x = flat[pos++];
    for (double& x : model.encoder.biases[l]) x = flat[pos++];
  }
  for (double& x : model.head.w) x = flat[pos++];
  model.head.beta = flat[pos++];
  model.head.alpha_raw = flat[pos++];
  model.head.gamma_raw = flat[pos++];
}

struct ModelGradients {
  EncoderGradients encoder;
  std::vector<double> w;
  double beta = 0.0;
  double alpha_raw = 0.0;
  double gamma_raw = 0.0;

  static ModelGradients zeros(const Model& model) {
    ModelGradients g;
    g.encoder = EncoderGradients::zeros(model.encoder);
    g.w.assign(model.head.w.size(), 0.0);
    return g;
  }
};

inline std::vector<double> flatten_gradients(const ModelGradients& grads) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < grads.encoder.weights.size(); ++l) {
    flat.insert(flat.end(), grads.encoder.weights[l].begin(), grads.encoder.weights[l].end());
    flat.insert(flat.end(), grads.encoder.biases[l].begin(), grads.encoder.biases[l].end());
  }
  flat.insert(flat.end(), grads.w.begin(), grads.w.end());
  flat.push_back(grads.beta);
  flat.push_back(grads.alpha_raw);
  flat.push_back(grads.gamma_raw);
  return flat;
}

}  // namespace survplane
