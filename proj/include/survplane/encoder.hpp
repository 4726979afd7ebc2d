#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "survplane/rng.hpp"

namespace survplane {

// Fully-connected encoder: tanh on every layer except the last, which is
// linear. Weight matrices are stored row-major (out x in). This is the
// reference differentiable encoder; anything honoring forward/backward (an
// image CNN, say) can substitute behind the same contract.
struct EncoderParams {
  std::vector<std::size_t> sizes;               // [d_in, hidden..., d_out]
  std::vector<std::vector<double>> weights;     // per layer, out*in row-major
  std::vector<std::vector<double>> biases;      // per layer, out

  std::size_t layer_count() const { return weights.size(); }
  std::size_t input_dim() const { return sizes.front(); }
  std::size_t output_dim() const { return sizes.back(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < layer_count(); ++l)
      n += weights[l].size() + biases[l].size();
    return n;
  }

  // Seeded Glorot-uniform weights, zero biases.
  static EncoderParams glorot(const std::vector<std::size_t>& layer_sizes, Rng& rng) {
    if (layer_sizes.size() < 2)
      throw std::invalid_argument("EncoderParams: need at least input and output sizes");
    EncoderParams p;
    p.sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
      const std::size_t fan_in = layer_sizes[l];
      const std::size_t fan_out = layer_sizes[l + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::vector<double> w(fan_out * fan_in);
      for (double& x : w) x = rng.uniform(-limit, limit);
      p.weights.push_back(std::move(w));
      p.biases.push_back(std::vector<double>(fan_out, 0.0));
    }
    return p;
  }
};

// Cached forward-pass state consumed by exactly one backward pass.
struct GradientTape {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;         // pre-activations per layer
  std::vector<std::vector<double>> activations; // post-nonlinearity per layer
  bool consumed = false;
};

inline std::vector<double> encoder_forward(const EncoderParams& params,
                                           const std::vector<double>& input,
                                           GradientTape* tape = nullptr) {
  if (input.size() != params.input_dim())
    throw std::invalid_argument("encoder_forward: input dimension " +
                                std::to_string(input.size()) + " != " +
                                std::to_string(params.input_dim()));
  for (double v : input)
    if (!std::isfinite(v)) throw std::invalid_argument("encoder_forward: non-finite input");

  if (tape) {
    tape->input = input;
    tape->pre.clear();
    tape->activations.clear();
    tape->consumed = false;
  }

  std::vector<double> act = input;
  const std::size_t layers = params.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = params.sizes[l];
    const std::size_t out = params.sizes[l + 1];
    const auto& w = params.weights[l];
    const auto& b = params.biases[l];
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double sum = b[o];
      const double* row = &w[o * in];
      for (std::size_t i = 0; i < in; ++i) sum += row[i] * act[i];
      z[o] = sum;
    }
    const bool last = (l + 1 == layers);
    std::vector<double> a(out);
    for (std::size_t o = 0; o < out; ++o) a[o] = last ? z[o] : std::tanh(z[o]);
    if (tape) {
      tape->pre.push_back(z);
      tape->activations.push_back(a);
    }
    act = std::move(a);
  }
  return act;
}

struct EncoderGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static EncoderGradients zeros(const EncoderParams& params) {
    EncoderGradients g;
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
      g.weights.emplace_back(params.weights[l].size(), 0.0);
      g.biases.emplace_back(params.biases[l].size(), 0.0);
    }
    return g;
  }

  void accumulate(const EncoderGradients& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
      for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
    }
  }
};

// Reverse-mode gradients of embedding . grad_output with respect to all
// parameters (accumulated into `grads`) and the input (returned). Marks the
// tape consumed.
inline std::vector<double> encoder_backward(const EncoderParams& params, GradientTape& tape,
                                            const std::vector<double>& grad_output,
                                            EncoderGradients& grads) {
  if (tape.consumed) throw std::logic_error("encoder_backward: tape already consumed");
  const std::size_t layers = params.layer_count();
  if (tape.pre.size() != layers || tape.input.size() != params.input_dim())
    throw std::invalid_argument("encoder_backward: tape does not match parameters");
  if (grad_output.size() != params.output_dim())
    throw std::invalid_argument("encoder_backward: cotangent dimension mismatch");
  tape.consumed = true;

  std::vector<double> delta = grad_output;  // d(objective)/d(activation of layer l)
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = params.sizes[l];
    const std::size_t out = params.sizes[l + 1];
    const bool last = (l + 1 == layers);
    if (!last) {
      // tanh'(z) = 1 - tanh(z)^2; activations hold tanh(z)
      for (std::size_t o = 0; o < out; ++o) {
        const double a = tape.activations[l][o];
        delta[o] *= 1.0 - a * a;
      }
    }
    const std::vector<double>& below =
        (l == 0) ? tape.input : tape.activations[l - 1];
    auto& gw = grads.weights[l];
    auto& gb = grads.biases[l];
    for (std::size_t o = 0; o < out; ++o) {
      gb[o] += delta[o];
      double* grow = &gw[o * in];
      for (std::size_t i = 0; i < in; ++i) grow[i] += delta[o] * below[i];
    }
    std::vector<double> next(in, 0.0);
    const auto& w = params.weights[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = &w[o * in];
      for (std::size_t i = 0; i < in; ++i) next[i] += row[i] * delta[o];
    }
    delta = std::move(next);
  }
  return delta;
}

}  // namespace survplane
