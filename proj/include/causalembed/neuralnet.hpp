#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "causalembed/linalg.hpp"
#include "causalembed/rng.hpp"

namespace causalembed::nn {

enum class OutputActivation { identity, ramp };

std::string activation_name(OutputActivation a);
OutputActivation activation_from_name(const std::string& name);

struct FeatureMapSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;
  std::size_t feature_dim = 1;
  OutputActivation output_activation = OutputActivation::identity;
};

// Feed-forward map from an input vector to a feature vector. Hidden layers
// use ReLU; the output layer is identity or ramp (min(1, max(0, x))), the
// latter giving features bounded in [0, 1]. Evaluation is pure; gradients
// are exact reverse-mode with subgradient 0 at the ReLU/ramp kinks.
class FeatureMap {
 public:
  FeatureMap() = default;
  // Weights uniform on +-sqrt(6 / (fan_in + fan_out)), biases zero.
  FeatureMap(const FeatureMapSpec& spec, PhiloxRng& rng);

  // Single affine layer with zero weights and constant bias: ignores its
  // input and always emits `value` in each coordinate.
  static FeatureMap constant(std::size_t input_dim, std::size_t feature_dim,
                             double value);

  std::size_t input_dim() const { return layer_dims_.front(); }
  std::size_t feature_dim() const { return layer_dims_.back(); }
  const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }
  std::size_t layer_count() const { return weights_.size(); }
  OutputActivation output_activation() const { return output_activation_; }

  linalg::Vector forward(std::span<const double> input) const;

  // Per-layer pre-activations cached for backward; reusable across calls.
  struct Workspace {
    std::vector<linalg::Vector> pre;   // z_l = W_l a_{l-1} + b_l
    std::vector<linalg::Vector> post;  // a_l = activation(z_l)
  };
  // Forward pass filling `ws`; the output is ws.post.back().
  void forward(std::span<const double> input, Workspace& ws) const;

  struct Gradients {
    std::vector<linalg::Matrix> weights;
    std::vector<linalg::Vector> biases;
    linalg::Vector input;
    void zero();
  };
  Gradients make_gradients() const;

  // Accumulates into `grads` the gradients of <cotangent, forward(input)>
  // with respect to every parameter and the input. `ws` must hold the
  // forward pass for this exact input.
  void backward(std::span<const double> input,
                std::span<const double> cotangent, const Workspace& ws,
                Gradients& grads) const;

  std::size_t parameter_count() const;
  void copy_parameters(std::span<double> out) const;
  void set_parameters(std::span<const double> in);
  static void flatten_gradients(const Gradients& grads, std::span<double> out);

  // Direct parameter access for hand-constructed maps in tests and for the
  // constant factor.
  linalg::Matrix& weight(std::size_t layer) { return weights_[layer]; }
  const linalg::Matrix& weight(std::size_t layer) const {
    return weights_[layer];
  }
  linalg::Vector& bias(std::size_t layer) { return biases_[layer]; }
  const linalg::Vector& bias(std::size_t layer) const {
    return biases_[layer];
  }

  void save(std::ostream& out) const;
  static FeatureMap load(std::istream& in, const std::string& source);
  std::string serialized() const;
  std::string fingerprint() const;

 private:
  void check_input(std::span<const double> input) const;

  std::vector<std::size_t> layer_dims_;
  std::vector<linalg::Matrix> weights_;  // weights_[l]: dims[l+1] x dims[l]
  std::vector<linalg::Vector> biases_;
  OutputActivation output_activation_ = OutputActivation::identity;
};

struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over a flat parameter array. Moment buffers
// match the parameter count; the step counter is monotone.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t parameter_count, const AdamConfig& config = {});

  void step(std::span<double> params, std::span<const double> grads);
  std::int64_t step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::vector<double> first_moment_;
  std::vector<double> second_moment_;
};

}  // namespace causalembed::nn
