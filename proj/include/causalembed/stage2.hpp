#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "causalembed/dataset.hpp"
#include "causalembed/linalg.hpp"
#include "causalembed/neuralnet.hpp"

namespace causalembed::stage2 {

// Vector-valued regressor approximating a conditional feature mean, e.g.
// E[phi_X(X) | A = a]. Outputs are clamped to [0, 1] when the target map
// was ramp-bounded, keeping the regressor inside the same feature class.
class EmbeddingRegressor {
 public:
  EmbeddingRegressor() = default;
  EmbeddingRegressor(nn::FeatureMap network, std::vector<Role> roles,
                     bool clamp_unit_interval)
      : network_(std::move(network)),
        conditioning_roles_(std::move(roles)),
        clamp_unit_interval_(clamp_unit_interval),
        trained_(true) {}

  bool trained() const { return trained_; }
  std::size_t input_dim() const { return network_.input_dim(); }
  std::size_t output_dim() const { return network_.feature_dim(); }
  const std::vector<Role>& conditioning_roles() const {
    return conditioning_roles_;
  }
  const nn::FeatureMap& network() const { return network_; }
  bool clamps() const { return clamp_unit_interval_; }

  linalg::Vector embed(std::span<const double> input) const;

  void save(std::ostream& out) const;
  static EmbeddingRegressor load(std::istream& in, const std::string& source);
  std::string serialized() const;
  std::string fingerprint() const;

 private:
  nn::FeatureMap network_;
  std::vector<Role> conditioning_roles_;
  bool clamp_unit_interval_ = false;
  bool trained_ = false;
};

// (1/n) sum_i phi(x_i), averaged per coordinate over sorted values so the
// result is independent of sample order.
linalg::Vector marginal_embedding(const nn::FeatureMap& map,
                                  const linalg::Matrix& samples);

struct EmbeddingTrainConfig {
  std::vector<std::size_t> hidden_dims = {64, 64};
  nn::AdamConfig adam;
  std::size_t epochs = 100;
  std::size_t minibatch = 256;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EmbeddingTrainResult {
  EmbeddingRegressor regressor;
  // Full-data objective at each epoch boundary; entry 0 is pre-training.
  std::vector<double> loss_history;
};

// Minimizes (1/n) sum ||t_i - f(c_i)||^2 + weight_decay ||theta||^2 over a
// ReLU network f. Targets are precomputed rows (frozen; training never
// touches the map that produced them). The parameters kept are those of the
// best epoch, so the final recorded loss never exceeds the initial one.
EmbeddingTrainResult train_embedding_to_targets(
    const linalg::Matrix& conditioning, const linalg::Matrix& targets,
    const EmbeddingTrainConfig& config, std::vector<Role> roles,
    bool clamp_unit_interval);

// Convenience wrapper: targets computed once from `target_map` applied to
// `target_inputs` rows.
EmbeddingTrainResult train_embedding(const nn::FeatureMap& target_map,
                                     const linalg::Matrix& conditioning,
                                     const linalg::Matrix& target_inputs,
                                     const EmbeddingTrainConfig& config,
                                     std::vector<Role> roles);

// Tensor-product targets phi_1(u_i) (x) phi_2(v_i), for the joint
// confounder-covariate embedding.
EmbeddingTrainResult train_embedding_tensor(
    const nn::FeatureMap& map1, const nn::FeatureMap& map2,
    const linalg::Matrix& conditioning, const linalg::Matrix& inputs1,
    const linalg::Matrix& inputs2, const EmbeddingTrainConfig& config,
    std::vector<Role> roles);

// Rows of a role column gathered into a matrix (helper for callers that
// feed datasets into the functions above).
linalg::Matrix role_matrix(const ColumnarDataset& data, Role role);
// Conditioning matrix concatenating several roles per row, e.g. (O, A).
linalg::Matrix role_matrix(const ColumnarDataset& data,
                           const std::vector<Role>& roles);

}  // namespace causalembed::stage2
