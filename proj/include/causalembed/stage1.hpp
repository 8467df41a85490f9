#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalembed/dataset.hpp"
#include "causalembed/linalg.hpp"
#include "causalembed/neuralnet.hpp"

namespace causalembed::stage1 {

// Outcome regression g(a, x) = w^T (phi_A(a) (x) phi_X(x)), or the
// three-factor variant g(a, o, x) = w^T (phi_A(a) (x) phi_O(o) (x) phi_X(x)).
// The treatment map is always factor 0.
struct StageOneModel {
  std::vector<nn::FeatureMap> factor_maps;
  std::vector<Role> factor_roles;
  linalg::Vector weight;
  double ridge_lambda = 0.0;

  std::size_t factor_count() const { return factor_maps.size(); }
  std::size_t weight_dim() const;

  double predict(std::span<const double> a, std::span<const double> b) const;
  double predict(std::span<const double> a, std::span<const double> b,
                 std::span<const double> c) const;
  // Row-wise prediction pulling factor inputs from the dataset by role.
  double predict_row(const ColumnarDataset& data, std::size_t i) const;
  // Prediction with the treatment input replaced by `a`.
  double predict_row_with_treatment(const ColumnarDataset& data,
                                    std::size_t i,
                                    std::span<const double> a) const;

  void save(std::ostream& out) const;
  static StageOneModel load(std::istream& in, const std::string& source);
  std::string serialized() const;
  std::string fingerprint() const;
};

struct TrainConfig {
  // Profiled objective (1/n) sum (y_i - w^T v_i)^2 + lambda ||w||^2.
  // Unset lambda resolves to 1e-3 * mean(y^2), floored at 1e-10.
  std::optional<double> ridge_lambda;
  nn::AdamConfig adam;
  std::size_t epochs = 100;
  std::size_t minibatch = 256;
  std::uint64_t seed = 0;
  // Factors whose parameters stay fixed during training (e.g. a constant
  // confounder map); indices into the factor list.
  std::vector<std::size_t> frozen_factors;

  void validate() const;
};

// Architecture requested for one factor map.
struct FactorSpec {
  Role role;
  std::vector<std::size_t> hidden_dims;
  std::size_t feature_dim = 16;
  nn::OutputActivation output_activation = nn::OutputActivation::identity;
  // Degenerate factor: a frozen 1-dimensional map that always emits 1, so
  // a three-factor model collapses onto its two-factor counterpart.
  bool constant_one = false;
};

struct ProfiledLoss {
  double loss = 0.0;
  linalg::Vector weight;
};

// Closed-form ridge weight for the batch plus the profiled objective value
// at that weight. Factor inputs are row matrices aligned with `outcome`.
ProfiledLoss profiled_loss(const std::vector<nn::FeatureMap>& maps,
                           const std::vector<const linalg::Matrix*>& factors,
                           std::span<const double> outcome, double lambda);

struct TrainResult {
  StageOneModel model;
  std::vector<double> epoch_loss;  // mean minibatch profiled loss per epoch
  double final_full_loss = 0.0;    // profiled objective on the full dataset
  double resolved_lambda = 0.0;
};

// Minibatch Adam on the feature parameters with the ridge weight profiled
// out in closed form each step; the returned weight is recomputed on the
// full dataset with the final features.
TrainResult train_stage1(const ColumnarDataset& data,
                         const std::vector<FactorSpec>& factors,
                         const TrainConfig& config);

// Same factor maps and closed-form weight fit, but no feature training;
// the untrained-feature baseline.
TrainResult fit_stage1_random_features(const ColumnarDataset& data,
                                       const std::vector<FactorSpec>& factors,
                                       const TrainConfig& config);

}  // namespace causalembed::stage1
