#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "causalembed/dgp/discrete.hpp"
#include "causalembed/neuralnet.hpp"

namespace causalembed::harness {

enum class ExperimentKind {
  backdoor_dsprite,
  frontdoor_dsprite,
  discrete_toy,
  csv_backdoor,
};

std::string experiment_kind_name(ExperimentKind kind);
ExperimentKind experiment_kind_from_name(const std::string& name);

struct DgpSettings {
  std::size_t n = 5000;
  std::size_t resolution = 16;
  std::string sprite = "square";  // square | gaussian-blob
  double sprite_half_width = 3.0;
  double pixel_noise_std = 0.1;
  double backdoor_noise_std = 0.3;
  double mediator_noise_std = 0.2;
  double outcome_noise_std = 0.5;
  // Unset values resolve per experiment kind: confounder weight 1 for the
  // back-door design and 5 for the front-door design; hidden-confounder
  // half range 1.0 and 1.5 respectively.
  std::optional<double> confounder_weight;
  std::optional<double> u_half_range;
  dgp::ToyGraph toy_graph = dgp::ToyGraph::backdoor;
  std::uint64_t toy_seed = 7;
  std::string csv_path;
};

struct Stage1Settings {
  std::size_t treatment_dim = 16;
  std::size_t covariate_dim = 16;
  std::size_t confounder_dim = 8;
  std::vector<std::size_t> hidden = {32, 32};
  std::vector<std::size_t> image_hidden = {512, 128};
  std::string output_activation = "identity";  // identity | ramp
  std::optional<double> ridge_lambda;          // unset: 1e-3 * mean(y^2)
  std::size_t epochs = 100;
  std::size_t minibatch = 256;
  double learning_rate = 1e-3;
  bool train_features = true;  // false: untrained-random-feature baseline
};

struct Stage2Settings {
  std::vector<std::size_t> hidden = {64, 64};
  std::vector<std::size_t> image_hidden = {512, 128};
  std::size_t epochs = 100;
  std::size_t minibatch = 256;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  std::string sample_split = "none";  // none | half
};

struct QuerySettings {
  // Query grid over sprite latents; side defaults to 3 for the back-door
  // design and 11 for the front-door design.
  std::optional<std::size_t> grid_side;
  double grid_min = 0.1;
  double grid_max = 0.9;
  double aprime_pos_x = 0.6;
  double aprime_pos_y = 0.6;
  std::size_t mc_samples = 100000;
  // csv-backdoor: treatment points for ATE ("0.5 1.0"; components
  // comma-separated) and a:a' pairs for ATT ("1:0 0:1").
  std::vector<std::vector<double>> ate_points;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> att_pairs;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::backdoor_dsprite;
  std::size_t replications = 10;
  std::uint64_t base_seed = 1;
  std::size_t workers = 1;
  DgpSettings dgp;
  Stage1Settings stage1;
  Stage2Settings stage2;
  QuerySettings queries;
  std::string output_dir = "out";

  double resolved_confounder_weight() const;
  double resolved_u_half_range() const;
  std::size_t resolved_grid_side() const;

  void validate() const;
  // Canonical text form with every resolved value; embedded in the run
  // manifest and reparsable as a config file.
  std::string canonical() const;
};

// Parses the key-value section format; unknown sections or keys are errors
// naming the offending line.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source = "<config>");
ExperimentConfig load_config_file(const std::string& path);

}  // namespace causalembed::harness
