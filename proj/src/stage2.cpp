#include "causalembed/stage2.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "causalembed/serialize.hpp"

namespace causalembed::stage2 {

void EmbeddingTrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("stage2: epochs must be >= 1");
  if (minibatch < 1) throw InvalidArgument("stage2: minibatch must be >= 1");
  if (weight_decay < 0.0) {
    throw InvalidArgument("stage2: weight_decay must be >= 0");
  }
}

linalg::Vector EmbeddingRegressor::embed(std::span<const double> input) const {
  linalg::Vector out = network_.forward(input);
  if (clamp_unit_interval_) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::min(1.0, std::max(0.0, out[i]));
    }
  }
  return out;
}

void EmbeddingRegressor::save(std::ostream& out) const {
  out << "causalembed-embedding-regressor v1\n";
  out << "conditioning";
  for (Role r : conditioning_roles_) out << ' ' << role_name(r);
  out << '\n';
  out << "clamp " << (clamp_unit_interval_ ? 1 : 0) << '\n';
  network_.save(out);
  out << "end embedding-regressor\n";
}

EmbeddingRegressor EmbeddingRegressor::load(std::istream& in,
                                            const std::string& source) {
  LineReader reader(in, source);
  if (reader.expect_line("header") != "causalembed-embedding-regressor v1") {
    throw DataFormatError(source + ": not an embedding-regressor file");
  }
  EmbeddingRegressor reg;
  std::istringstream cond(reader.expect_line("conditioning"));
  std::string tok;
  cond >> tok;
  if (tok != "conditioning") {
    throw DataFormatError(source + ": expected conditioning line");
  }
  while (cond >> tok) reg.conditioning_roles_.push_back(role_from_name(tok));
  std::istringstream clamp(reader.expect_line("clamp"));
  int clamp_flag = 0;
  clamp >> tok >> clamp_flag;
  if (tok != "clamp") {
    throw DataFormatError(source + ": expected clamp line");
  }
  reg.clamp_unit_interval_ = clamp_flag != 0;
  reg.network_ = nn::FeatureMap::load(in, source);
  reg.trained_ = true;
  LineReader tail(in, source);
  if (tail.expect_line("trailer") != "end embedding-regressor") {
    throw DataFormatError(source + ": missing embedding-regressor trailer");
  }
  return reg;
}

std::string EmbeddingRegressor::serialized() const {
  std::ostringstream out;
  save(out);
  return out.str();
}

std::string EmbeddingRegressor::fingerprint() const {
  return fnv1a_hex(serialized());
}

linalg::Vector marginal_embedding(const nn::FeatureMap& map,
                                  const linalg::Matrix& samples) {
  if (samples.rows() == 0) {
    throw EmptyInput("marginal_embedding: no samples");
  }
  linalg::Matrix features(samples.rows(), map.feature_dim());
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const linalg::Vector f = map.forward(samples.row_view(i));
    for (std::size_t j = 0; j < f.size(); ++j) features(i, j) = f[j];
  }
  return linalg::sorted_column_mean(features);
}

namespace {

double full_objective(const nn::FeatureMap& net,
                      const linalg::Matrix& conditioning,
                      const linalg::Matrix& targets, double weight_decay,
                      std::vector<double>& param_buffer) {
  double loss = 0.0;
  nn::FeatureMap::Workspace ws;
  for (std::size_t i = 0; i < conditioning.rows(); ++i) {
    net.forward(conditioning.row_view(i), ws);
    const linalg::Vector& out = ws.post.back();
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double r = out[j] - targets(i, j);
      loss += r * r;
    }
  }
  loss /= static_cast<double>(conditioning.rows());
  if (weight_decay > 0.0) {
    net.copy_parameters(param_buffer);
    double penalty = 0.0;
    for (double p : param_buffer) penalty += p * p;
    loss += weight_decay * penalty;
  }
  return loss;
}

}  // namespace

EmbeddingTrainResult train_embedding_to_targets(
    const linalg::Matrix& conditioning, const linalg::Matrix& targets,
    const EmbeddingTrainConfig& config, std::vector<Role> roles,
    bool clamp_unit_interval) {
  config.validate();
  const std::size_t n = conditioning.rows();
  if (n == 0) {
    throw EmptyInput("stage2: no training samples");
  }
  if (targets.rows() != n) {
    throw DimensionMismatch("stage2: " + std::to_string(n) +
                            " conditioning rows vs " +
                            std::to_string(targets.rows()) + " target rows");
  }

  nn::FeatureMapSpec spec;
  spec.input_dim = conditioning.cols();
  spec.hidden_dims = config.hidden_dims;
  spec.feature_dim = targets.cols();
  spec.output_activation = nn::OutputActivation::identity;
  PhiloxRng init_rng(config.seed, streams::kStage2InitBase);
  nn::FeatureMap net(spec, init_rng);

  const std::size_t param_count = net.parameter_count();
  std::vector<double> params(param_count);
  std::vector<double> flat_grads(param_count);
  nn::AdamOptimizer optimizer(param_count, config.adam);
  nn::FeatureMap::Gradients grads = net.make_gradients();

  EmbeddingTrainResult result;
  std::vector<double> best_params(param_count);
  net.copy_parameters(best_params);
  double best_loss =
      full_objective(net, conditioning, targets, config.weight_decay, params);
  result.loss_history.push_back(best_loss);

  PhiloxRng shuffle_rng(config.seed, streams::kStage2Shuffle);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t minibatch = std::min(config.minibatch, n);

  nn::FeatureMap::Workspace ws;
  linalg::Vector cot(targets.cols());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += minibatch) {
      const std::size_t count = std::min(minibatch, n - start);
      grads.zero();
      double batch_loss = 0.0;
      for (std::size_t s = 0; s < count; ++s) {
        const std::size_t i = order[start + s];
        net.forward(conditioning.row_view(i), ws);
        const linalg::Vector& out = ws.post.back();
        const double scale = 2.0 / static_cast<double>(count);
        for (std::size_t j = 0; j < out.size(); ++j) {
          const double r = out[j] - targets(i, j);
          batch_loss += r * r;
          cot[j] = scale * r;
        }
        net.backward(conditioning.row_view(i), cot.view(), ws, grads);
      }
      if (!std::isfinite(batch_loss)) {
        throw NonFiniteLoss("stage2: loss diverged at epoch " +
                            std::to_string(epoch));
      }
      net.copy_parameters(params);
      nn::FeatureMap::flatten_gradients(grads, flat_grads);
      if (config.weight_decay > 0.0) {
        for (std::size_t k = 0; k < param_count; ++k) {
          flat_grads[k] += 2.0 * config.weight_decay * params[k];
        }
      }
      optimizer.step(params, flat_grads);
      net.set_parameters(params);
    }
    const double epoch_loss =
        full_objective(net, conditioning, targets, config.weight_decay,
                       params);
    if (!std::isfinite(epoch_loss)) {
      throw NonFiniteLoss("stage2: loss diverged at epoch " +
                          std::to_string(epoch));
    }
    result.loss_history.push_back(epoch_loss);
    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      net.copy_parameters(best_params);
    }
  }

  net.set_parameters(best_params);
  result.regressor =
      EmbeddingRegressor(std::move(net), std::move(roles), clamp_unit_interval);
  return result;
}

EmbeddingTrainResult train_embedding(const nn::FeatureMap& target_map,
                                     const linalg::Matrix& conditioning,
                                     const linalg::Matrix& target_inputs,
                                     const EmbeddingTrainConfig& config,
                                     std::vector<Role> roles) {
  if (target_inputs.rows() != conditioning.rows()) {
    throw DimensionMismatch("stage2: conditioning/target sample counts differ");
  }
  linalg::Matrix targets(target_inputs.rows(), target_map.feature_dim());
  for (std::size_t i = 0; i < target_inputs.rows(); ++i) {
    const linalg::Vector f = target_map.forward(target_inputs.row_view(i));
    for (std::size_t j = 0; j < f.size(); ++j) targets(i, j) = f[j];
  }
  const bool clamp =
      target_map.output_activation() == nn::OutputActivation::ramp;
  return train_embedding_to_targets(conditioning, targets, config,
                                    std::move(roles), clamp);
}

EmbeddingTrainResult train_embedding_tensor(
    const nn::FeatureMap& map1, const nn::FeatureMap& map2,
    const linalg::Matrix& conditioning, const linalg::Matrix& inputs1,
    const linalg::Matrix& inputs2, const EmbeddingTrainConfig& config,
    std::vector<Role> roles) {
  if (inputs1.rows() != conditioning.rows() ||
      inputs2.rows() != conditioning.rows()) {
    throw DimensionMismatch("stage2: conditioning/target sample counts differ");
  }
  const std::size_t d = map1.feature_dim() * map2.feature_dim();
  linalg::Matrix targets(conditioning.rows(), d);
  for (std::size_t i = 0; i < conditioning.rows(); ++i) {
    const linalg::Vector f1 = map1.forward(inputs1.row_view(i));
    const linalg::Vector f2 = map2.forward(inputs2.row_view(i));
    linalg::tensor_product_into(f1.view(), f2.view(), targets.row_view(i));
  }
  const bool clamp =
      map1.output_activation() == nn::OutputActivation::ramp &&
      map2.output_activation() == nn::OutputActivation::ramp;
  return train_embedding_to_targets(conditioning, targets, config,
                                    std::move(roles), clamp);
}

linalg::Matrix role_matrix(const ColumnarDataset& data, Role role) {
  const LogicalColumn& col = data.column(role);
  linalg::Matrix m(data.n(), col.dim());
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < col.dim(); ++j) {
      m(i, j) = col.values[i * col.dim() + j];
    }
  }
  return m;
}

linalg::Matrix role_matrix(const ColumnarDataset& data,
                           const std::vector<Role>& roles) {
  std::size_t width = 0;
  for (Role r : roles) width += data.column(r).dim();
  linalg::Matrix m(data.n(), width);
  for (std::size_t i = 0; i < data.n(); ++i) {
    std::size_t offset = 0;
    for (Role r : roles) {
      const std::span<const double> row = data.row(r, i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        m(i, offset + j) = row[j];
      }
      offset += row.size();
    }
  }
  return m;
}

}  // namespace causalembed::stage2
