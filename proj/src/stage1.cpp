#include "causalembed/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "causalembed/serialize.hpp"

namespace causalembed::stage1 {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

// Shared state for one profiled evaluation over a set of sample indices.
struct ProfiledPass {
  const std::vector<const linalg::Matrix*>* factor_inputs = nullptr;
  const ColumnarDataset* data = nullptr;
  const std::vector<Role>* roles = nullptr;

  std::span<const double> input_row(std::size_t factor, std::size_t i) const {
    if (factor_inputs) return (*factor_inputs)[factor]->row_view(i);
    return data->row((*roles)[factor], i);
  }
};

double outcome_mean_square(std::span<const double> y) {
  double acc = 0.0;
  for (double v : y) acc += v * v;
  return y.empty() ? 0.0 : acc / static_cast<double>(y.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) {
    throw InvalidArgument("stage1: epochs must be >= 1");
  }
  if (minibatch < 1) {
    throw InvalidArgument("stage1: minibatch must be >= 1");
  }
  if (ridge_lambda && !(*ridge_lambda > 0.0)) {
    throw InvalidArgument("stage1: ridge_lambda must be > 0");
  }
}

std::size_t StageOneModel::weight_dim() const {
  std::size_t d = 1;
  for (const auto& m : factor_maps) d *= m.feature_dim();
  return d;
}

double StageOneModel::predict(std::span<const double> a,
                              std::span<const double> b) const {
  if (factor_maps.size() != 2) {
    throw DimensionMismatch("predict: model has " +
                            std::to_string(factor_maps.size()) + " factors");
  }
  const linalg::Vector fa = factor_maps[0].forward(a);
  const linalg::Vector fb = factor_maps[1].forward(b);
  return linalg::contract2(weight.view(), fa.view(), fb.view());
}

double StageOneModel::predict(std::span<const double> a,
                              std::span<const double> b,
                              std::span<const double> c) const {
  if (factor_maps.size() != 3) {
    throw DimensionMismatch("predict: model has " +
                            std::to_string(factor_maps.size()) + " factors");
  }
  const linalg::Vector fa = factor_maps[0].forward(a);
  const linalg::Vector fb = factor_maps[1].forward(b);
  const linalg::Vector fc = factor_maps[2].forward(c);
  return linalg::contract3(weight.view(), fa.view(), fb.view(), fc.view());
}

double StageOneModel::predict_row(const ColumnarDataset& data,
                                  std::size_t i) const {
  if (factor_maps.size() == 2) {
    return predict(data.row(factor_roles[0], i), data.row(factor_roles[1], i));
  }
  return predict(data.row(factor_roles[0], i), data.row(factor_roles[1], i),
                 data.row(factor_roles[2], i));
}

double StageOneModel::predict_row_with_treatment(
    const ColumnarDataset& data, std::size_t i,
    std::span<const double> a) const {
  if (factor_maps.size() == 2) {
    return predict(a, data.row(factor_roles[1], i));
  }
  return predict(a, data.row(factor_roles[1], i),
                 data.row(factor_roles[2], i));
}

void StageOneModel::save(std::ostream& out) const {
  out << "causalembed-stage1-model v1\n";
  out << "factors " << factor_maps.size() << '\n';
  out << "roles";
  for (Role r : factor_roles) out << ' ' << role_name(r);
  out << '\n';
  out << "ridge_lambda " << format_double(ridge_lambda) << '\n';
  for (const auto& map : factor_maps) map.save(out);
  out << "weight " << weight.size() << '\n';
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (i) out << ' ';
    out << format_double(weight[i]);
  }
  out << '\n';
  out << "end stage1-model\n";
}

StageOneModel StageOneModel::load(std::istream& in,
                                  const std::string& source) {
  LineReader reader(in, source);
  if (reader.expect_line("header") != "causalembed-stage1-model v1") {
    throw DataFormatError(source + ": not a stage1 model file");
  }
  StageOneModel model;
  auto factors = split_ws(reader.expect_line("factors"));
  if (factors.size() != 2 || factors[0] != "factors") {
    throw DataFormatError(source + ": expected factors line");
  }
  const std::size_t count = std::stoul(factors[1]);
  auto roles = split_ws(reader.expect_line("roles"));
  if (roles.size() != count + 1 || roles[0] != "roles") {
    throw DataFormatError(source + ": expected roles line");
  }
  for (std::size_t i = 1; i < roles.size(); ++i) {
    model.factor_roles.push_back(role_from_name(roles[i]));
  }
  auto lambda = split_ws(reader.expect_line("ridge_lambda"));
  if (lambda.size() != 2 || lambda[0] != "ridge_lambda") {
    throw DataFormatError(source + ": expected ridge_lambda line");
  }
  model.ridge_lambda = parse_double(lambda[1], source);
  for (std::size_t i = 0; i < count; ++i) {
    model.factor_maps.push_back(nn::FeatureMap::load(in, source));
  }
  LineReader tail(in, source);
  auto weight_header = split_ws(tail.expect_line("weight header"));
  if (weight_header.size() != 2 || weight_header[0] != "weight") {
    throw DataFormatError(source + ": expected weight header");
  }
  const std::size_t dim = std::stoul(weight_header[1]);
  auto values = split_ws(tail.expect_line("weight values"));
  if (values.size() != dim) {
    throw DataFormatError(source + ": weight has " +
                          std::to_string(values.size()) + " values, want " +
                          std::to_string(dim));
  }
  model.weight = linalg::Vector(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    model.weight[i] = parse_double(values[i], source);
  }
  if (tail.expect_line("trailer") != "end stage1-model") {
    throw DataFormatError(source + ": missing stage1 trailer");
  }
  return model;
}

std::string StageOneModel::serialized() const {
  std::ostringstream out;
  save(out);
  return out.str();
}

std::string StageOneModel::fingerprint() const {
  return fnv1a_hex(serialized());
}

namespace {

// Profiled ridge evaluation over the given sample indices. When `grads` is
// non-null it accumulates the feature-parameter gradients of the profiled
// objective. The weight is held fixed at the ridge optimum, where the
// objective is stationary in w, so no derivative of the solve is needed.
ProfiledLoss profiled_eval(
    const std::vector<nn::FeatureMap>& maps, const ProfiledPass& pass,
    std::span<const double> outcome, std::span<const std::size_t> indices,
    double lambda, std::vector<nn::FeatureMap::Gradients>* grads,
    std::vector<std::size_t>* skip_grad_factors = nullptr) {
  const std::size_t nb = indices.size();
  if (nb == 0) {
    throw EmptyInput("profiled loss: empty batch");
  }
  const std::size_t factor_count = maps.size();
  std::vector<std::size_t> dims(factor_count);
  std::size_t weight_dim = 1;
  for (std::size_t f = 0; f < factor_count; ++f) {
    dims[f] = maps[f].feature_dim();
    weight_dim *= dims[f];
  }

  // Per-factor feature rows; workspaces kept only when gradients are needed.
  std::vector<linalg::Matrix> features;
  std::vector<std::vector<nn::FeatureMap::Workspace>> workspaces(factor_count);
  for (std::size_t f = 0; f < factor_count; ++f) {
    features.emplace_back(nb, dims[f]);
    if (grads) workspaces[f].resize(nb);
  }
  nn::FeatureMap::Workspace scratch;
  for (std::size_t s = 0; s < nb; ++s) {
    const std::size_t i = indices[s];
    for (std::size_t f = 0; f < factor_count; ++f) {
      nn::FeatureMap::Workspace& ws = grads ? workspaces[f][s] : scratch;
      maps[f].forward(pass.input_row(f, i), ws);
      const linalg::Vector& out = ws.post.back();
      for (std::size_t j = 0; j < dims[f]; ++j) features[f](s, j) = out[j];
    }
  }

  // Stacked tensor-product feature matrix and its ridge weight.
  linalg::Matrix phi(nb, weight_dim);
  linalg::Vector y(nb);
  for (std::size_t s = 0; s < nb; ++s) {
    y[s] = outcome[indices[s]];
    if (factor_count == 2) {
      linalg::tensor_product_into(features[0].row_view(s),
                                  features[1].row_view(s), phi.row_view(s));
    } else {
      linalg::Vector inner(dims[1] * dims[2]);
      linalg::tensor_product_into(features[1].row_view(s),
                                  features[2].row_view(s), inner.view());
      linalg::tensor_product_into(features[0].row_view(s), inner.view(),
                                  phi.row_view(s));
    }
  }
  linalg::Vector w = linalg::ridge_weight(phi, y, lambda);

  double loss = 0.0;
  std::vector<double> residuals(nb);
  for (std::size_t s = 0; s < nb; ++s) {
    const double r = y[s] - linalg::dot(phi.row_view(s), w.view());
    residuals[s] = r;
    loss += r * r;
  }
  loss = loss / static_cast<double>(nb) + lambda * linalg::dot(w.view(), w.view());

  if (grads) {
    auto frozen = [&](std::size_t f) {
      return skip_grad_factors &&
             std::find(skip_grad_factors->begin(), skip_grad_factors->end(),
                       f) != skip_grad_factors->end();
    };
    // d loss / d v_s = -(2/nb) r_s w; unpacked into factor cotangents.
    const double scale = -2.0 / static_cast<double>(nb);
    const std::size_t d0 = dims[0];
    const std::size_t d1 = dims[1];
    const std::size_t d2 = factor_count == 3 ? dims[2] : 1;
    linalg::Vector cot0(d0), cot1(d1), cot2(d2);
    for (std::size_t s = 0; s < nb; ++s) {
      const double c = scale * residuals[s];
      if (c == 0.0) continue;
      const double* f0 = features[0].row(s);
      const double* f1 = features[1].row(s);
      const double* f2 = factor_count == 3 ? features[2].row(s) : nullptr;
      cot0.fill(0.0);
      cot1.fill(0.0);
      cot2.fill(0.0);
      std::size_t k = 0;
      for (std::size_t p = 0; p < d0; ++p) {
        for (std::size_t q = 0; q < d1; ++q) {
          if (factor_count == 2) {
            const double wk = w[k++];
            cot0[p] += wk * f1[q];
            cot1[q] += wk * f0[p];
          } else {
            for (std::size_t r = 0; r < d2; ++r) {
              const double wk = w[k++];
              cot0[p] += wk * f1[q] * f2[r];
              cot1[q] += wk * f0[p] * f2[r];
              cot2[r] += wk * f0[p] * f1[q];
            }
          }
        }
      }
      for (std::size_t j = 0; j < d0; ++j) cot0[j] *= c;
      for (std::size_t j = 0; j < d1; ++j) cot1[j] *= c;
      for (std::size_t j = 0; j < d2; ++j) cot2[j] *= c;

      const std::size_t i = indices[s];
      if (!frozen(0)) {
        maps[0].backward(pass.input_row(0, i), cot0.view(), workspaces[0][s],
                         (*grads)[0]);
      }
      if (!frozen(1)) {
        maps[1].backward(pass.input_row(1, i), cot1.view(), workspaces[1][s],
                         (*grads)[1]);
      }
      if (factor_count == 3 && !frozen(2)) {
        maps[2].backward(pass.input_row(2, i), cot2.view(), workspaces[2][s],
                         (*grads)[2]);
      }
    }
  }

  return {loss, std::move(w)};
}

}  // namespace

ProfiledLoss profiled_loss(const std::vector<nn::FeatureMap>& maps,
                           const std::vector<const linalg::Matrix*>& factors,
                           std::span<const double> outcome, double lambda) {
  if (maps.size() != 2 && maps.size() != 3) {
    throw DimensionMismatch("profiled_loss: need 2 or 3 factor maps, got " +
                            std::to_string(maps.size()));
  }
  if (factors.size() != maps.size()) {
    throw DimensionMismatch("profiled_loss: factor count mismatch");
  }
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (factors[f]->rows() != outcome.size()) {
      throw DimensionMismatch("profiled_loss: factor " + std::to_string(f) +
                              " has " + std::to_string(factors[f]->rows()) +
                              " rows vs " + std::to_string(outcome.size()) +
                              " outcomes");
    }
    if (factors[f]->cols() != maps[f].input_dim()) {
      throw DimensionMismatch("profiled_loss: factor " + std::to_string(f) +
                              " input dim mismatch");
    }
  }
  if (outcome.empty()) {
    throw EmptyInput("profiled_loss: empty batch");
  }
  ProfiledPass pass;
  pass.factor_inputs = &factors;
  std::vector<std::size_t> indices(outcome.size());
  std::iota(indices.begin(), indices.end(), 0);
  return profiled_eval(maps, pass, outcome, indices, lambda, nullptr);
}

namespace {

TrainResult run_stage1(const ColumnarDataset& data,
                       const std::vector<FactorSpec>& factors,
                       const TrainConfig& config, bool train_features) {
  config.validate();
  if (factors.size() != 2 && factors.size() != 3) {
    throw InvalidArgument("stage1: need 2 or 3 factors, got " +
                          std::to_string(factors.size()));
  }
  if (factors[0].role != Role::treatment) {
    throw RoleMismatch("stage1: factor 0 must be the treatment");
  }
  if (!data.has(Role::outcome)) {
    throw MissingColumn("stage1: dataset has no outcome column");
  }
  std::span<const double> y = data.outcome();
  const std::size_t n = data.n();
  if (n == 0) {
    throw EmptyInput("stage1: empty dataset");
  }

  StageOneModel model;
  model.factor_roles.reserve(factors.size());
  std::vector<std::size_t> frozen = config.frozen_factors;
  for (std::size_t f : frozen) {
    if (f >= factors.size()) {
      throw InvalidArgument("stage1: frozen factor index out of range");
    }
  }
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const FactorSpec& spec = factors[f];
    if (!data.has(spec.role)) {
      throw MissingColumn("stage1: dataset has no column with role " +
                          role_name(spec.role));
    }
    model.factor_roles.push_back(spec.role);
    if (spec.constant_one) {
      model.factor_maps.push_back(
          nn::FeatureMap::constant(data.column(spec.role).dim(), 1, 1.0));
      frozen.push_back(f);
      continue;
    }
    // Init stream keyed by role so the same role draws the same weights
    // regardless of the model's factor count.
    PhiloxRng rng(config.seed,
                  streams::kStage1InitBase + static_cast<std::uint64_t>(
                                                 spec.role));
    nn::FeatureMapSpec map_spec;
    map_spec.input_dim = data.column(spec.role).dim();
    map_spec.hidden_dims = spec.hidden_dims;
    map_spec.feature_dim = spec.feature_dim;
    map_spec.output_activation = spec.output_activation;
    model.factor_maps.emplace_back(map_spec, rng);
  }

  const double lambda = config.ridge_lambda
                            ? *config.ridge_lambda
                            : std::max(1e-3 * outcome_mean_square(y), 1e-10);

  ProfiledPass pass;
  pass.data = &data;
  pass.roles = &model.factor_roles;

  TrainResult result;
  result.resolved_lambda = lambda;

  if (train_features) {
    const std::size_t minibatch = std::min(config.minibatch, n);
    std::vector<nn::AdamOptimizer> optimizers;
    std::vector<std::vector<double>> flat_params;
    std::vector<std::vector<double>> flat_grads;
    std::vector<nn::FeatureMap::Gradients> grads;
    for (const auto& map : model.factor_maps) {
      optimizers.emplace_back(map.parameter_count(), config.adam);
      flat_params.emplace_back(map.parameter_count());
      flat_grads.emplace_back(map.parameter_count());
      grads.push_back(map.make_gradients());
    }

    PhiloxRng shuffle_rng(config.seed, streams::kStage1Shuffle);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      double epoch_loss = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < n; start += minibatch) {
        const std::size_t count = std::min(minibatch, n - start);
        std::span<const std::size_t> batch(order.data() + start, count);
        for (auto& g : grads) g.zero();
        const ProfiledLoss eval = profiled_eval(
            model.factor_maps, pass, y, batch, lambda, &grads, &frozen);
        if (!std::isfinite(eval.loss)) {
          throw NonFiniteLoss("stage1: profiled loss diverged at epoch " +
                              std::to_string(epoch));
        }
        epoch_loss += eval.loss;
        ++batches;
        for (std::size_t f = 0; f < model.factor_maps.size(); ++f) {
          if (std::find(frozen.begin(), frozen.end(), f) != frozen.end()) {
            continue;
          }
          nn::FeatureMap& map = model.factor_maps[f];
          map.copy_parameters(flat_params[f]);
          nn::FeatureMap::flatten_gradients(grads[f], flat_grads[f]);
          optimizers[f].step(flat_params[f], flat_grads[f]);
          map.set_parameters(flat_params[f]);
        }
      }
      result.epoch_loss.push_back(epoch_loss /
                                  static_cast<double>(batches));
    }
  }

  // Final weight: exact profiled optimum on the full dataset.
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  ProfiledLoss full =
      profiled_eval(model.factor_maps, pass, y, all, lambda, nullptr);
  if (!std::isfinite(full.loss)) {
    throw NonFiniteLoss("stage1: final full-data loss is not finite");
  }
  model.weight = std::move(full.weight);
  model.ridge_lambda = lambda;
  result.final_full_loss = full.loss;
  result.model = std::move(model);
  return result;
}

}  // namespace

TrainResult train_stage1(const ColumnarDataset& data,
                         const std::vector<FactorSpec>& factors,
                         const TrainConfig& config) {
  return run_stage1(data, factors, config, true);
}

TrainResult fit_stage1_random_features(const ColumnarDataset& data,
                                       const std::vector<FactorSpec>& factors,
                                       const TrainConfig& config) {
  return run_stage1(data, factors, config, false);
}

}  // namespace causalembed::stage1
