#include "causalembed/harness/runner.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "causalembed/dgp/discrete.hpp"
#include "causalembed/dgp/dsprite.hpp"
#include "causalembed/harness/log.hpp"
#include "causalembed/serialize.hpp"

namespace causalembed::harness {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kRegressorKeys = {
    "x_given_a", "m_given_a", "joint_given_a", "x_given_o", "m_given_oa"};
const std::vector<std::string> kMarginalKeys = {"backdoor", "treatment",
                                                "joint"};

std::string grid_label(double pos_x, double pos_y) {
  return "posx=" + format_double(pos_x) + ";posy=" + format_double(pos_y);
}

dgp::SpriteConfig sprite_config(const ExperimentConfig& config) {
  dgp::SpriteConfig sprite;
  sprite.resolution = config.dgp.resolution;
  sprite.kind = config.dgp.sprite == "square" ? dgp::SpriteKind::square
                                              : dgp::SpriteKind::gaussian_blob;
  sprite.half_width = config.dgp.sprite_half_width;
  sprite.pixel_noise_std = config.dgp.pixel_noise_std;
  return sprite;
}

dgp::BackdoorDspriteConfig backdoor_config(const ExperimentConfig& config) {
  dgp::BackdoorDspriteConfig out;
  out.sprite = sprite_config(config);
  out.u_half_range = config.resolved_u_half_range();
  out.backdoor_noise_std = config.dgp.backdoor_noise_std;
  out.outcome_noise_std = config.dgp.outcome_noise_std;
  out.confounder_weight = config.resolved_confounder_weight();
  return out;
}

dgp::FrontdoorDspriteConfig frontdoor_config(const ExperimentConfig& config) {
  dgp::FrontdoorDspriteConfig out;
  out.sprite = sprite_config(config);
  out.u_half_range = config.resolved_u_half_range();
  out.mediator_noise_std = config.dgp.mediator_noise_std;
  out.outcome_noise_std = config.dgp.outcome_noise_std;
  out.confounder_weight = config.resolved_confounder_weight();
  return out;
}

std::vector<double> grid_points(const ExperimentConfig& config) {
  const std::size_t side = config.resolved_grid_side();
  std::vector<double> points;
  if (side == 1) {
    points.push_back(0.5 * (config.queries.grid_min + config.queries.grid_max));
    return points;
  }
  const double step = (config.queries.grid_max - config.queries.grid_min) /
                      static_cast<double>(side - 1);
  for (std::size_t i = 0; i < side; ++i) {
    points.push_back(config.queries.grid_min + step * static_cast<double>(i));
  }
  return points;
}

std::string point_label(const std::vector<double>& point) {
  std::string out = "a=";
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (i) out += ',';
    out += format_double(point[i]);
  }
  return out;
}

// Row range [begin, end) of a dataset, for the half-split option.
ColumnarDataset slice_dataset(const ColumnarDataset& data, std::size_t begin,
                              std::size_t end) {
  ColumnarDataset out(end - begin);
  for (const auto& col : data.columns()) {
    LogicalColumn sliced;
    sliced.role = col.role;
    sliced.component_names = col.component_names;
    sliced.values.assign(col.values.begin() + begin * col.dim(),
                         col.values.begin() + end * col.dim());
    out.add_column(std::move(sliced));
  }
  out.seed_provenance = data.seed_provenance + " rows=[" +
                        std::to_string(begin) + "," + std::to_string(end) +
                        ")";
  return out;
}

std::vector<std::size_t> pick_hidden(const ExperimentConfig& config,
                                     std::size_t input_dim, bool stage_two) {
  // Flattened images get the wide architecture.
  const bool image = input_dim >= 64;
  if (stage_two) {
    return image ? config.stage2.image_hidden : config.stage2.hidden;
  }
  return image ? config.stage1.image_hidden : config.stage1.hidden;
}

stage1::TrainConfig stage1_config(const ExperimentConfig& config,
                                  std::uint64_t seed) {
  stage1::TrainConfig out;
  out.ridge_lambda = config.stage1.ridge_lambda;
  out.adam.step_size = config.stage1.learning_rate;
  out.epochs = config.stage1.epochs;
  out.minibatch = config.stage1.minibatch;
  out.seed = seed;
  return out;
}

stage2::EmbeddingTrainConfig stage2_config(const ExperimentConfig& config,
                                           std::size_t conditioning_dim,
                                           std::uint64_t seed) {
  stage2::EmbeddingTrainConfig out;
  out.hidden_dims = pick_hidden(config, conditioning_dim, true);
  out.adam.step_size = config.stage2.learning_rate;
  out.epochs = config.stage2.epochs;
  out.minibatch = config.stage2.minibatch;
  out.weight_decay = config.stage2.weight_decay;
  out.seed = seed;
  return out;
}

nn::OutputActivation stage1_activation(const ExperimentConfig& config) {
  return config.stage1.output_activation == "ramp"
             ? nn::OutputActivation::ramp
             : nn::OutputActivation::identity;
}

}  // namespace

ColumnarDataset make_dataset(const ExperimentConfig& config,
                             std::size_t replication) {
  const std::uint64_t seed = config.base_seed + replication;
  switch (config.kind) {
    case ExperimentKind::backdoor_dsprite:
      return gen_backdoor_dsprite(backdoor_config(config), config.dgp.n, seed)
          .data;
    case ExperimentKind::frontdoor_dsprite:
      return gen_frontdoor_dsprite(frontdoor_config(config), config.dgp.n,
                                   seed)
          .data;
    case ExperimentKind::discrete_toy: {
      const dgp::DiscreteToySpec spec =
          dgp::random_toy_spec(config.dgp.toy_graph, config.dgp.toy_seed);
      return dgp::gen_discrete_toy(spec, config.dgp.n, seed).data;
    }
    case ExperimentKind::csv_backdoor: {
      std::ifstream in(config.dgp.csv_path);
      if (!in) {
        throw IoError("cannot open data file '" + config.dgp.csv_path + "'");
      }
      ColumnarDataset data =
          ColumnarDataset::load_csv(in, config.dgp.csv_path);
      if (!data.has(Role::outcome) || !data.has(Role::treatment) ||
          !data.has(Role::backdoor)) {
        throw MissingColumn(
            "csv-backdoor data needs outcome, treatment, and backdoor "
            "columns");
      }
      return data;
    }
  }
  throw InvalidArgument("unknown experiment kind");
}

std::vector<QuerySpec> build_queries(const ExperimentConfig& config,
                                     bool with_truth) {
  std::vector<QuerySpec> queries;
  switch (config.kind) {
    case ExperimentKind::backdoor_dsprite: {
      const dgp::SpriteConfig sprite = sprite_config(config);
      const dgp::BackdoorGroundTruth truth{sprite.resolution};
      for (double py : grid_points(config)) {
        for (double px : grid_points(config)) {
          QuerySpec q;
          q.parameter = estimators::CausalParameter::ate;
          q.adjustment = estimators::Adjustment::backdoor;
          q.a_label = grid_label(px, py);
          const linalg::Vector image =
              dgp::render_sprite_clean(sprite, px, py);
          q.a.assign(image.begin(), image.end());
          if (with_truth) {
            q.has_truth = true;
            q.truth = truth.ate(q.a);
          }
          queries.push_back(std::move(q));
        }
      }
      break;
    }
    case ExperimentKind::frontdoor_dsprite: {
      const dgp::SpriteConfig sprite = sprite_config(config);
      const dgp::FrontdoorGroundTruth truth{frontdoor_config(config)};
      const linalg::Vector aprime = dgp::render_sprite_clean(
          sprite, config.queries.aprime_pos_x, config.queries.aprime_pos_y);
      const std::string aprime_label =
          "aprime_posx=" + format_double(config.queries.aprime_pos_x) +
          ";aprime_posy=" + format_double(config.queries.aprime_pos_y);
      std::size_t index = 0;
      for (double py : grid_points(config)) {
        for (double px : grid_points(config)) {
          QuerySpec q;
          q.parameter = estimators::CausalParameter::att;
          q.adjustment = estimators::Adjustment::frontdoor;
          q.a_label = grid_label(px, py);
          q.conditioning_label = aprime_label;
          const linalg::Vector image =
              dgp::render_sprite_clean(sprite, px, py);
          q.a.assign(image.begin(), image.end());
          q.aprime.assign(aprime.begin(), aprime.end());
          if (with_truth) {
            const dgp::McEstimate mc = truth.att(
                q.a, config.queries.aprime_pos_x, config.queries.aprime_pos_y,
                config.queries.mc_samples,
                config.base_seed + 1000003 * (index + 1));
            q.has_truth = true;
            q.truth = mc.value;
            q.truth_std_error = mc.std_error;
          }
          ++index;
          queries.push_back(std::move(q));
        }
      }
      break;
    }
    case ExperimentKind::discrete_toy: {
      const dgp::DiscreteToySpec spec =
          dgp::random_toy_spec(config.dgp.toy_graph, config.dgp.toy_seed);
      const dgp::ToyJoint joint = dgp::toy_joint(spec);
      const bool frontdoor = spec.graph == dgp::ToyGraph::frontdoor ||
                             spec.graph == dgp::ToyGraph::obs_frontdoor;
      const auto adjustment = frontdoor ? estimators::Adjustment::frontdoor
                                        : estimators::Adjustment::backdoor;
      for (std::size_t ai = 0; ai < spec.a_values.size(); ++ai) {
        QuerySpec q;
        q.parameter = estimators::CausalParameter::ate;
        q.adjustment = adjustment;
        q.a = {spec.a_values[ai]};
        q.a_label = "a=" + format_double(spec.a_values[ai]);
        if (with_truth) {
          q.has_truth = true;
          q.truth = dgp::toy_ate(joint, ai);
        }
        queries.push_back(std::move(q));
      }
      for (std::size_t ai = 0; ai < spec.a_values.size(); ++ai) {
        for (std::size_t pi = 0; pi < spec.a_values.size(); ++pi) {
          QuerySpec q;
          q.parameter = estimators::CausalParameter::att;
          q.adjustment = adjustment;
          q.a = {spec.a_values[ai]};
          q.aprime = {spec.a_values[pi]};
          q.a_label = "a=" + format_double(spec.a_values[ai]);
          q.conditioning_label = "aprime=" + format_double(spec.a_values[pi]);
          if (with_truth) {
            q.has_truth = true;
            q.truth = dgp::toy_att(joint, ai, pi);
          }
          queries.push_back(std::move(q));
        }
      }
      if (spec.has_confounder()) {
        for (std::size_t ai = 0; ai < spec.a_values.size(); ++ai) {
          for (std::size_t oi = 0; oi < spec.o_values.size(); ++oi) {
            QuerySpec q;
            q.parameter = estimators::CausalParameter::cate;
            q.adjustment = adjustment;
            q.a = {spec.a_values[ai]};
            q.o = {spec.o_values[oi]};
            q.a_label = "a=" + format_double(spec.a_values[ai]);
            q.conditioning_label = "o=" + format_double(spec.o_values[oi]);
            if (with_truth) {
              q.has_truth = true;
              q.truth = dgp::toy_cate(joint, ai, oi);
            }
            queries.push_back(std::move(q));
          }
        }
      }
      break;
    }
    case ExperimentKind::csv_backdoor: {
      for (const auto& point : config.queries.ate_points) {
        QuerySpec q;
        q.parameter = estimators::CausalParameter::ate;
        q.adjustment = estimators::Adjustment::backdoor;
        q.a = point;
        q.a_label = point_label(point);
        queries.push_back(std::move(q));
      }
      for (const auto& [a, aprime] : config.queries.att_pairs) {
        QuerySpec q;
        q.parameter = estimators::CausalParameter::att;
        q.adjustment = estimators::Adjustment::backdoor;
        q.a = a;
        q.aprime = aprime;
        q.a_label = point_label(a);
        q.conditioning_label = "aprime=" + point_label(aprime).substr(2);
        queries.push_back(std::move(q));
      }
      break;
    }
  }
  if (queries.empty()) {
    throw ConfigError("experiment produced an empty query grid");
  }
  return queries;
}

ModelBundle train_models(const ExperimentConfig& config,
                         const ColumnarDataset& data,
                         std::size_t replication) {
  const std::uint64_t seed = config.base_seed + replication;

  // Optional 50/50 split: stage 1 fits on the first half, stage 2 and the
  // marginal embeddings use the held-out second half.
  ColumnarDataset stage1_half;
  ColumnarDataset stage2_half;
  const bool split = config.stage2.sample_split == "half" && data.n() >= 2;
  if (split) {
    stage1_half = slice_dataset(data, 0, data.n() / 2);
    stage2_half = slice_dataset(data, data.n() / 2, data.n());
  }
  const ColumnarDataset& train_data = split ? stage1_half : data;
  const ColumnarDataset& embed_data = split ? stage2_half : data;

  const bool obs = config.kind == ExperimentKind::discrete_toy &&
                   (config.dgp.toy_graph == dgp::ToyGraph::obs_backdoor ||
                    config.dgp.toy_graph == dgp::ToyGraph::obs_frontdoor);
  const bool frontdoor =
      config.kind == ExperimentKind::frontdoor_dsprite ||
      (config.kind == ExperimentKind::discrete_toy &&
       (config.dgp.toy_graph == dgp::ToyGraph::frontdoor ||
        config.dgp.toy_graph == dgp::ToyGraph::obs_frontdoor));
  const Role covariate_role = frontdoor ? Role::frontdoor : Role::backdoor;

  std::vector<stage1::FactorSpec> factors;
  {
    stage1::FactorSpec treatment;
    treatment.role = Role::treatment;
    treatment.feature_dim = config.stage1.treatment_dim;
    treatment.hidden_dims =
        pick_hidden(config, data.column(Role::treatment).dim(), false);
    treatment.output_activation = stage1_activation(config);
    factors.push_back(std::move(treatment));
    if (obs) {
      stage1::FactorSpec confounder;
      confounder.role = Role::confounder;
      confounder.feature_dim = config.stage1.confounder_dim;
      confounder.hidden_dims =
          pick_hidden(config, data.column(Role::confounder).dim(), false);
      confounder.output_activation = stage1_activation(config);
      factors.push_back(std::move(confounder));
    }
    stage1::FactorSpec covariate;
    covariate.role = covariate_role;
    covariate.feature_dim = config.stage1.covariate_dim;
    covariate.hidden_dims =
        pick_hidden(config, data.column(covariate_role).dim(), false);
    covariate.output_activation = stage1_activation(config);
    factors.push_back(std::move(covariate));
  }

  const stage1::TrainConfig train_cfg = stage1_config(config, seed);
  stage1::TrainResult trained =
      config.stage1.train_features
          ? stage1::train_stage1(train_data, factors, train_cfg)
          : stage1::fit_stage1_random_features(train_data, factors, train_cfg);
  log_info("replication " + std::to_string(replication) +
           ": stage1 full-data loss " +
           format_double(trained.final_full_loss));

  ModelBundle bundle;
  bundle.model = std::move(trained.model);
  bundle.n_data = embed_data.n();

  const auto& model = bundle.model;
  const nn::FeatureMap& treatment_map = model.factor_maps[0];
  const nn::FeatureMap& covariate_map = model.factor_maps.back();

  // Marginal embeddings over the embedding half.
  if (!frontdoor && !obs) {
    bundle.marginals["backdoor"] = stage2::marginal_embedding(
        covariate_map, stage2::role_matrix(embed_data, Role::backdoor));
  }
  if (frontdoor) {
    bundle.marginals["treatment"] = stage2::marginal_embedding(
        treatment_map, stage2::role_matrix(embed_data, Role::treatment));
  }
  if (obs && !frontdoor) {
    // mean_i(phi_O(o_i) (x) phi_X(x_i)) for the three-factor back-door ATE.
    const nn::FeatureMap& conf_map = model.factor_maps[1];
    const std::size_t d =
        conf_map.feature_dim() * covariate_map.feature_dim();
    linalg::Matrix rows(embed_data.n(), d);
    for (std::size_t i = 0; i < embed_data.n(); ++i) {
      const linalg::Vector fo =
          conf_map.forward(embed_data.row(Role::confounder, i));
      const linalg::Vector fx =
          covariate_map.forward(embed_data.row(covariate_role, i));
      linalg::tensor_product_into(fo.view(), fx.view(), rows.row_view(i));
    }
    bundle.marginals["joint"] = linalg::sorted_column_mean(rows);
    bundle.marginals["treatment"] = stage2::marginal_embedding(
        treatment_map, stage2::role_matrix(embed_data, Role::treatment));
  }

  // Stage-2 regressors needed by this experiment's queries.
  const bool needs_att =
      config.kind == ExperimentKind::discrete_toy ||
      config.kind == ExperimentKind::frontdoor_dsprite ||
      !config.queries.att_pairs.empty();
  if (!obs) {
    if (frontdoor) {
      // f_{phi_M}: A -> phi_M features; used by both ATE and ATT.
      const auto cfg = stage2_config(
          config, embed_data.column(Role::treatment).dim(), seed);
      bundle.regressors["m_given_a"] =
          stage2::train_embedding(
              covariate_map,
              stage2::role_matrix(embed_data, Role::treatment),
              stage2::role_matrix(embed_data, Role::frontdoor), cfg,
              {Role::treatment})
              .regressor;
    } else if (needs_att) {
      // f_{phi_X}: A -> phi_X features for back-door ATT.
      const auto cfg = stage2_config(
          config, embed_data.column(Role::treatment).dim(), seed);
      bundle.regressors["x_given_a"] =
          stage2::train_embedding(
              covariate_map,
              stage2::role_matrix(embed_data, Role::treatment),
              stage2::role_matrix(embed_data, Role::backdoor), cfg,
              {Role::treatment})
              .regressor;
    }
  } else {
    const nn::FeatureMap& conf_map = model.factor_maps[1];
    if (!frontdoor) {
      {
        const auto cfg = stage2_config(
            config, embed_data.column(Role::treatment).dim(), seed);
        bundle.regressors["joint_given_a"] =
            stage2::train_embedding_tensor(
                conf_map, covariate_map,
                stage2::role_matrix(embed_data, Role::treatment),
                stage2::role_matrix(embed_data, Role::confounder),
                stage2::role_matrix(embed_data, Role::backdoor), cfg,
                {Role::treatment})
                .regressor;
      }
      {
        const auto cfg = stage2_config(
            config, embed_data.column(Role::confounder).dim(), seed + 1);
        bundle.regressors["x_given_o"] =
            stage2::train_embedding(
                covariate_map,
                stage2::role_matrix(embed_data, Role::confounder),
                stage2::role_matrix(embed_data, Role::backdoor), cfg,
                {Role::confounder})
                .regressor;
      }
    } else {
      const auto cfg = stage2_config(
          config,
          embed_data.column(Role::confounder).dim() +
              embed_data.column(Role::treatment).dim(),
          seed);
      bundle.regressors["m_given_oa"] =
          stage2::train_embedding(
              covariate_map,
              stage2::role_matrix(embed_data,
                                  {Role::confounder, Role::treatment}),
              stage2::role_matrix(embed_data, Role::frontdoor), cfg,
              {Role::confounder, Role::treatment})
              .regressor;
    }
  }
  return bundle;
}

std::vector<ReportRow> compute_estimates(const ExperimentConfig& config,
                                         const ModelBundle& bundle,
                                         const std::vector<QuerySpec>& queries,
                                         const ColumnarDataset* data,
                                         std::size_t replication) {
  const bool obs_frontdoor =
      config.kind == ExperimentKind::discrete_toy &&
      config.dgp.toy_graph == dgp::ToyGraph::obs_frontdoor;
  const bool obs = config.kind == ExperimentKind::discrete_toy &&
                   (config.dgp.toy_graph == dgp::ToyGraph::obs_backdoor ||
                    obs_frontdoor);

  auto regressor = [&](const std::string& key)
      -> const stage2::EmbeddingRegressor& {
    const auto it = bundle.regressors.find(key);
    if (it == bundle.regressors.end()) {
      throw MissingRegressor("model bundle has no regressor '" + key + "'");
    }
    return it->second;
  };
  auto marginal = [&](const std::string& key) -> const linalg::Vector& {
    const auto it = bundle.marginals.find(key);
    if (it == bundle.marginals.end()) {
      throw MissingRegressor("model bundle has no marginal embedding '" +
                             key + "'");
    }
    return it->second;
  };

  std::vector<ReportRow> rows;
  rows.reserve(queries.size());
  for (const auto& q : queries) {
    estimators::CausalEstimate estimate;
    if (!obs) {
      if (q.adjustment == estimators::Adjustment::backdoor) {
        if (q.parameter == estimators::CausalParameter::ate) {
          estimate = estimators::ate_backdoor_precomputed(
              bundle.model, marginal("backdoor"), bundle.n_data, q.a);
        } else {
          estimate = estimators::att_backdoor(
              bundle.model, regressor("x_given_a"), q.a, q.aprime);
        }
      } else {
        if (q.parameter == estimators::CausalParameter::ate) {
          estimate = estimators::ate_frontdoor_precomputed(
              bundle.model, marginal("treatment"), bundle.n_data,
              regressor("m_given_a"), q.a);
        } else {
          estimate = estimators::att_frontdoor(
              bundle.model, regressor("m_given_a"), q.a, q.aprime);
        }
      }
    } else if (!obs_frontdoor) {
      if (q.parameter == estimators::CausalParameter::ate) {
        estimate = estimators::obs_ate_backdoor_precomputed(
            bundle.model, marginal("joint"), bundle.n_data, q.a);
      } else {
        estimators::CausalQuery query;
        query.parameter = q.parameter;
        query.adjustment = q.adjustment;
        query.treatment = q.a;
        if (q.parameter == estimators::CausalParameter::att) {
          query.conditioning_treatment = q.aprime;
        } else {
          query.confounder = q.o;
        }
        estimators::ObsRegressors regs;
        regs.joint_given_treatment = &regressor("joint_given_a");
        regs.covariate_given_confounder = &regressor("x_given_o");
        // ATT and CATE formulas never touch the sample.
        ColumnarDataset empty(0);
        estimate = estimators::obs_confounder_estimate(
            bundle.model, data ? *data : empty, regs, query);
      }
    } else {
      if (!data) {
        throw Error("E_MISSING_DATA",
                    "obs-frontdoor estimates need the replication dataset");
      }
      estimators::CausalQuery query;
      query.parameter = q.parameter;
      query.adjustment = q.adjustment;
      query.treatment = q.a;
      if (q.parameter == estimators::CausalParameter::att) {
        query.conditioning_treatment = q.aprime;
      } else if (q.parameter == estimators::CausalParameter::cate) {
        query.confounder = q.o;
      }
      estimators::ObsRegressors regs;
      regs.mediator_given_confounder_treatment = &regressor("m_given_oa");
      estimate =
          estimators::obs_confounder_estimate(bundle.model, *data, regs,
                                              query);
    }

    ReportRow row;
    row.replication = replication;
    row.parameter = estimators::parameter_name(q.parameter);
    row.adjustment = estimators::adjustment_name(q.adjustment);
    row.a_label = q.a_label;
    row.conditioning = q.conditioning_label;
    row.estimate = estimate.value;
    row.has_truth = q.has_truth;
    row.truth = q.truth;
    row.truth_std_error = q.truth_std_error;
    row.n = bundle.n_data;
    rows.push_back(std::move(row));
  }
  return rows;
}

void ModelBundle::save(const fs::path& dir) const {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "stage1.model");
    if (!out) throw IoError("cannot write " + (dir / "stage1.model").string());
    model.save(out);
  }
  for (const auto& [key, reg] : regressors) {
    std::ofstream out(dir / ("regressor_" + key + ".model"));
    if (!out) throw IoError("cannot write regressor " + key);
    reg.save(out);
  }
  std::ofstream out(dir / "embeddings.txt");
  if (!out) throw IoError("cannot write embeddings.txt");
  out << "causalembed-embeddings v1\n";
  out << "n " << n_data << '\n';
  for (const auto& [key, vec] : marginals) {
    out << "marginal " << key << ' ' << vec.size() << '\n';
    for (std::size_t i = 0; i < vec.size(); ++i) {
      if (i) out << ' ';
      out << format_double(vec[i]);
    }
    out << '\n';
  }
  out << "end embeddings\n";
}

ModelBundle ModelBundle::load(const fs::path& dir) {
  ModelBundle bundle;
  {
    const fs::path path = dir / "stage1.model";
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    bundle.model = stage1::StageOneModel::load(in, path.string());
  }
  for (const auto& key : kRegressorKeys) {
    const fs::path path = dir / ("regressor_" + key + ".model");
    std::ifstream in(path);
    if (!in) continue;
    bundle.regressors[key] =
        stage2::EmbeddingRegressor::load(in, path.string());
  }
  const fs::path embeddings = dir / "embeddings.txt";
  std::ifstream in(embeddings);
  if (!in) throw IoError("cannot open " + embeddings.string());
  LineReader reader(in, embeddings.string());
  if (reader.expect_line("header") != "causalembed-embeddings v1") {
    throw DataFormatError(embeddings.string() + ": bad embeddings header");
  }
  std::string line;
  while (reader.next_line(line)) {
    if (line.empty()) continue;
    if (line == "end embeddings") break;
    std::istringstream header(line);
    std::string tag;
    header >> tag;
    if (tag == "n") {
      header >> bundle.n_data;
      continue;
    }
    if (tag != "marginal") {
      throw DataFormatError(embeddings.string() + ": unexpected line '" +
                            line + "'");
    }
    std::string key;
    std::size_t dim = 0;
    header >> key >> dim;
    const std::string values = reader.expect_line("embedding values");
    std::istringstream value_stream(values);
    linalg::Vector vec(dim);
    std::string token;
    for (std::size_t i = 0; i < dim; ++i) {
      if (!(value_stream >> token)) {
        throw DataFormatError(embeddings.string() +
                              ": truncated embedding values");
      }
      vec[i] = parse_double(token, embeddings.string());
    }
    bundle.marginals[key] = std::move(vec);
  }
  return bundle;
}

std::string ModelBundle::fingerprint_summary() const {
  std::string out = "stage1=" + model.fingerprint();
  for (const auto& [key, reg] : regressors) {
    out += " " + key + "=" + reg.fingerprint();
  }
  return out;
}

fs::path dataset_path(const fs::path& dir, std::size_t replication) {
  return dir / ("dataset_" + std::to_string(replication) + ".csv");
}

fs::path models_dir(const fs::path& dir, std::size_t replication) {
  return dir / ("models_" + std::to_string(replication));
}

fs::path replication_report_path(const fs::path& dir,
                                 std::size_t replication) {
  return dir / ("replication_" + std::to_string(replication) + ".csv");
}

fs::path estimates_path(const fs::path& dir, std::size_t replication) {
  return dir / ("estimates_" + std::to_string(replication) + ".csv");
}

std::vector<AggregateRow> run_experiment(const ExperimentConfig& config,
                                         const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
  const std::vector<QuerySpec> queries = build_queries(config, true);
  log_info("running " + experiment_kind_name(config.kind) + ": " +
           std::to_string(config.replications) + " replications, " +
           std::to_string(queries.size()) + " queries");

  std::vector<std::vector<ReportRow>> all_rows(config.replications);
  std::vector<std::string> fingerprints(config.replications);
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  auto worker = [&]() {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= config.replications) return;
      try {
        const ColumnarDataset data = make_dataset(config, k);
        const ModelBundle bundle = train_models(config, data, k);
        all_rows[k] = compute_estimates(config, bundle, queries, &data, k);
        bundle.save(models_dir(out_dir, k));
        std::ofstream out(replication_report_path(out_dir, k));
        if (!out) {
          throw IoError("cannot write replication report " +
                        std::to_string(k));
        }
        write_replication_csv(out, all_rows[k]);
        fingerprints[k] = bundle.fingerprint_summary();
        log_info("replication " + std::to_string(k) + " done");
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t worker_count =
      std::min<std::size_t>(config.workers, config.replications);
  if (worker_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < worker_count; ++i) {
      threads.emplace_back(worker);
    }
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ReportRow> combined;
  for (const auto& rows : all_rows) {
    combined.insert(combined.end(), rows.begin(), rows.end());
  }
  const std::vector<AggregateRow> aggregates = aggregate_rows(combined);
  {
    std::ofstream out(out_dir / "aggregate.csv");
    if (!out) throw IoError("cannot write aggregate.csv");
    write_aggregate_csv(out, aggregates);
  }
  {
    std::ofstream out(out_dir / "run_manifest");
    if (!out) throw IoError("cannot write run_manifest");
    out << "causalembed run manifest v1\n";
    out << "version " << kVersion << '\n';
    out << "queries " << queries.size() << '\n';
    for (std::size_t k = 0; k < config.replications; ++k) {
      out << "replication " << k << " seed "
          << config.base_seed + k << ' ' << fingerprints[k] << '\n';
    }
    out << "config\n" << config.canonical();
  }
  return aggregates;
}

std::vector<AggregateRow> report_from_directory(const fs::path& dir) {
  std::vector<ReportRow> combined;
  for (std::size_t k = 0;; ++k) {
    const fs::path path = replication_report_path(dir, k);
    std::ifstream in(path);
    if (!in) {
      if (k == 0) {
        throw IoError("no replication_0.csv under " + dir.string());
      }
      break;
    }
    const auto rows = read_replication_csv(in, path.string());
    combined.insert(combined.end(), rows.begin(), rows.end());
  }
  const auto aggregates = aggregate_rows(combined);
  std::ofstream out(dir / "aggregate.csv");
  if (!out) throw IoError("cannot write aggregate.csv");
  write_aggregate_csv(out, aggregates);
  return aggregates;
}

}  // namespace causalembed::harness
