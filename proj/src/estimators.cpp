#include "causalembed/estimators.hpp"

#include <cmath>

namespace causalembed::estimators {

std::string parameter_name(CausalParameter p) {
  switch (p) {
    case CausalParameter::ate: return "ATE";
    case CausalParameter::att: return "ATT";
    case CausalParameter::cate: return "CATE";
  }
  return "unknown";
}

std::string adjustment_name(Adjustment a) {
  return a == Adjustment::backdoor ? "backdoor" : "frontdoor";
}

void CausalQuery::validate() const {
  const bool want_aprime = parameter == CausalParameter::att;
  if (want_aprime != conditioning_treatment.has_value()) {
    throw InvalidArgument(
        "query: conditioning treatment a' must be present exactly for ATT");
  }
  const bool want_o = parameter == CausalParameter::cate;
  if (want_o != confounder.has_value()) {
    throw InvalidArgument(
        "query: confounder value o must be present exactly for CATE");
  }
  if (treatment.empty()) {
    throw InvalidArgument("query: treatment value is empty");
  }
}

namespace {

void require_roles(const stage1::StageOneModel& model,
                   const std::vector<Role>& expected,
                   const std::string& what) {
  if (model.factor_roles != expected) {
    std::string got;
    for (Role r : model.factor_roles) got += " " + role_name(r);
    throw RoleMismatch(what + ": model factors are" + got);
  }
}

void require_regressor(const stage2::EmbeddingRegressor& regressor,
                       const std::vector<Role>& conditioning,
                       std::size_t output_dim, const std::string& what) {
  if (regressor.conditioning_roles() != conditioning) {
    throw RoleMismatch(what + ": regressor conditions on the wrong roles");
  }
  if (regressor.output_dim() != output_dim) {
    throw DimensionMismatch(what + ": regressor output dim " +
                            std::to_string(regressor.output_dim()) +
                            " vs feature dim " + std::to_string(output_dim));
  }
}

std::string model_tag(const stage1::StageOneModel& model) {
  return "stage1=" + model.fingerprint();
}

std::string model_tag(const stage1::StageOneModel& model,
                      const stage2::EmbeddingRegressor& regressor) {
  return model_tag(model) + " regressor=" + regressor.fingerprint();
}

CausalEstimate finish(CausalQuery query, double value, std::size_t n_used,
                      std::string fingerprint) {
  if (!std::isfinite(value)) {
    throw NonFiniteLoss("estimate is not finite");
  }
  return CausalEstimate{std::move(query), value, n_used,
                        std::move(fingerprint)};
}

// mean_i(map1(u_i) (x) map2(v_i)) over dataset rows, order-invariant.
linalg::Vector joint_embedding_mean(const nn::FeatureMap& map1, Role role1,
                                    const nn::FeatureMap& map2, Role role2,
                                    const ColumnarDataset& data) {
  const std::size_t d = map1.feature_dim() * map2.feature_dim();
  linalg::Matrix rows(data.n(), d);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const linalg::Vector f1 = map1.forward(data.row(role1, i));
    const linalg::Vector f2 = map2.forward(data.row(role2, i));
    linalg::tensor_product_into(f1.view(), f2.view(), rows.row_view(i));
  }
  return linalg::sorted_column_mean(rows);
}

// mean_j(phi_O(o_j) (x) f_M(o_j, a)): the inner average of the
// observable-confounder front-door formulas. The regressor conditions on
// the concatenation (o, a).
linalg::Vector confounder_mediator_mean(
    const nn::FeatureMap& confounder_map,
    const stage2::EmbeddingRegressor& regressor, const ColumnarDataset& data,
    std::span<const double> a) {
  const std::size_t d =
      confounder_map.feature_dim() * regressor.output_dim();
  linalg::Matrix rows(data.n(), d);
  std::vector<double> joint_input;
  for (std::size_t j = 0; j < data.n(); ++j) {
    const std::span<const double> o = data.row(Role::confounder, j);
    joint_input.assign(o.begin(), o.end());
    joint_input.insert(joint_input.end(), a.begin(), a.end());
    const linalg::Vector fo = confounder_map.forward(o);
    const linalg::Vector fm = regressor.embed(joint_input);
    linalg::tensor_product_into(fo.view(), fm.view(), rows.row_view(j));
  }
  return linalg::sorted_column_mean(rows);
}

}  // namespace

CausalEstimate ate_backdoor_precomputed(const stage1::StageOneModel& model,
                                        const linalg::Vector& marginal,
                                        std::size_t n_used,
                                        std::span<const double> a) {
  require_roles(model, {Role::treatment, Role::backdoor}, "ate_backdoor");
  if (marginal.size() != model.factor_maps[1].feature_dim()) {
    throw DimensionMismatch("ate_backdoor: marginal embedding dim mismatch");
  }
  const linalg::Vector fa = model.factor_maps[0].forward(a);
  const double value =
      linalg::contract2(model.weight.view(), fa.view(), marginal.view());
  CausalQuery query{CausalParameter::ate, Adjustment::backdoor,
                    {a.begin(), a.end()},
                    std::nullopt,
                    std::nullopt};
  return finish(std::move(query), value, n_used, model_tag(model));
}

CausalEstimate ate_backdoor(const stage1::StageOneModel& model,
                            const ColumnarDataset& data,
                            std::span<const double> a) {
  require_roles(model, {Role::treatment, Role::backdoor}, "ate_backdoor");
  const linalg::Vector mu = stage2::marginal_embedding(
      model.factor_maps[1], stage2::role_matrix(data, Role::backdoor));
  return ate_backdoor_precomputed(model, mu, data.n(), a);
}

CausalEstimate att_backdoor(const stage1::StageOneModel& model,
                            const stage2::EmbeddingRegressor& regressor,
                            std::span<const double> a,
                            std::span<const double> a_prime) {
  require_roles(model, {Role::treatment, Role::backdoor}, "att_backdoor");
  require_regressor(regressor, {Role::treatment},
                    model.factor_maps[1].feature_dim(), "att_backdoor");
  const linalg::Vector fa = model.factor_maps[0].forward(a);
  const linalg::Vector embedding = regressor.embed(a_prime);
  const double value =
      linalg::contract2(model.weight.view(), fa.view(), embedding.view());
  CausalQuery query{CausalParameter::att, Adjustment::backdoor,
                    {a.begin(), a.end()},
                    std::vector<double>(a_prime.begin(), a_prime.end()),
                    std::nullopt};
  return finish(std::move(query), value, 0, model_tag(model, regressor));
}

CausalEstimate ate_frontdoor_precomputed(
    const stage1::StageOneModel& model,
    const linalg::Vector& treatment_marginal, std::size_t n_used,
    const stage2::EmbeddingRegressor& regressor, std::span<const double> a) {
  require_roles(model, {Role::treatment, Role::frontdoor}, "ate_frontdoor");
  require_regressor(regressor, {Role::treatment},
                    model.factor_maps[1].feature_dim(), "ate_frontdoor");
  if (treatment_marginal.size() != model.factor_maps[0].feature_dim()) {
    throw DimensionMismatch(
        "ate_frontdoor: treatment marginal embedding dim mismatch");
  }
  const linalg::Vector embedding = regressor.embed(a);
  const double value = linalg::contract2(
      model.weight.view(), treatment_marginal.view(), embedding.view());
  CausalQuery query{CausalParameter::ate, Adjustment::frontdoor,
                    {a.begin(), a.end()},
                    std::nullopt,
                    std::nullopt};
  return finish(std::move(query), value, n_used,
                model_tag(model, regressor));
}

CausalEstimate ate_frontdoor(const stage1::StageOneModel& model,
                             const ColumnarDataset& data,
                             const stage2::EmbeddingRegressor& regressor,
                             std::span<const double> a) {
  require_roles(model, {Role::treatment, Role::frontdoor}, "ate_frontdoor");
  const linalg::Vector mu_a = stage2::marginal_embedding(
      model.factor_maps[0], stage2::role_matrix(data, Role::treatment));
  return ate_frontdoor_precomputed(model, mu_a, data.n(), regressor, a);
}

CausalEstimate att_frontdoor(const stage1::StageOneModel& model,
                             const stage2::EmbeddingRegressor& regressor,
                             std::span<const double> a,
                             std::span<const double> a_prime) {
  require_roles(model, {Role::treatment, Role::frontdoor}, "att_frontdoor");
  require_regressor(regressor, {Role::treatment},
                    model.factor_maps[1].feature_dim(), "att_frontdoor");
  // Treatment feature at a', mediator embedding conditioned on a.
  const linalg::Vector fa_prime = model.factor_maps[0].forward(a_prime);
  const linalg::Vector embedding = regressor.embed(a);
  const double value = linalg::contract2(model.weight.view(),
                                         fa_prime.view(), embedding.view());
  CausalQuery query{CausalParameter::att, Adjustment::frontdoor,
                    {a.begin(), a.end()},
                    std::vector<double>(a_prime.begin(), a_prime.end()),
                    std::nullopt};
  return finish(std::move(query), value, 0, model_tag(model, regressor));
}

CausalEstimate obs_ate_backdoor_precomputed(
    const stage1::StageOneModel& model, const linalg::Vector& joint_marginal,
    std::size_t n_used, std::span<const double> a) {
  require_roles(model, {Role::treatment, Role::confounder, Role::backdoor},
                "obs ate_backdoor");
  const std::size_t expected = model.factor_maps[1].feature_dim() *
                               model.factor_maps[2].feature_dim();
  if (joint_marginal.size() != expected) {
    throw DimensionMismatch(
        "obs ate_backdoor: joint marginal embedding dim mismatch");
  }
  const linalg::Vector fa = model.factor_maps[0].forward(a);
  const double value = linalg::contract2(model.weight.view(), fa.view(),
                                         joint_marginal.view());
  CausalQuery query{CausalParameter::ate, Adjustment::backdoor,
                    {a.begin(), a.end()},
                    std::nullopt,
                    std::nullopt};
  return finish(std::move(query), value, n_used, model_tag(model));
}

CausalEstimate obs_confounder_estimate(const stage1::StageOneModel& model,
                                       const ColumnarDataset& data,
                                       const ObsRegressors& regressors,
                                       const CausalQuery& query) {
  query.validate();
  if (model.factor_count() != 3) {
    throw RoleMismatch("obs_confounder_estimate: model must have 3 factors");
  }
  const Role covariate_role = query.adjustment == Adjustment::backdoor
                                  ? Role::backdoor
                                  : Role::frontdoor;
  require_roles(model, {Role::treatment, Role::confounder, covariate_role},
                "obs_confounder_estimate");
  const nn::FeatureMap& map_a = model.factor_maps[0];
  const nn::FeatureMap& map_o = model.factor_maps[1];
  const nn::FeatureMap& map_z = model.factor_maps[2];
  const std::span<const double> a = query.treatment;

  double value = 0.0;
  std::size_t n_used = 0;
  std::string tag = model_tag(model);

  if (query.adjustment == Adjustment::backdoor) {
    switch (query.parameter) {
      case CausalParameter::ate: {
        const linalg::Vector mean = joint_embedding_mean(
            map_o, Role::confounder, map_z, Role::backdoor, data);
        return obs_ate_backdoor_precomputed(model, mean, data.n(), a);
      }
      case CausalParameter::att: {
        if (!regressors.joint_given_treatment) {
          throw MissingRegressor(
              "obs back-door ATT needs the joint O,X embedding regressor");
        }
        const auto& reg = *regressors.joint_given_treatment;
        require_regressor(reg, {Role::treatment},
                          map_o.feature_dim() * map_z.feature_dim(),
                          "obs att_backdoor");
        const linalg::Vector fa = map_a.forward(a);
        const linalg::Vector embedding =
            reg.embed(*query.conditioning_treatment);
        value = linalg::contract2(model.weight.view(), fa.view(),
                                  embedding.view());
        tag = model_tag(model, reg);
        break;
      }
      case CausalParameter::cate: {
        if (!regressors.covariate_given_confounder) {
          throw MissingRegressor(
              "obs back-door CATE needs the X-given-O embedding regressor");
        }
        const auto& reg = *regressors.covariate_given_confounder;
        require_regressor(reg, {Role::confounder}, map_z.feature_dim(),
                          "obs cate_backdoor");
        const linalg::Vector fa = map_a.forward(a);
        const linalg::Vector fo = map_o.forward(*query.confounder);
        const linalg::Vector embedding = reg.embed(*query.confounder);
        value = linalg::contract3(model.weight.view(), fa.view(), fo.view(),
                                  embedding.view());
        tag = model_tag(model, reg);
        break;
      }
    }
  } else {
    if (!regressors.mediator_given_confounder_treatment) {
      throw MissingRegressor(
          "obs front-door estimates need the M-given-(O,A) regressor");
    }
    const auto& reg = *regressors.mediator_given_confounder_treatment;
    require_regressor(reg, {Role::confounder, Role::treatment},
                      map_z.feature_dim(), "obs frontdoor");
    tag = model_tag(model, reg);
    switch (query.parameter) {
      case CausalParameter::ate: {
        const linalg::Vector mu_a = stage2::marginal_embedding(
            map_a, stage2::role_matrix(data, Role::treatment));
        const linalg::Vector inner =
            confounder_mediator_mean(map_o, reg, data, a);
        value = linalg::contract2(model.weight.view(), mu_a.view(),
                                  inner.view());
        n_used = data.n();
        break;
      }
      case CausalParameter::att: {
        const linalg::Vector fa_prime =
            map_a.forward(*query.conditioning_treatment);
        const linalg::Vector inner =
            confounder_mediator_mean(map_o, reg, data, a);
        value = linalg::contract2(model.weight.view(), fa_prime.view(),
                                  inner.view());
        n_used = data.n();
        break;
      }
      case CausalParameter::cate: {
        const linalg::Vector mu_a = stage2::marginal_embedding(
            map_a, stage2::role_matrix(data, Role::treatment));
        const linalg::Vector fo = map_o.forward(*query.confounder);
        std::vector<double> joint_input(query.confounder->begin(),
                                        query.confounder->end());
        joint_input.insert(joint_input.end(), a.begin(), a.end());
        const linalg::Vector embedding = reg.embed(joint_input);
        value = linalg::contract3(model.weight.view(), mu_a.view(),
                                  fo.view(), embedding.view());
        n_used = data.n();
        break;
      }
    }
  }
  return finish(query, value, n_used, std::move(tag));
}

}  // namespace causalembed::estimators
