#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalembed/dataset.hpp"
#include "causalembed/stage1.hpp"
#include "causalembed/stage2.hpp"

namespace causalembed::estimators {

enum class CausalParameter { ate, att, cate };
enum class Adjustment { backdoor, frontdoor };

std::string parameter_name(CausalParameter p);
std::string adjustment_name(Adjustment a);

// Argument convention for ATT, taken verbatim from the identification
// results: theta_ATT(a; a') is the expected potential outcome under
// treatment `a` for units that received `a'`. Under back-door adjustment
// the regression is evaluated at `a` and the embedding conditions on `a'`;
// under front-door adjustment the treatment feature is evaluated at `a'`
// and the mediator embedding conditions on `a`.
struct CausalQuery {
  CausalParameter parameter = CausalParameter::ate;
  Adjustment adjustment = Adjustment::backdoor;
  std::vector<double> treatment;  // a
  // a' for ATT; must be absent otherwise.
  std::optional<std::vector<double>> conditioning_treatment;
  // o for CATE; must be absent otherwise.
  std::optional<std::vector<double>> confounder;

  void validate() const;
};

struct CausalEstimate {
  CausalQuery query;
  double value = 0.0;
  std::size_t n_used = 0;  // samples behind embedding averages (0 if none)
  std::string model_fingerprint;
};

// theta_ATE(a) = w^T (phi_A(a) (x) (1/n) sum_i phi_X(x_i)). Identical, up
// to rounding, to averaging g(a, x_i) over the data.
CausalEstimate ate_backdoor(const stage1::StageOneModel& model,
                            const ColumnarDataset& data,
                            std::span<const double> a);

// theta_ATT(a; a') = w^T (phi_A(a) (x) f_{phi_X}(a')).
CausalEstimate att_backdoor(const stage1::StageOneModel& model,
                            const stage2::EmbeddingRegressor& regressor,
                            std::span<const double> a,
                            std::span<const double> a_prime);

// theta_ATE(a) = w^T ((1/n) sum_i phi_A(a_i) (x) f_{phi_M}(a)): marginal
// embedding on the treatment factor, conditional embedding at `a` on the
// mediator factor.
CausalEstimate ate_frontdoor(const stage1::StageOneModel& model,
                             const ColumnarDataset& data,
                             const stage2::EmbeddingRegressor& regressor,
                             std::span<const double> a);

// theta_ATT(a; a') = w^T (phi_A(a') (x) f_{phi_M}(a)).
CausalEstimate att_frontdoor(const stage1::StageOneModel& model,
                             const stage2::EmbeddingRegressor& regressor,
                             std::span<const double> a,
                             std::span<const double> a_prime);

// Regressors for the three-factor observable-confounder estimators; only
// the ones a query needs have to be present.
struct ObsRegressors {
  // A -> phi_O (x) phi_X; back-door ATT.
  const stage2::EmbeddingRegressor* joint_given_treatment = nullptr;
  // O -> phi_X; back-door CATE.
  const stage2::EmbeddingRegressor* covariate_given_confounder = nullptr;
  // (O, A) -> phi_M; all front-door queries.
  const stage2::EmbeddingRegressor* mediator_given_confounder_treatment =
      nullptr;
};

// Variants taking a precomputed marginal embedding (as produced by
// stage2::marginal_embedding over the training data); the data-taking
// overloads above delegate to these. They let saved models answer queries
// without re-reading the dataset.
CausalEstimate ate_backdoor_precomputed(const stage1::StageOneModel& model,
                                        const linalg::Vector& marginal,
                                        std::size_t n_used,
                                        std::span<const double> a);
CausalEstimate ate_frontdoor_precomputed(
    const stage1::StageOneModel& model,
    const linalg::Vector& treatment_marginal, std::size_t n_used,
    const stage2::EmbeddingRegressor& regressor, std::span<const double> a);
// Back-door ATE with three factors, given mean_i(phi_O(o_i) (x) phi_X(x_i)).
CausalEstimate obs_ate_backdoor_precomputed(
    const stage1::StageOneModel& model, const linalg::Vector& joint_marginal,
    std::size_t n_used, std::span<const double> a);

// Dispatches the six observable-confounder formulas:
//   back-door  ATE(a)     = w^T (phi_A(a) (x) mean_i(phi_O(o_i) (x) phi_X(x_i)))
//   back-door  ATT(a; a') = w^T (phi_A(a) (x) f_joint(a'))
//   back-door  CATE(a; o) = w^T (phi_A(a) (x) phi_O(o) (x) f_X(o))
//   front-door ATE(a)     = w^T (mean_i phi_A(a_i) (x) mean_j(phi_O(o_j) (x) f_M(o_j, a)))
//   front-door ATT(a; a') = w^T (phi_A(a') (x) mean_j(phi_O(o_j) (x) f_M(o_j, a)))
//   front-door CATE(a; o) = w^T (mean_i phi_A(a_i) (x) phi_O(o) (x) f_M(o, a))
CausalEstimate obs_confounder_estimate(const stage1::StageOneModel& model,
                                       const ColumnarDataset& data,
                                       const ObsRegressors& regressors,
                                       const CausalQuery& query);

}  // namespace causalembed::estimators
