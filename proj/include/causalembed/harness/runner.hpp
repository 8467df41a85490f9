#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "causalembed/estimators.hpp"
#include "causalembed/harness/config.hpp"
#include "causalembed/harness/report.hpp"
#include "causalembed/stage1.hpp"
#include "causalembed/stage2.hpp"

namespace causalembed::harness {

inline constexpr const char* kVersion = "1.0.0";

// One query point, optionally with ground truth attached.
struct QuerySpec {
  estimators::CausalParameter parameter = estimators::CausalParameter::ate;
  estimators::Adjustment adjustment = estimators::Adjustment::backdoor;
  std::string a_label;
  std::string conditioning_label;
  std::vector<double> a;
  std::vector<double> aprime;  // ATT only
  std::vector<double> o;       // CATE only
  bool has_truth = false;
  double truth = 0.0;
  double truth_std_error = 0.0;
};

// Trained models plus the marginal embeddings computed on the training
// data, sufficient to answer every query the experiment kind supports
// (obs-frontdoor queries additionally need the dataset).
struct ModelBundle {
  stage1::StageOneModel model;
  std::map<std::string, stage2::EmbeddingRegressor> regressors;
  std::map<std::string, linalg::Vector> marginals;
  std::size_t n_data = 0;

  void save(const std::filesystem::path& dir) const;
  static ModelBundle load(const std::filesystem::path& dir);
  std::string fingerprint_summary() const;
};

// Dataset for one replication; seed = base_seed + replication.
ColumnarDataset make_dataset(const ExperimentConfig& config,
                             std::size_t replication);

// Query grid with ground truth per experiment kind (skipped when
// `with_truth` is false; csv experiments never have truth).
std::vector<QuerySpec> build_queries(const ExperimentConfig& config,
                                     bool with_truth);

ModelBundle train_models(const ExperimentConfig& config,
                         const ColumnarDataset& data,
                         std::size_t replication);

// Evaluates every query. `data` may be null except for experiment kinds
// whose formulas average regressor outputs over the sample (obs-frontdoor).
std::vector<ReportRow> compute_estimates(const ExperimentConfig& config,
                                         const ModelBundle& bundle,
                                         const std::vector<QuerySpec>& queries,
                                         const ColumnarDataset* data,
                                         std::size_t replication);

// Full pipeline: generate, train, estimate, and report for every
// replication (concurrently up to config.workers), then aggregate.
// Returns the aggregate rows.
std::vector<AggregateRow> run_experiment(const ExperimentConfig& config,
                                         const std::filesystem::path& out_dir);

// Re-aggregates existing replication_<k>.csv files under `dir`.
std::vector<AggregateRow> report_from_directory(
    const std::filesystem::path& dir);

// Path helpers shared by the CLI subcommands.
std::filesystem::path dataset_path(const std::filesystem::path& dir,
                                   std::size_t replication);
std::filesystem::path models_dir(const std::filesystem::path& dir,
                                 std::size_t replication);
std::filesystem::path replication_report_path(
    const std::filesystem::path& dir, std::size_t replication);
std::filesystem::path estimates_path(const std::filesystem::path& dir,
                                     std::size_t replication);

}  // namespace causalembed::harness
