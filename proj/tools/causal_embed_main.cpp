// causal-embed: config-driven pipelines for two-stage causal estimation.
//
// Subcommands:
//   generate  write a replication's dataset to CSV
//   train     fit stage-1 and stage-2 models from a dataset
//   estimate  answer the configured queries from saved models
//   evaluate  full pipeline with ground truth over all replications
//   report    re-aggregate existing per-replication reports

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "causalembed/errors.hpp"
#include "causalembed/harness/config.hpp"
#include "causalembed/harness/log.hpp"
#include "causalembed/harness/runner.hpp"

namespace fs = std::filesystem;
using namespace causalembed;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> replications;
  std::size_t replication = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool with_replication) {
  cmd->add_option("--config", opts.config_path, "experiment config file")
      ->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "override the base seed");
  cmd->add_option("--workers", opts.workers, "concurrent replications");
  cmd->add_option("--replications", opts.replications,
                  "override the replication count");
  if (with_replication) {
    cmd->add_option("--replication", opts.replication,
                    "replication index for this step (default 0)");
  }
}

harness::ExperimentConfig resolve(const CommonOptions& opts) {
  harness::ExperimentConfig config =
      harness::load_config_file(opts.config_path);
  if (opts.seed) config.base_seed = *opts.seed;
  if (opts.workers) config.workers = *opts.workers;
  if (opts.replications) config.replications = *opts.replications;
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  config.validate();
  return config;
}

int run_generate(const CommonOptions& opts) {
  const auto config = resolve(opts);
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);
  const ColumnarDataset data =
      harness::make_dataset(config, opts.replication);
  const fs::path path = harness::dataset_path(out_dir, opts.replication);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  data.save_csv(out);
  harness::log_info("wrote " + path.string() + " (" +
                    std::to_string(data.n()) + " rows)");
  return 0;
}

int run_train(const CommonOptions& opts) {
  const auto config = resolve(opts);
  const fs::path out_dir(config.output_dir);
  const fs::path data_path =
      harness::dataset_path(out_dir, opts.replication);
  std::ifstream in(data_path);
  if (!in) {
    throw IoError("cannot open " + data_path.string() +
                  " (run `generate` first)");
  }
  const ColumnarDataset data =
      ColumnarDataset::load_csv(in, data_path.string());
  const harness::ModelBundle bundle =
      harness::train_models(config, data, opts.replication);
  bundle.save(harness::models_dir(out_dir, opts.replication));
  harness::log_info("wrote models under " +
                    harness::models_dir(out_dir, opts.replication).string());
  return 0;
}

int run_estimate(const CommonOptions& opts) {
  const auto config = resolve(opts);
  const fs::path out_dir(config.output_dir);
  const harness::ModelBundle bundle =
      harness::ModelBundle::load(harness::models_dir(out_dir,
                                                     opts.replication));
  const auto queries = harness::build_queries(config, false);

  // The dataset is only needed for formulas that average regressor outputs
  // over the sample; load it when available.
  std::optional<ColumnarDataset> data;
  const fs::path data_path =
      harness::dataset_path(out_dir, opts.replication);
  if (std::ifstream in(data_path); in) {
    data = ColumnarDataset::load_csv(in, data_path.string());
  }
  const auto rows = harness::compute_estimates(
      config, bundle, queries, data ? &*data : nullptr, opts.replication);
  const fs::path path = harness::estimates_path(out_dir, opts.replication);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  harness::write_estimates_csv(out, rows);
  harness::log_info("wrote " + path.string());
  return 0;
}

int run_evaluate(const CommonOptions& opts) {
  const auto config = resolve(opts);
  const auto aggregates =
      harness::run_experiment(config, fs::path(config.output_dir));
  for (const auto& row : aggregates) {
    if (row.parameter == "overall") {
      std::cout << "overall: mean squared error "
                << row.mean_squared_error << ", mean abs error "
                << row.mean_abs_error << " over " << row.replications
                << " query evaluations\n";
    }
  }
  return 0;
}

int run_report(const CommonOptions& opts) {
  fs::path dir(opts.out_dir);
  if (opts.out_dir.empty()) {
    const auto config = harness::load_config_file(opts.config_path);
    dir = config.output_dir;
  }
  harness::report_from_directory(dir);
  harness::log_info("wrote " + (dir / "aggregate.csv").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural mean-embedding estimators for back-door and "
               "front-door causal adjustment"};
  app.require_subcommand(1);

  CommonOptions generate_opts, train_opts, estimate_opts, evaluate_opts;
  CLI::App* generate =
      app.add_subcommand("generate", "write a replication's dataset to CSV");
  add_common(generate, generate_opts, true);
  CLI::App* train =
      app.add_subcommand("train", "train models from a generated dataset");
  add_common(train, train_opts, true);
  CLI::App* estimate =
      app.add_subcommand("estimate", "run queries against saved models");
  add_common(estimate, estimate_opts, true);
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "full pipeline with ground truth and aggregation");
  add_common(evaluate, evaluate_opts, false);

  std::string report_config, report_dir;
  CLI::App* report = app.add_subcommand(
      "report", "re-aggregate existing replication reports");
  report->add_option("--config", report_config, "experiment config file");
  report->add_option("--out", report_dir, "directory with replication CSVs");

  try {
    app.parse(argc, argv);
    if (generate->parsed()) return run_generate(generate_opts);
    if (train->parsed()) return run_train(train_opts);
    if (estimate->parsed()) return run_estimate(estimate_opts);
    if (evaluate->parsed()) return run_evaluate(evaluate_opts);
    if (report->parsed()) {
      CommonOptions opts;
      opts.config_path = report_config;
      opts.out_dir = report_dir;
      if (report_dir.empty() && report_config.empty()) {
        throw ConfigError("report needs --out or --config");
      }
      return run_report(opts);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << e.code() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
