#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace causalembed::harness {

// One evaluated query. Errors are always derived from (estimate, truth) on
// access, never stored separately.
struct ReportRow {
  std::size_t replication = 0;
  std::string parameter;     // ATE | ATT | CATE
  std::string adjustment;    // backdoor | frontdoor
  std::string a_label;       // treatment point, e.g. "posx=0.3;posy=0.7"
  std::string conditioning;  // "", "aprime=...", or "o=..."
  double estimate = 0.0;
  bool has_truth = false;
  double truth = 0.0;
  double truth_std_error = 0.0;
  std::size_t n = 0;

  double squared_error() const;
  double abs_error() const;
};

void write_replication_csv(std::ostream& out,
                           const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_replication_csv(std::istream& in,
                                            const std::string& source);

// Estimates-only rows, the `estimate` subcommand output:
// parameter,adjustment,a,conditioning,value,n.
void write_estimates_csv(std::ostream& out,
                         const std::vector<ReportRow>& rows);

// Per-query statistics across replications plus an `overall` row.
struct AggregateRow {
  std::string parameter;
  std::string adjustment;
  std::string a_label;
  std::string conditioning;
  std::size_t replications = 0;
  double mean_estimate = 0.0;
  bool has_truth = false;
  double mean_truth = 0.0;
  double mean_squared_error = 0.0;
  double median_squared_error = 0.0;
  double se_squared_error = 0.0;
  double mean_abs_error = 0.0;
  double median_abs_error = 0.0;
  double se_abs_error = 0.0;
};

std::vector<AggregateRow> aggregate_rows(const std::vector<ReportRow>& rows);
void write_aggregate_csv(std::ostream& out,
                         const std::vector<AggregateRow>& rows);

}  // namespace causalembed::harness
