#include "causalembed/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "causalembed/errors.hpp"
#include "causalembed/serialize.hpp"

namespace causalembed::harness {

double ReportRow::squared_error() const {
  if (!has_truth) return std::numeric_limits<double>::quiet_NaN();
  const double d = estimate - truth;
  return d * d;
}

double ReportRow::abs_error() const {
  if (!has_truth) return std::numeric_limits<double>::quiet_NaN();
  return std::fabs(estimate - truth);
}

namespace {

constexpr const char* kReplicationHeader =
    "replication,parameter,adjustment,a,conditioning,estimate,truth,"
    "truth_std_error,squared_error,abs_error,n";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return n % 2 ? values[n / 2]
               : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

double standard_error(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(n - 1) /
                   static_cast<double>(n));
}

}  // namespace

void write_replication_csv(std::ostream& out,
                           const std::vector<ReportRow>& rows) {
  out << kReplicationHeader << '\n';
  for (const auto& row : rows) {
    out << row.replication << ',' << row.parameter << ','
        << row.adjustment << ',' << row.a_label << ',' << row.conditioning
        << ',' << format_double(row.estimate) << ',';
    if (row.has_truth) {
      out << format_double(row.truth) << ','
          << format_double(row.truth_std_error) << ','
          << format_double(row.squared_error()) << ','
          << format_double(row.abs_error());
    } else {
      out << ",,,";
    }
    out << ',' << row.n << '\n';
  }
}

std::vector<ReportRow> read_replication_csv(std::istream& in,
                                            const std::string& source) {
  LineReader reader(in, source);
  std::string header;
  if (!reader.next_line(header) || header != kReplicationHeader) {
    throw DataFormatError(source + ": not a replication report");
  }
  std::vector<ReportRow> rows;
  std::string line;
  while (reader.next_line(line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 11) {
      throw DataFormatError(source + ": report row has " +
                            std::to_string(cells.size()) + " cells");
    }
    ReportRow row;
    row.replication = std::stoul(cells[0]);
    row.parameter = cells[1];
    row.adjustment = cells[2];
    row.a_label = cells[3];
    row.conditioning = cells[4];
    row.estimate = parse_double(cells[5], source);
    row.has_truth = !cells[6].empty();
    if (row.has_truth) {
      row.truth = parse_double(cells[6], source);
      row.truth_std_error = parse_double(cells[7], source);
    }
    row.n = std::stoul(cells[10]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_estimates_csv(std::ostream& out,
                         const std::vector<ReportRow>& rows) {
  out << "parameter,adjustment,a,conditioning,value,n\n";
  for (const auto& row : rows) {
    out << row.parameter << ',' << row.adjustment << ',' << row.a_label
        << ',' << row.conditioning << ',' << format_double(row.estimate)
        << ',' << row.n << '\n';
  }
}

std::vector<AggregateRow> aggregate_rows(const std::vector<ReportRow>& rows) {
  // Group by query identity, preserving first-seen order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ReportRow*>> groups;
  for (const auto& row : rows) {
    const std::string key = row.parameter + '|' + row.adjustment + '|' +
                            row.a_label + '|' + row.conditioning;
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&row);
  }

  std::vector<AggregateRow> out;
  std::vector<double> all_sq;
  std::vector<double> all_abs;
  for (const auto& key : order) {
    const auto& group = groups[key];
    AggregateRow agg;
    agg.parameter = group.front()->parameter;
    agg.adjustment = group.front()->adjustment;
    agg.a_label = group.front()->a_label;
    agg.conditioning = group.front()->conditioning;
    agg.replications = group.size();
    std::vector<double> estimates, truths, sq, ab;
    for (const ReportRow* row : group) {
      estimates.push_back(row->estimate);
      if (row->has_truth) {
        truths.push_back(row->truth);
        sq.push_back(row->squared_error());
        ab.push_back(row->abs_error());
      }
    }
    agg.mean_estimate = mean(estimates);
    agg.has_truth = !truths.empty();
    if (agg.has_truth) {
      agg.mean_truth = mean(truths);
      agg.mean_squared_error = mean(sq);
      agg.median_squared_error = median(sq);
      agg.se_squared_error = standard_error(sq);
      agg.mean_abs_error = mean(ab);
      agg.median_abs_error = median(ab);
      agg.se_abs_error = standard_error(ab);
      all_sq.insert(all_sq.end(), sq.begin(), sq.end());
      all_abs.insert(all_abs.end(), ab.begin(), ab.end());
    }
    out.push_back(std::move(agg));
  }
  if (!all_sq.empty()) {
    AggregateRow overall;
    overall.parameter = "overall";
    overall.adjustment = "";
    overall.a_label = "";
    overall.conditioning = "";
    overall.replications = all_sq.size();
    overall.has_truth = true;
    overall.mean_squared_error = mean(all_sq);
    overall.median_squared_error = median(all_sq);
    overall.se_squared_error = standard_error(all_sq);
    overall.mean_abs_error = mean(all_abs);
    overall.median_abs_error = median(all_abs);
    overall.se_abs_error = standard_error(all_abs);
    out.push_back(std::move(overall));
  }
  return out;
}

void write_aggregate_csv(std::ostream& out,
                         const std::vector<AggregateRow>& rows) {
  out << "parameter,adjustment,a,conditioning,replications,mean_estimate,"
         "mean_truth,mean_squared_error,median_squared_error,"
         "se_squared_error,mean_abs_error,median_abs_error,se_abs_error\n";
  for (const auto& row : rows) {
    out << row.parameter << ',' << row.adjustment << ',' << row.a_label
        << ',' << row.conditioning << ',' << row.replications << ','
        << format_double(row.mean_estimate) << ',';
    if (row.has_truth) {
      out << format_double(row.mean_truth) << ','
          << format_double(row.mean_squared_error) << ','
          << format_double(row.median_squared_error) << ','
          << format_double(row.se_squared_error) << ','
          << format_double(row.mean_abs_error) << ','
          << format_double(row.median_abs_error) << ','
          << format_double(row.se_abs_error);
    } else {
      out << ",,,,,,";
    }
    out << '\n';
  }
}

}  // namespace causalembed::harness
