#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "causalembed/errors.hpp"

namespace causalembed {

enum class Role { treatment, outcome, backdoor, frontdoor, confounder };

std::string role_name(Role role);
Role role_from_name(const std::string& name);

// One role-tagged variable; vector-valued variables (images, multi-component
// covariates) occupy one logical column with a name per component.
struct LogicalColumn {
  Role role;
  std::vector<std::string> component_names;
  std::vector<double> values;  // n x dim, row-major

  std::size_t dim() const { return component_names.size(); }
};

// Observations with role-tagged columns. At most one column per role.
class ColumnarDataset {
 public:
  ColumnarDataset() = default;
  explicit ColumnarDataset(std::size_t n) : n_(n) {}

  std::size_t n() const { return n_; }
  void add_column(LogicalColumn column);
  bool has(Role role) const;
  const LogicalColumn& column(Role role) const;  // throws MissingColumn
  std::span<const double> row(Role role, std::size_t i) const;
  // Scalar outcome values; throws if the outcome column is missing or wide.
  std::span<const double> outcome() const;

  const std::vector<LogicalColumn>& columns() const { return columns_; }

  // Free-form record of how this dataset was generated, e.g.
  // "philox seed=42 stream=dataset". Empty for ingested data.
  std::string seed_provenance;

  // CSV with a `role:name` header; cells carry 17 significant digits so a
  // round trip reproduces the exact doubles.
  void save_csv(std::ostream& out) const;
  static ColumnarDataset load_csv(std::istream& in,
                                  const std::string& source = "<csv>");

 private:
  std::size_t n_ = 0;
  std::vector<LogicalColumn> columns_;
};

}  // namespace causalembed
