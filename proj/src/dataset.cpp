#include "causalembed/dataset.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "causalembed/serialize.hpp"

namespace causalembed {

std::string role_name(Role role) {
  switch (role) {
    case Role::treatment: return "treatment";
    case Role::outcome: return "outcome";
    case Role::backdoor: return "backdoor";
    case Role::frontdoor: return "frontdoor";
    case Role::confounder: return "confounder";
  }
  return "unknown";
}

Role role_from_name(const std::string& name) {
  if (name == "treatment") return Role::treatment;
  if (name == "outcome") return Role::outcome;
  if (name == "backdoor") return Role::backdoor;
  if (name == "frontdoor") return Role::frontdoor;
  if (name == "confounder") return Role::confounder;
  throw DataFormatError("unknown role '" + name + "'");
}

void ColumnarDataset::add_column(LogicalColumn column) {
  if (column.component_names.empty()) {
    throw InvalidArgument("column must have at least one component");
  }
  if (column.values.size() != n_ * column.dim()) {
    throw DimensionMismatch(
        "column " + role_name(column.role) + " has " +
        std::to_string(column.values.size()) + " values, expected " +
        std::to_string(n_ * column.dim()));
  }
  if (has(column.role)) {
    throw InvalidArgument("duplicate column for role " +
                          role_name(column.role));
  }
  columns_.push_back(std::move(column));
}

bool ColumnarDataset::has(Role role) const {
  for (const auto& c : columns_) {
    if (c.role == role) return true;
  }
  return false;
}

const LogicalColumn& ColumnarDataset::column(Role role) const {
  for (const auto& c : columns_) {
    if (c.role == role) return c;
  }
  throw MissingColumn("dataset has no column with role " + role_name(role));
}

std::span<const double> ColumnarDataset::row(Role role, std::size_t i) const {
  const LogicalColumn& c = column(role);
  return {c.values.data() + i * c.dim(), c.dim()};
}

std::span<const double> ColumnarDataset::outcome() const {
  const LogicalColumn& c = column(Role::outcome);
  if (c.dim() != 1) {
    throw DimensionMismatch("outcome column must be scalar, has dim " +
                            std::to_string(c.dim()));
  }
  return {c.values.data(), n_};
}

void ColumnarDataset::save_csv(std::ostream& out) const {
  bool first = true;
  for (const auto& c : columns_) {
    for (const auto& name : c.component_names) {
      if (!first) out << ',';
      out << role_name(c.role) << ':' << name;
      first = false;
    }
  }
  out << '\n';
  for (std::size_t i = 0; i < n_; ++i) {
    first = true;
    for (const auto& c : columns_) {
      for (std::size_t j = 0; j < c.dim(); ++j) {
        if (!first) out << ',';
        out << format_double(c.values[i * c.dim() + j]);
        first = false;
      }
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

ColumnarDataset ColumnarDataset::load_csv(std::istream& in,
                                          const std::string& source) {
  LineReader reader(in, source);
  std::string header;
  if (!reader.next_line(header)) {
    throw DataFormatError(source + ": empty file");
  }
  const auto cells = split_csv_line(header);
  if (cells.empty()) {
    throw DataFormatError(source + ": empty header row");
  }

  // Consecutive header cells with the same role form one logical column.
  struct PendingColumn {
    Role role;
    std::vector<std::string> names;
    std::size_t first_cell;
  };
  std::vector<PendingColumn> pending;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto sep = cells[i].find(':');
    if (sep == std::string::npos) {
      throw DataFormatError(source + ": header cell '" + cells[i] +
                            "' is not role:name");
    }
    const Role role = role_from_name(cells[i].substr(0, sep));
    const std::string name = cells[i].substr(sep + 1);
    if (name.empty()) {
      throw DataFormatError(source + ": header cell '" + cells[i] +
                            "' has an empty name");
    }
    if (!pending.empty() && pending.back().role == role) {
      pending.back().names.push_back(name);
    } else {
      pending.push_back({role, {name}, i});
    }
  }

  std::vector<std::vector<double>> column_values(pending.size());
  std::string line;
  std::size_t rows = 0;
  while (reader.next_line(line)) {
    if (line.empty()) continue;
    const auto row_cells = split_csv_line(line);
    if (row_cells.size() != cells.size()) {
      throw DataFormatError(source + ": row " + std::to_string(rows + 1) +
                            " has " + std::to_string(row_cells.size()) +
                            " cells, header has " +
                            std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < pending.size(); ++c) {
      for (std::size_t j = 0; j < pending[c].names.size(); ++j) {
        const std::string& cell = row_cells[pending[c].first_cell + j];
        const double value = parse_double(
            cell, source + ": row " + std::to_string(rows + 1) + " column " +
                      role_name(pending[c].role) + ":" + pending[c].names[j]);
        if (!std::isfinite(value)) {
          throw DataFormatError(source + ": non-finite value at row " +
                                std::to_string(rows + 1) + " column " +
                                role_name(pending[c].role) + ":" +
                                pending[c].names[j]);
        }
        column_values[c].push_back(value);
      }
    }
    ++rows;
  }

  ColumnarDataset data(rows);
  for (std::size_t c = 0; c < pending.size(); ++c) {
    LogicalColumn col;
    col.role = pending[c].role;
    col.component_names = pending[c].names;
    col.values = std::move(column_values[c]);
    data.add_column(std::move(col));
  }
  return data;
}

}  // namespace causalembed
