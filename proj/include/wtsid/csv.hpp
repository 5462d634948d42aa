#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace wtsid {

// Column-oriented numeric table with a named header row. All CSV files
// produced by the toolkit go through this writer so output is deterministic
// and readable back by the same parser.
struct CsvTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // one vector per name

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  void add_column(std::string name, std::vector<double> values);

  // Index of a named column; throws std::runtime_error if absent.
  std::size_t index_of(const std::string& name) const;
  bool has_column(const std::string& name) const;
  const std::vector<double>& column(const std::string& name) const;
};

// Writes with the requested number of significant digits (default 12,
// pass 17 for bit-exact round-trips of doubles).
void write_csv(const CsvTable& table, const std::filesystem::path& path, int precision = 12);

CsvTable read_csv(const std::filesystem::path& path);

// Shared numeric formatting used by every text emitter.
std::string format_double(double value, int precision);

}  // namespace wtsid
