#include "wtsid/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wtsid {

void CsvTable::add_column(std::string name, std::vector<double> values) {
  if (!columns.empty() && values.size() != rows()) {
    throw std::invalid_argument("csv: column '" + name + "' length mismatch");
  }
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
}

std::size_t CsvTable::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw std::runtime_error("csv: missing column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& n : names) {
    if (n == name) return true;
  }
  return false;
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
  return columns[index_of(name)];
}

std::string format_double(double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
  return buf;
}

void write_csv(const CsvTable& table, const std::filesystem::path& path, int precision) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    out << (i ? "," : "") << table.names[i];
  }
  out << "\n";
  const std::size_t n = table.rows();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      out << (c ? "," : "") << format_double(table.columns[c][r], precision);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("csv: write failed: " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open: " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file: " + path.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.names.push_back(cell);
  }
  table.columns.assign(table.names.size(), {});
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= table.columns.size()) break;
      try {
        table.columns[c].push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("csv: bad number at " + path.string() + ":" +
                                 std::to_string(lineno));
      }
      ++c;
    }
    if (c != table.columns.size()) {
      throw std::runtime_error("csv: row width mismatch at " + path.string() + ":" +
                               std::to_string(lineno));
    }
  }
  return table;
}

}  // namespace wtsid
