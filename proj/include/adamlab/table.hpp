#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace adamlab {

inline constexpr const char* kArtifactVersion = "adamlab 1.0.0";

using Cell = std::variant<double, std::int64_t, std::string>;

/// Doubles with 17 significant digits (round-trip safe).
std::string format_double(double x);
std::string format_cell(const Cell& c);

struct ResultTable {
  std::string command;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// "# key = value" lines, in order.
  std::vector<std::pair<std::string, std::string>> config;
  /// Extra "#! name: value" lines (computed references and the like).
  std::vector<std::pair<std::string, std::string>> notes;

  void add_row(std::vector<Cell> row);  // throws on a width mismatch
  std::size_t column_index(const std::string& name) const;
  /// Numeric value of a cell (doubles and integers).
  double number(std::size_t row, std::size_t col) const;

  /// FNV-1a 64 of the config lines, as 16 hex digits.
  std::string fingerprint() const;
  /// Full file text: provenance block, header line, rows.
  std::string to_csv() const;
};

/// Writes to_csv() to path; throws io_error naming the path.
void emit_csv(const ResultTable& table, const std::filesystem::path& path);

}  // namespace adamlab
