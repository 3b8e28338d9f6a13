#include "adamlab/table.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "adamlab/errors.hpp"

namespace adamlab {

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return quote(std::get<std::string>(c));
}

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("row has " + std::to_string(row.size()) +
                                " cells, table has " +
                                std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

std::size_t ResultTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::invalid_argument("no column '" + name + "'");
}

double ResultTable::number(std::size_t row, std::size_t col) const {
  const Cell& c = rows.at(row).at(col);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) {
    return static_cast<double>(*i);
  }
  throw std::invalid_argument("column '" + columns[col] + "' is not numeric");
}

std::string ResultTable::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  feed(command);
  feed("\n");
  for (const auto& [k, v] : config) feed(k + "=" + v + "\n");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ResultTable::to_csv() const {
  std::string s;
  s += "#! " + std::string(kArtifactVersion) + "\n";
  s += "#! command: " + command + "\n";
  s += "#! fingerprint: " + fingerprint() + "\n";
  for (const auto& [k, v] : notes) s += "#! " + k + ": " + v + "\n";
  for (const auto& [k, v] : config) s += "# " + k + " = " + v + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) s += ',';
    s += quote(columns[i]);
  }
  s += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += format_cell(row[i]);
    }
    s += '\n';
  }
  return s;
}

void emit_csv(const ResultTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  const std::string text = table.to_csv();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw io_error("write failed for " + path.string());
}

}  // namespace adamlab
