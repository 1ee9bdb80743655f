#include "fluxcirc/table.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fluxcirc/errors.hpp"

namespace fluxcirc {
namespace {

void check_text(const std::string& s, bool cell) {
  for (char c : s) {
    if (c == '\n' || c == '\r' || (cell && c == ',')) {
      throw DomainError("table: text '" + s + "' contains a separator");
    }
  }
}

Cell parse_cell(const std::string& s) {
  if (s.empty()) return std::string();
  // Subnormals set ERANGE but still parse exactly.
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() + s.size()) return v;
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

} // namespace

void ResultTable::add_meta(std::string key, std::string value) {
  check_text(key, false);
  check_text(value, false);
  meta.emplace_back(std::move(key), std::move(value));
}

void ResultTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw DomainError("table " + name + ": row has " + std::to_string(row.size()) + " cells, header has " +
                      std::to_string(columns.size()));
  }
  for (const auto& c : row) {
    if (const auto* s = std::get_if<std::string>(&c)) check_text(*s, true);
  }
  rows.push_back(std::move(row));
}

std::size_t ResultTable::column(const std::string& col) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == col) return i;
  }
  throw DomainError("table " + name + ": no column '" + col + "'");
}

double ResultTable::number(std::size_t row, const std::string& col) const {
  const Cell& c = rows.at(row).at(column(col));
  if (const auto* v = std::get_if<double>(&c)) return *v;
  throw DomainError("table " + name + ": column '" + col + "' is not numeric");
}

std::string format_number(double v, int digits) {
  if (digits < 1 || digits > 17) throw DomainError("table: digits must be in 1..17");
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string format_csv(const ResultTable& t, int digits) {
  std::string out;
  if (!t.name.empty()) out += "# table: " + t.name + "\n";
  for (const auto& [k, v] : t.meta) out += "# " + k + ": " + v + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    check_text(t.columns[i], true);
    out += (i ? "," : "") + t.columns[i];
  }
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (const auto* v = std::get_if<double>(&row[i])) {
        out += format_number(*v, digits);
      } else {
        out += std::get<std::string>(row[i]);
      }
    }
    out += "\n";
  }
  return out;
}

ResultTable parse_csv(const std::string& text) {
  ResultTable t;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') throw DomainError("csv: CRLF line ending");
    if (!header && line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ", 2);
      if (colon == std::string::npos) throw DomainError("csv: malformed metadata line '" + line + "'");
      const std::string key = line.substr(2, colon - 2);
      const std::string value = line.substr(colon + 2);
      if (key == "table" && t.name.empty() && t.meta.empty()) {
        t.name = value;
      } else {
        t.meta.emplace_back(key, value);
      }
      continue;
    }
    if (!header) {
      t.columns = split(line);
      header = true;
      continue;
    }
    std::vector<Cell> row;
    for (const auto& s : split(line)) row.push_back(parse_cell(s));
    t.add_row(std::move(row));
  }
  if (!header) throw DomainError("csv: missing column header");
  return t;
}

void emit_csv(const ResultTable& table, const std::string& path, int digits) {
  const std::string body = format_csv(table, digits);
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path + ": " + ec.message());
}

ResultTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

} // namespace fluxcirc
