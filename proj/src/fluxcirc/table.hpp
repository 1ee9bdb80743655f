#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fluxcirc {

using Cell = std::variant<double, std::string>;

/// Column-named rows plus `# key: value` metadata lines.
struct ResultTable {
  std::string name;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_meta(std::string key, std::string value);
  /// Throws DomainError when the row width differs from the header.
  void add_row(std::vector<Cell> row);
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& column) const;
};

/// %.17g for numbers, so parse_csv(format_csv(t)) reproduces every double.
std::string format_number(double v, int digits = 17);
std::string format_csv(const ResultTable& table, int digits = 17);
ResultTable parse_csv(const std::string& text);

/// Writes atomically via a temporary file; IoError carries the path.
void emit_csv(const ResultTable& table, const std::string& path, int digits = 17);
ResultTable read_csv(const std::string& path);

} // namespace fluxcirc
