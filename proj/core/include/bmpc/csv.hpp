#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace bmpc::csv {

/// Shortest text that reads back to the same double: 17 significant digits.
std::string format(double v);

/// Joins fields with commas (no quoting; fields must not contain commas).
std::string join(const std::vector<std::string>& fields);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws kParse if absent.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
};

Table read(std::istream& in);
Table read_file(const std::filesystem::path& path);

}  // namespace bmpc::csv
