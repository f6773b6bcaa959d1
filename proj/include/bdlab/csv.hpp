#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bdlab {

// Shortest round-trip decimal form; infinities as "-inf"/"+inf", NaN as "nan".
std::string format_double(double x);
double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws std::runtime_error when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace bdlab
