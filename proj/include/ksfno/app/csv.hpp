#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ksfno::app {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);
/// Throws Io on anything that is not a complete decimal number.
double parse_double(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of the named column; throws Io when absent.
  std::size_t column(std::string_view name) const;
};

/// Plain comma-separated files, no quoting: cells never contain commas.
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// n rows of n comma-separated values, no header.
void write_grid(const std::filesystem::path& path, std::size_t n, std::span<const double> values);
/// Returns the values row-major; `n` receives the row count.
std::vector<double> read_grid(const std::filesystem::path& path, std::size_t& n);

}  // namespace ksfno::app
