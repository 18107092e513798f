#include "ksfno/app/csv.hpp"

#include <charconv>
#include <fstream>

#include "ksfno/error.hpp"

namespace ksfno::app {
namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::Io, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorCode::Io, "missing column '" + std::string(name) + "'");
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out = open_for_write(path);
  auto write_row = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
  finish(out, path);
}

CsvTable read_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::Io, path.string() + " has no header");
  CsvTable table;
  table.header = split_line(lines[0]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    table.rows.push_back(split_line(lines[i]));
    if (table.rows.back().size() != table.header.size()) {
      throw Error(ErrorCode::Io, path.string() + ":" + std::to_string(i + 1) + " has the wrong number of cells");
    }
  }
  return table;
}

void write_grid(const std::filesystem::path& path, std::size_t n, std::span<const double> values) {
  if (values.size() != n * n) throw Error(ErrorCode::ShapeMismatch, "grid needs n*n values");
  std::ofstream out = open_for_write(path);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out << (j ? "," : "") << format_double(values[i * n + j]);
    out << '\n';
  }
  finish(out, path);
}

std::vector<double> read_grid(const std::filesystem::path& path, std::size_t& n) {
  const std::vector<std::string> lines = read_lines(path);
  n = lines.size();
  std::vector<double> values;
  values.reserve(n * n);
  for (const std::string& line : lines) {
    const auto cells = split_line(line);
    if (cells.size() != n) throw Error(ErrorCode::Io, path.string() + " is not a square grid");
    for (const auto& c : cells) values.push_back(parse_double(c));
  }
  return values;
}

}  // namespace ksfno::app
