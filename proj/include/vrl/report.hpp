#pragma once

#include "vrl/tensor.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace vrl {

/// Shortest decimal representation that round-trips ("." separator,
/// locale independent).
std::string format_number(double v);

/// RFC-4180 style CSV: fields containing separators, quotes or newlines are
/// quoted; rows end in "\n".
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> fields);
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  /// Lexicographic row order, for order-independent aggregation.
  void sort_rows();

  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string csv_escape(std::string_view field);

/// Parses a CSV document with a mandatory header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace vrl
