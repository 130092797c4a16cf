#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rggfpp {

/// Shortest round-trip decimal form ('.' separator, locale independent).
std::string format_double(double x);

double parse_double(std::string_view s);

/// Splits one RFC-4180 record. Quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(std::string_view line);

/// Minimal RFC-4180 writer with a fixed header.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header);
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);

  CsvWriter& field(double x);
  CsvWriter& field(std::int64_t x);
  CsvWriter& field(std::uint64_t x);
  CsvWriter& field(int x) { return field(static_cast<std::int64_t>(x)); }
  CsvWriter& field(std::string_view s);
  CsvWriter& field(const char* s) { return field(std::string_view(s)); }
  /// Ends the current row. Throws std::logic_error on a width mismatch.
  void end_row();

  std::size_t rows() const { return rows_; }

 private:
  void separator();

  std::ostream& out_;
  std::size_t width_;
  std::size_t column_ = 0;
  std::size_t rows_ = 0;
};

}  // namespace rggfpp
