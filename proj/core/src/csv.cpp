#include "rggfpp/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace rggfpp {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

CsvWriter::CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header)
    : out_(out), width_(header.size()) {
  for (auto h : header) field(h);
  end_row();
  rows_ = 0;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), width_(header.size()) {
  for (const auto& h : header) field(std::string_view(h));
  end_row();
  rows_ = 0;
}

void CsvWriter::separator() {
  if (column_ > 0) out_ << ',';
  ++column_;
}

CsvWriter& CsvWriter::field(double x) {
  separator();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::field(std::int64_t x) {
  separator();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::field(std::uint64_t x) {
  separator();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::field(std::string_view s) {
  separator();
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
    out_ << s;
  } else {
    out_ << '"';
    for (char c : s) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }
  return *this;
}

void CsvWriter::end_row() {
  if (column_ != width_) throw std::logic_error("CSV row width does not match header");
  out_ << "\r\n";
  column_ = 0;
  ++rows_;
}

}  // namespace rggfpp
