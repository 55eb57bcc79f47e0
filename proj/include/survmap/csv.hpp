#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace survmap::csv {

/// Splits one comma-delimited line. No quoting: every field this project
/// reads or writes is numeric or a fixed code.
std::vector<std::string_view> split(std::string_view line);

/// Line-oriented reader that remembers the header and the current position
/// so errors can name both the data row and the physical line.
class Reader {
 public:
  Reader(std::istream& in, std::string source);

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::string& source() const noexcept { return source_; }

  /// Advances to the next non-blank data row. Returns false at end of input.
  bool next();
  /// When enabled (the default) next() rejects rows whose width differs from the header.
  void check_width(bool enabled) noexcept { check_width_ = enabled; }
  const std::vector<std::string_view>& fields() const noexcept { return fields_; }
  std::size_t row() const noexcept { return row_; }
  std::size_t line() const noexcept { return line_; }

  /// "<source>: row N (line M)"
  std::string where() const;
  [[noreturn]] void fail(std::string_view message) const;

  /// Index of a named header column; throws if absent.
  std::size_t column(std::string_view name) const;

  double real(std::size_t col) const;
  long long integer(std::size_t col) const;
  /// Empty field or "NA" reads as nullopt.
  std::optional<double> optional_real(std::size_t col) const;

 private:
  std::istream& in_;
  std::string source_;
  std::vector<std::string> header_;
  std::string buffer_;
  std::vector<std::string_view> fields_;
  std::size_t row_ = 0;
  std::size_t line_ = 1;
  bool check_width_ = true;
};

/// Shortest text that parses back to the identical double.
std::string format_real(double value);
/// Missing values are written as "NA".
std::string format_real(const std::optional<double>& value);

}  // namespace survmap::csv
