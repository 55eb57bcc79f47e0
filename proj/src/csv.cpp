#include "survmap/csv.hpp"

#include <charconv>
#include <cmath>

#include "survmap/types.hpp"

namespace survmap::csv {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

namespace {

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace

Reader::Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {
  std::string first;
  if (!std::getline(in_, first)) throw Error(source_ + ": missing header line");
  strip_cr(first);
  // Tolerate a UTF-8 byte order mark.
  if (first.rfind("\xEF\xBB\xBF", 0) == 0) first.erase(0, 3);
  for (auto f : split(first)) header_.emplace_back(f);
}

bool Reader::next() {
  while (std::getline(in_, buffer_)) {
    ++line_;
    strip_cr(buffer_);
    if (buffer_.find_first_not_of(" \t") == std::string::npos) continue;
    ++row_;
    fields_ = split(buffer_);
    if (check_width_ && fields_.size() != header_.size()) {
      fail("expected " + std::to_string(header_.size()) + " fields, found " +
           std::to_string(fields_.size()));
    }
    return true;
  }
  return false;
}

std::string Reader::where() const {
  return source_ + ": row " + std::to_string(row_) + " (line " + std::to_string(line_) + ")";
}

void Reader::fail(std::string_view message) const {
  throw Error(where() + ": " + std::string(message));
}

std::size_t Reader::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw Error(source_ + ": header lacks column '" + std::string(name) + "'");
}

double Reader::real(std::size_t col) const {
  auto text = fields_.at(col);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    fail("column '" + header_[col] + "': not a finite number: '" + std::string(text) + "'");
  }
  return value;
}

long long Reader::integer(std::size_t col) const {
  auto text = fields_.at(col);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail("column '" + header_[col] + "': not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::optional<double> Reader::optional_real(std::size_t col) const {
  auto text = fields_.at(col);
  if (text.empty() || text == "NA") return std::nullopt;
  return real(col);
}

std::string format_real(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string format_real(const std::optional<double>& value) {
  return value ? format_real(*value) : std::string("NA");
}

}  // namespace survmap::csv
