#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace survmap {

/// Raised for any malformed input, invalid configuration or violated
/// precondition. The message always names the offending file, row or geoid.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variable { VacancyRate, PPH };

enum class Occupancy { Occupied, Vacant };

/// Minimum conventional two-sided significance level reached by an area.
/// NoTest marks areas whose standard error is zero or undefined.
enum class SigClass { At1Pct, At5Pct, At10Pct, NotSignificant, NoTest };

std::string_view to_string(Variable v);
std::string_view to_string(SigClass c);

/// Accepts "vacancy"/"pph" as well as the enumerator spellings.
Variable parse_variable(std::string_view text);
SigClass parse_sig_class(std::string_view text);

/// Five-digit state+county FIPS code, or the national sentinel "US".
class Geoid {
 public:
  static Geoid parse(std::string_view text);
  static Geoid national();

  const std::string& str() const noexcept { return value_; }
  std::string_view state() const noexcept;
  bool is_national() const noexcept { return value_ == "US"; }

  friend auto operator<=>(const Geoid&, const Geoid&) = default;

 private:
  explicit Geoid(std::string value) : value_(std::move(value)) {}
  std::string value_;
};

/// True iff text is exactly five ASCII digits.
bool is_area_code(std::string_view text) noexcept;

}  // namespace survmap
