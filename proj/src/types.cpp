#include "survmap/types.hpp"

#include <algorithm>

namespace survmap {

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::VacancyRate: return "vacancy";
    case Variable::PPH: return "pph";
  }
  return "?";
}

std::string_view to_string(SigClass c) {
  switch (c) {
    case SigClass::At1Pct: return "At1Pct";
    case SigClass::At5Pct: return "At5Pct";
    case SigClass::At10Pct: return "At10Pct";
    case SigClass::NotSignificant: return "NotSignificant";
    case SigClass::NoTest: return "NoTest";
  }
  return "?";
}

Variable parse_variable(std::string_view text) {
  if (text == "vacancy" || text == "VacancyRate") return Variable::VacancyRate;
  if (text == "pph" || text == "PPH") return Variable::PPH;
  throw Error("unknown variable '" + std::string(text) + "'");
}

SigClass parse_sig_class(std::string_view text) {
  for (auto c : {SigClass::At1Pct, SigClass::At5Pct, SigClass::At10Pct,
                 SigClass::NotSignificant, SigClass::NoTest}) {
    if (text == to_string(c)) return c;
  }
  throw Error("unknown significance class '" + std::string(text) + "'");
}

bool is_area_code(std::string_view text) noexcept {
  return text.size() == 5 &&
         std::all_of(text.begin(), text.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
}

Geoid Geoid::parse(std::string_view text) {
  if (text == "US") return national();
  if (!is_area_code(text)) throw Error("invalid geoid '" + std::string(text) + "'");
  return Geoid(std::string(text));
}

Geoid Geoid::national() { return Geoid("US"); }

std::string_view Geoid::state() const noexcept {
  return std::string_view(value_).substr(0, 2);
}

}  // namespace survmap
