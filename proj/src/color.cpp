#include "survmap/color.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "survmap/types.hpp"

namespace survmap::viz {

namespace {

std::uint8_t channel(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Rgb to_rgb(const Hsl& hsl) {
  const double c = (1.0 - std::abs(2.0 * hsl.l - 1.0)) * hsl.s;
  const double hp = std::fmod(std::fmod(hsl.h, 360.0) + 360.0, 360.0) / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = hsl.l - c / 2.0;
  return {channel(r + m), channel(g + m), channel(b + m)};
}

Hsl to_hsl(const Rgb& rgb) {
  const double r = rgb.r / 255.0, g = rgb.g / 255.0, b = rgb.b / 255.0;
  const double hi = std::max({r, g, b});
  const double lo = std::min({r, g, b});
  const double d = hi - lo;
  Hsl out;
  out.l = (hi + lo) / 2.0;
  if (d == 0.0) return out;
  out.s = d / (1.0 - std::abs(2.0 * out.l - 1.0));
  double h = 0.0;
  if (hi == r) {
    h = std::fmod((g - b) / d, 6.0);
  } else if (hi == g) {
    h = (b - r) / d + 2.0;
  } else {
    h = (r - g) / d + 4.0;
  }
  h *= 60.0;
  if (h < 0.0) h += 360.0;
  out.h = h;
  return out;
}

std::string to_hex(const Rgb& rgb) {
  return fmt::format("#{:02x}{:02x}{:02x}", rgb.r, rgb.g, rgb.b);
}

Rgb parse_color(std::string_view text) {
  struct Named {
    std::string_view name;
    Rgb rgb;
  };
  static constexpr Named kNamed[] = {
      {"white", {255, 255, 255}},   {"black", {0, 0, 0}},         {"lightgray", {211, 211, 211}},
      {"lightgrey", {211, 211, 211}}, {"gray", {128, 128, 128}},  {"grey", {128, 128, 128}},
  };
  for (const auto& n : kNamed) {
    if (text == n.name) return n.rgb;
  }
  if (text.size() == 7 && text[0] == '#') {
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + 1, text.data() + 7, value, 16);
    if (ec == std::errc() && ptr == text.data() + 7) {
      return {static_cast<std::uint8_t>(value >> 16), static_cast<std::uint8_t>(value >> 8),
              static_cast<std::uint8_t>(value)};
    }
  }
  throw Error("unrecognized color '" + std::string(text) + "'");
}

}  // namespace survmap::viz
