#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace survmap::viz {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Hue in degrees [0,360), saturation and lightness in [0,1].
struct Hsl {
  double h = 0.0;
  double s = 0.0;
  double l = 0.0;
};

Rgb to_rgb(const Hsl& hsl);
Hsl to_hsl(const Rgb& rgb);

/// "#rrggbb", lower case.
std::string to_hex(const Rgb& rgb);
/// Accepts "#rrggbb" or a small set of CSS names (white, black, lightgray, ...).
Rgb parse_color(std::string_view text);

}  // namespace survmap::viz
