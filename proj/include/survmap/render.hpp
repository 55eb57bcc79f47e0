#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "survmap/color.hpp"
#include "survmap/inference.hpp"
#include "survmap/ingest.hpp"
#include "survmap/projection.hpp"
#include "survmap/types.hpp"

namespace survmap::viz {

enum class HueClass { LargePositive, SmallPositive, SmallNegative, LargeNegative };

/// Difference: four hues, significance ignored. PValue: sign only (red or
/// blue), saturation from significance. Combined: four hues, saturation
/// from significance.
enum class RenderMode { Difference, PValue, Combined };

std::string_view to_string(HueClass h);
std::string_view to_string(RenderMode m);
RenderMode parse_render_mode(std::string_view text);

/// Fixed hue angles: blue 220, green 130, orange 30, red 0.
double hue_angle(HueClass h);
bool is_positive(HueClass h) noexcept;

/// 0.02 for vacancy rate, 0.10 persons for PPH.
double default_magnitude_break(Variable v);

/// Ties at ±break go to the Large classes; exactly zero is SmallPositive.
HueClass classify_hue(double difference, double magnitude_break);

/// Saturation per significance class; NotSignificant is always 0.
struct SaturationLadder {
  double at1 = 1.0;
  double at5 = 0.65;
  double at10 = 0.35;

  double of(SigClass c) const noexcept;
  /// Throws unless 1 >= at1 > at5 > at10 > 0.
  void validate() const;
  /// "a,b,c"
  static SaturationLadder parse(std::string_view text);
  std::string describe() const;
};

struct BoundingBox {
  double min_lon = -180.0;
  double min_lat = -90.0;
  double max_lon = 180.0;
  double max_lat = 90.0;

  /// "min_lon,min_lat,max_lon,max_lat"
  static BoundingBox parse(std::string_view text);
  bool intersects(const BoundingBox& other) const noexcept;
};

BoundingBox bounds_of(const ingest::AreaGeometry& area);

/// Keeps an area when it matches every configured criterion: its bounding
/// box intersects `bbox`, and its state code is listed in `states`.
struct RegionFilter {
  std::optional<BoundingBox> bbox;
  std::vector<std::string> states;

  bool empty() const noexcept { return !bbox && states.empty(); }
  bool admits(const ingest::AreaGeometry& area) const;
  std::string describe() const;
};

struct MapSpec {
  RenderMode mode = RenderMode::Combined;
  Variable variable = Variable::VacancyRate;
  double magnitude_break = 0.02;
  SaturationLadder ladder;
  RegionFilter region;
  AlbersParams projection;
  int width = 960;
  int height = 600;
  Rgb no_test_fill{217, 217, 217};
  Rgb not_significant_fill{255, 255, 255};
  std::string title;
  /// Extra key/value pairs recorded in the metadata comment (input digests,
  /// configuration source).
  std::vector<std::pair<std::string, std::string>> provenance;

  static MapSpec defaults(Variable v, RenderMode mode = RenderMode::Combined);
  void validate() const;
};

/// Chromatic fill for a hue at a given saturation. Lightness rises as
/// saturation falls so weaker classes fade toward white.
Rgb shade(double hue_deg, double saturation);

/// Fill for one area. `hue` is nullopt when the difference is undefined;
/// the sign of the difference is carried by the hue class.
Rgb fill_color(const MapSpec& spec, std::optional<HueClass> hue, SigClass sig);

/// Fill for a computed result under `spec`.
Rgb fill_for(const MapSpec& spec, const inference::DifferenceResult& result);

/// Standalone SVG 1.1 choropleth. One <path> per area, ordered by geoid;
/// geometries with no matching result render in the no-test fill. Throws
/// when nothing survives the region filter. Output is byte-identical for
/// identical inputs.
std::string render_map(std::span<const ingest::AreaGeometry> geometries,
                       std::span<const inference::DifferenceResult> results, const MapSpec& spec);

/// QQ plot of p-values: red identity line, plus-sign markers, axes [0,1]².
std::string render_qq(std::span<const inference::QQPoint> series, std::string_view title,
                      std::span<const std::pair<std::string, std::string>> provenance = {});

}  // namespace survmap::viz
