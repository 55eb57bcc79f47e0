#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "survmap/types.hpp"

namespace survmap::ingest {

/// One surveyed housing unit.
struct UnitRecord {
  Geoid geoid;
  Occupancy status = Occupancy::Occupied;
  int persons = 0;
  double weight = 0.0;
  std::vector<double> rep_weights;

  friend bool operator==(const UnitRecord&, const UnitRecord&) = default;
};

/// Fixed (non-sampled) comparison values for one area.
struct BaselineRecord {
  Geoid geoid;
  double vacancy_rate = 0.0;
  double pph = 0.0;

  double value(Variable v) const noexcept { return v == Variable::VacancyRate ? vacancy_rate : pph; }
  friend bool operator==(const BaselineRecord&, const BaselineRecord&) = default;
};

/// Keyed by geoid. A row with geoid "US" carries the national baseline.
using Baseline = std::map<Geoid, BaselineRecord>;

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};
using Ring = std::vector<LonLat>;
/// First ring is the exterior, the rest are holes. Winding is not checked.
using Polygon = std::vector<Ring>;

struct AreaGeometry {
  Geoid geoid;
  std::string name;
  std::vector<Polygon> polygons;
};

// Microdata: geoid,status,persons,wgt,repwgt1..repwgtR with status in {O,V}.
std::vector<UnitRecord> read_microdata(const std::filesystem::path& path);
std::vector<UnitRecord> parse_microdata(std::istream& in, std::string_view source);
/// Writes at full precision; `parse_microdata` restores the records exactly.
/// All records must share one replicate count.
void write_microdata(std::ostream& out, std::span<const UnitRecord> records);

// Baseline: geoid,vacancy_rate,pph.
Baseline read_baseline(const std::filesystem::path& path);
Baseline parse_baseline(std::istream& in, std::string_view source);
void write_baseline(std::ostream& out, const Baseline& baseline);

// Geometry: GeoJSON FeatureCollection with a GEOID property per feature.
std::vector<AreaGeometry> read_geometry(const std::filesystem::path& path);
std::vector<AreaGeometry> parse_geometry(std::string_view text, std::string_view source);
std::vector<AreaGeometry> geometry_from_json(const nlohmann::json& doc, std::string_view source);
nlohmann::json to_geojson(std::span<const AreaGeometry> areas);

/// Whole file as a string; throws naming the path when unreadable.
std::string slurp(const std::filesystem::path& path);

}  // namespace survmap::ingest
