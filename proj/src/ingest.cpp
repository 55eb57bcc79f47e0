#include "survmap/ingest.hpp"

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "survmap/csv.hpp"

namespace survmap::ingest {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open for reading");
  return in;
}

}  // namespace

std::string slurp(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<UnitRecord> read_microdata(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_microdata(in, path.string());
}

std::vector<UnitRecord> parse_microdata(std::istream& in, std::string_view source) {
  csv::Reader reader(in, std::string(source));
  const auto& header = reader.header();
  static constexpr std::string_view kFixed[] = {"geoid", "status", "persons", "wgt"};
  if (header.size() < 5) {
    throw Error(reader.source() + ": header must be geoid,status,persons,wgt,repwgt1..repwgtR");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (header[i] != kFixed[i]) {
      throw Error(reader.source() + ": header column " + std::to_string(i + 1) + " must be '" +
                  std::string(kFixed[i]) + "', found '" + header[i] + "'");
    }
  }
  const std::size_t replicates = header.size() - 4;
  for (std::size_t r = 0; r < replicates; ++r) {
    if (header[4 + r] != "repwgt" + std::to_string(r + 1)) {
      throw Error(reader.source() + ": expected replicate column 'repwgt" + std::to_string(r + 1) +
                  "', found '" + header[4 + r] + "'");
    }
  }

  std::vector<UnitRecord> records;
  reader.check_width(false);
  while (reader.next()) {
    if (reader.fields().size() < 4) reader.fail("truncated row");
    if (reader.fields().size() != header.size()) {
      reader.fail("inconsistent replicate count: " + std::to_string(reader.fields().size() - 4) +
                  " replicate weights, header declares " + std::to_string(replicates));
    }
    const auto& f = reader.fields();
    UnitRecord rec{Geoid::national(), Occupancy::Occupied, 0, 0.0, {}};
    if (!is_area_code(f[0])) reader.fail("geoid must be 5 digits, found '" + std::string(f[0]) + "'");
    rec.geoid = Geoid::parse(f[0]);
    if (f[1] == "O") {
      rec.status = Occupancy::Occupied;
    } else if (f[1] == "V") {
      rec.status = Occupancy::Vacant;
    } else {
      reader.fail("status must be O or V, found '" + std::string(f[1]) + "'");
    }
    auto persons = reader.integer(2);
    if (persons < 0) reader.fail("persons must be >= 0");
    if (rec.status == Occupancy::Vacant && persons != 0) reader.fail("vacant unit must have persons = 0");
    if (rec.status == Occupancy::Occupied && persons == 0) reader.fail("occupied unit has persons = 0");
    rec.persons = static_cast<int>(persons);
    rec.weight = reader.real(3);
    if (!(rec.weight > 0.0)) reader.fail("full-sample weight must be > 0");
    rec.rep_weights.reserve(replicates);
    for (std::size_t r = 0; r < replicates; ++r) rec.rep_weights.push_back(reader.real(4 + r));
    records.push_back(std::move(rec));
  }
  return records;
}

void write_microdata(std::ostream& out, std::span<const UnitRecord> records) {
  const std::size_t replicates = records.empty() ? 80 : records.front().rep_weights.size();
  out << "geoid,status,persons,wgt";
  for (std::size_t r = 1; r <= replicates; ++r) out << ",repwgt" << r;
  out << '\n';
  std::string line;
  for (const auto& rec : records) {
    if (rec.rep_weights.size() != replicates) {
      throw Error("write_microdata: record for " + rec.geoid.str() + " has " +
                  std::to_string(rec.rep_weights.size()) + " replicate weights, expected " +
                  std::to_string(replicates));
    }
    line.clear();
    line += rec.geoid.str();
    line += rec.status == Occupancy::Vacant ? ",V," : ",O,";
    line += std::to_string(rec.persons);
    line += ',';
    line += csv::format_real(rec.weight);
    for (double w : rec.rep_weights) {
      line += ',';
      line += csv::format_real(w);
    }
    line += '\n';
    out << line;
  }
}

Baseline read_baseline(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_baseline(in, path.string());
}

Baseline parse_baseline(std::istream& in, std::string_view source) {
  csv::Reader reader(in, std::string(source));
  const auto geoid_col = reader.column("geoid");
  const auto rate_col = reader.column("vacancy_rate");
  const auto pph_col = reader.column("pph");
  Baseline out;
  while (reader.next()) {
    auto text = reader.fields()[geoid_col];
    if (text != "US" && !is_area_code(text)) {
      reader.fail("geoid must be 5 digits or US, found '" + std::string(text) + "'");
    }
    BaselineRecord rec{Geoid::parse(text), reader.real(rate_col), reader.real(pph_col)};
    if (rec.vacancy_rate < 0.0 || rec.vacancy_rate > 1.0) {
      reader.fail("vacancy_rate " + csv::format_real(rec.vacancy_rate) + " outside [0,1]");
    }
    if (!(rec.pph > 0.0)) reader.fail("pph must be > 0");
    auto geoid = rec.geoid;
    if (!out.emplace(geoid, std::move(rec)).second) reader.fail("duplicate geoid " + geoid.str());
  }
  return out;
}

void write_baseline(std::ostream& out, const Baseline& baseline) {
  out << "geoid,vacancy_rate,pph\n";
  for (const auto& [geoid, rec] : baseline) {
    out << geoid.str() << ',' << csv::format_real(rec.vacancy_rate) << ','
        << csv::format_real(rec.pph) << '\n';
  }
}

namespace {

Ring parse_ring(const nlohmann::json& coords, const std::string& where) {
  if (!coords.is_array() || coords.empty()) throw Error(where + ": empty or malformed ring");
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) {
      throw Error(where + ": malformed coordinate");
    }
    LonLat p{pt[0].get<double>(), pt[1].get<double>()};
    if (p.lon < -180.0 || p.lon > 180.0 || p.lat < -90.0 || p.lat > 90.0) {
      throw Error(where + ": coordinate outside [-180,180]x[-90,90]");
    }
    ring.push_back(p);
  }
  return ring;
}

Polygon parse_polygon(const nlohmann::json& rings, const std::string& where) {
  if (!rings.is_array() || rings.empty()) throw Error(where + ": polygon has no rings");
  Polygon poly;
  for (const auto& r : rings) poly.push_back(parse_ring(r, where));
  return poly;
}

}  // namespace

std::vector<AreaGeometry> read_geometry(const std::filesystem::path& path) {
  return parse_geometry(slurp(path), path.string());
}

std::vector<AreaGeometry> parse_geometry(std::string_view text, std::string_view source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string(source) + ": unparseable GeoJSON: " + e.what());
  }
  return geometry_from_json(doc, source);
}

std::vector<AreaGeometry> geometry_from_json(const nlohmann::json& doc, std::string_view source) {
  const std::string src(source);
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw Error(src + ": not a GeoJSON FeatureCollection");
  }
  std::vector<AreaGeometry> out;
  const auto& features = doc["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& feat = features[i];
    const std::string where = src + ": feature " + std::to_string(i);
    const auto props = feat.find("properties");
    if (props == feat.end() || !props->is_object() || !props->contains("GEOID")) {
      throw Error(where + ": missing GEOID property");
    }
    const auto& gid = (*props)["GEOID"];
    if (!gid.is_string() || !is_area_code(gid.get<std::string>())) {
      throw Error(where + ": GEOID must be a 5-digit string");
    }
    AreaGeometry area{Geoid::parse(gid.get<std::string>()), {}, {}};
    if (auto name = props->find("NAME"); name != props->end() && name->is_string()) {
      area.name = name->get<std::string>();
    } else {
      area.name = area.geoid.str();
    }
    const auto geom = feat.find("geometry");
    if (geom == feat.end() || !geom->is_object()) throw Error(where + ": missing geometry");
    const auto type = geom->value("type", "");
    const auto& coords = (*geom)["coordinates"];
    if (type == "Polygon") {
      area.polygons.push_back(parse_polygon(coords, where));
    } else if (type == "MultiPolygon") {
      if (!coords.is_array() || coords.empty()) throw Error(where + ": empty MultiPolygon");
      for (const auto& p : coords) area.polygons.push_back(parse_polygon(p, where));
    } else {
      throw Error(where + ": geometry type '" + type + "' is not polygonal");
    }
    out.push_back(std::move(area));
  }
  return out;
}

nlohmann::json to_geojson(std::span<const AreaGeometry> areas) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& area : areas) {
    nlohmann::json polys = nlohmann::json::array();
    for (const auto& poly : area.polygons) {
      nlohmann::json rings = nlohmann::json::array();
      for (const auto& ring : poly) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : ring) pts.push_back({p.lon, p.lat});
        rings.push_back(std::move(pts));
      }
      polys.push_back(std::move(rings));
    }
    nlohmann::json geometry;
    if (polys.size() == 1) {
      geometry = {{"type", "Polygon"}, {"coordinates", polys[0]}};
    } else {
      geometry = {{"type", "MultiPolygon"}, {"coordinates", polys}};
    }
    features.push_back({{"type", "Feature"},
                        {"properties", {{"GEOID", area.geoid.str()}, {"NAME", area.name}}},
                        {"geometry", std::move(geometry)}});
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

}  // namespace survmap::ingest
