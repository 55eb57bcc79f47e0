#include "survmap/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "survmap/csv.hpp"

namespace survmap::viz {

std::string_view to_string(HueClass h) {
  switch (h) {
    case HueClass::LargePositive: return "LargePositive";
    case HueClass::SmallPositive: return "SmallPositive";
    case HueClass::SmallNegative: return "SmallNegative";
    case HueClass::LargeNegative: return "LargeNegative";
  }
  return "?";
}

std::string_view to_string(RenderMode m) {
  switch (m) {
    case RenderMode::Difference: return "difference";
    case RenderMode::PValue: return "pvalue";
    case RenderMode::Combined: return "combined";
  }
  return "?";
}

RenderMode parse_render_mode(std::string_view text) {
  if (text == "difference") return RenderMode::Difference;
  if (text == "pvalue") return RenderMode::PValue;
  if (text == "combined") return RenderMode::Combined;
  throw Error("unknown render mode '" + std::string(text) + "'");
}

double hue_angle(HueClass h) {
  switch (h) {
    case HueClass::LargePositive: return 220.0;
    case HueClass::SmallPositive: return 130.0;
    case HueClass::SmallNegative: return 30.0;
    case HueClass::LargeNegative: return 0.0;
  }
  return 0.0;
}

bool is_positive(HueClass h) noexcept {
  return h == HueClass::LargePositive || h == HueClass::SmallPositive;
}

double default_magnitude_break(Variable v) { return v == Variable::VacancyRate ? 0.02 : 0.10; }

HueClass classify_hue(double difference, double magnitude_break) {
  if (!(magnitude_break > 0.0)) throw Error("magnitude break must be > 0");
  if (difference >= magnitude_break) return HueClass::LargePositive;
  if (difference >= 0.0) return HueClass::SmallPositive;
  if (difference > -magnitude_break) return HueClass::SmallNegative;
  return HueClass::LargeNegative;
}

double SaturationLadder::of(SigClass c) const noexcept {
  switch (c) {
    case SigClass::At1Pct: return at1;
    case SigClass::At5Pct: return at5;
    case SigClass::At10Pct: return at10;
    default: return 0.0;
  }
}

void SaturationLadder::validate() const {
  if (!(at1 <= 1.0 && at1 > at5 && at5 > at10 && at10 > 0.0)) {
    throw Error("saturation ladder must satisfy 1 >= At1Pct > At5Pct > At10Pct > 0, got " + describe());
  }
}

SaturationLadder SaturationLadder::parse(std::string_view text) {
  const auto parts = csv::split(text);
  if (parts.size() != 3) throw Error("alpha ladder needs three values, got '" + std::string(text) + "'");
  double v[3];
  for (int i = 0; i < 3; ++i) {
    try {
      v[i] = std::stod(std::string(parts[i]));
    } catch (const std::exception&) {
      throw Error("alpha ladder value '" + std::string(parts[i]) + "' is not a number");
    }
  }
  SaturationLadder ladder{v[0], v[1], v[2]};
  ladder.validate();
  return ladder;
}

std::string SaturationLadder::describe() const { return fmt::format("{},{},{}", at1, at5, at10); }

BoundingBox BoundingBox::parse(std::string_view text) {
  const auto parts = csv::split(text);
  if (parts.size() != 4) throw Error("bbox must be min_lon,min_lat,max_lon,max_lat");
  double v[4];
  for (int i = 0; i < 4; ++i) {
    try {
      v[i] = std::stod(std::string(parts[i]));
    } catch (const std::exception&) {
      throw Error("bbox value '" + std::string(parts[i]) + "' is not a number");
    }
  }
  BoundingBox b{v[0], v[1], v[2], v[3]};
  if (!(b.min_lon < b.max_lon && b.min_lat < b.max_lat)) throw Error("bbox minimum must be below maximum");
  return b;
}

bool BoundingBox::intersects(const BoundingBox& o) const noexcept {
  return min_lon <= o.max_lon && o.min_lon <= max_lon && min_lat <= o.max_lat && o.min_lat <= max_lat;
}

BoundingBox bounds_of(const ingest::AreaGeometry& area) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  BoundingBox b{inf, inf, -inf, -inf};
  for (const auto& poly : area.polygons) {
    for (const auto& ring : poly) {
      for (const auto& p : ring) {
        b.min_lon = std::min(b.min_lon, p.lon);
        b.max_lon = std::max(b.max_lon, p.lon);
        b.min_lat = std::min(b.min_lat, p.lat);
        b.max_lat = std::max(b.max_lat, p.lat);
      }
    }
  }
  return b;
}

bool RegionFilter::admits(const ingest::AreaGeometry& area) const {
  if (!states.empty() &&
      std::find(states.begin(), states.end(), std::string(area.geoid.state())) == states.end()) {
    return false;
  }
  return !bbox || bbox->intersects(bounds_of(area));
}

std::string RegionFilter::describe() const {
  if (empty()) return "none";
  std::string out;
  if (!states.empty()) {
    out += "states=";
    for (std::size_t i = 0; i < states.size(); ++i) out += (i ? "," : "") + states[i];
  }
  if (bbox) {
    if (!out.empty()) out += ' ';
    out += fmt::format("bbox={},{},{},{}", bbox->min_lon, bbox->min_lat, bbox->max_lon, bbox->max_lat);
  }
  return out;
}

MapSpec MapSpec::defaults(Variable v, RenderMode mode) {
  MapSpec spec;
  spec.mode = mode;
  spec.variable = v;
  spec.magnitude_break = default_magnitude_break(v);
  return spec;
}

void MapSpec::validate() const {
  if (!(magnitude_break > 0.0)) throw Error("magnitude break must be > 0");
  ladder.validate();
  if (width < 200 || height < 150) throw Error("canvas must be at least 200x150 pixels");
  AlbersProjection check(projection);
  (void)check;
}

Rgb shade(double hue_deg, double saturation) {
  return to_rgb(Hsl{hue_deg, saturation, 0.5 + 0.3 * (1.0 - saturation)});
}

Rgb fill_color(const MapSpec& spec, std::optional<HueClass> hue, SigClass sig) {
  if (sig == SigClass::NoTest || !hue) return spec.no_test_fill;
  switch (spec.mode) {
    case RenderMode::Difference:
      return shade(hue_angle(*hue), 1.0);
    case RenderMode::PValue:
      if (sig == SigClass::NotSignificant) return spec.not_significant_fill;
      return shade(hue_angle(is_positive(*hue) ? HueClass::LargePositive : HueClass::LargeNegative),
                   spec.ladder.of(sig));
    case RenderMode::Combined:
      if (sig == SigClass::NotSignificant) return spec.not_significant_fill;
      return shade(hue_angle(*hue), spec.ladder.of(sig));
  }
  return spec.no_test_fill;
}

namespace {

std::optional<HueClass> hue_for(const MapSpec& spec, const inference::DifferenceResult& r) {
  if (!r.difference) return std::nullopt;
  return classify_hue(*r.difference, spec.magnitude_break);
}

// Fixed-precision coordinate text; "-0.000" is folded to "0.000".
std::string coord(double v) {
  auto s = fmt::format("{:.3f}", v);
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string escape_xml(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

// Comment bodies must not contain "--".
std::string escape_comment(std::string_view text) {
  std::string out(text);
  for (std::size_t pos = 0; (pos = out.find("--", pos)) != std::string::npos;) out.replace(pos, 2, "- ");
  return out;
}

struct Swatch {
  std::optional<HueClass> hue;
  SigClass sig;
  std::string label;
};

std::vector<Swatch> legend_swatches(const MapSpec& spec) {
  std::vector<Swatch> out;
  const HueClass four[] = {HueClass::LargePositive, HueClass::SmallPositive, HueClass::SmallNegative,
                           HueClass::LargeNegative};
  const std::string brk = fmt::format("{}", spec.magnitude_break);
  auto hue_label = [&](HueClass h) -> std::string {
    switch (h) {
      case HueClass::LargePositive: return ">= " + brk;
      case HueClass::SmallPositive: return "0 to " + brk;
      case HueClass::SmallNegative: return "-" + brk + " to 0";
      case HueClass::LargeNegative: return "<= -" + brk;
    }
    return {};
  };
  const std::pair<SigClass, std::string> levels[] = {
      {SigClass::At1Pct, "1%"}, {SigClass::At5Pct, "5%"}, {SigClass::At10Pct, "10%"}};
  switch (spec.mode) {
    case RenderMode::Difference:
      for (auto h : four) out.push_back({h, SigClass::At1Pct, hue_label(h)});
      break;
    case RenderMode::PValue:
      for (auto h : {HueClass::LargePositive, HueClass::LargeNegative}) {
        for (const auto& [sig, name] : levels) {
          out.push_back({h, sig, std::string(is_positive(h) ? "positive" : "negative") + ", sig. " + name});
        }
      }
      break;
    case RenderMode::Combined:
      for (auto h : four) {
        for (const auto& [sig, name] : levels) out.push_back({h, sig, hue_label(h) + ", sig. " + name});
      }
      break;
  }
  if (spec.mode != RenderMode::Difference) {
    out.push_back({HueClass::SmallPositive, SigClass::NotSignificant, "not significant"});
  }
  out.push_back({std::nullopt, SigClass::NoTest, "no test"});
  return out;
}

std::string default_title(const MapSpec& spec) {
  const std::string var = spec.variable == Variable::VacancyRate ? "vacancy rate" : "persons per household";
  switch (spec.mode) {
    case RenderMode::Difference: return "Differences in " + var;
    case RenderMode::PValue: return "p-values of differences in " + var;
    case RenderMode::Combined: return "Significant differences in " + var;
  }
  return var;
}

}  // namespace

Rgb fill_for(const MapSpec& spec, const inference::DifferenceResult& result) {
  return fill_color(spec, hue_for(spec, result), result.sig_class);
}

std::string render_map(std::span<const ingest::AreaGeometry> geometries,
                       std::span<const inference::DifferenceResult> results, const MapSpec& spec) {
  spec.validate();
  std::map<Geoid, const inference::DifferenceResult*> by_geoid;
  for (const auto& r : results) {
    if (r.variable != spec.variable) continue;
    if (!by_geoid.emplace(r.geoid, &r).second) {
      throw Error("duplicate " + std::string(to_string(spec.variable)) + " result for " + r.geoid.str());
    }
  }

  std::vector<const ingest::AreaGeometry*> kept;
  for (const auto& g : geometries) {
    if (spec.region.admits(g)) kept.push_back(&g);
  }
  if (kept.empty()) throw Error("no areas left after region filter (" + spec.region.describe() + ")");
  std::stable_sort(kept.begin(), kept.end(), [](auto* a, auto* b) { return a->geoid < b->geoid; });

  const AlbersProjection proj(spec.projection);
  struct Projected {
    const ingest::AreaGeometry* area;
    std::vector<std::vector<MapPoint>> rings;
  };
  std::vector<Projected> projected;
  projected.reserve(kept.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  double min_x = inf, min_y = inf, max_x = -inf, max_y = -inf;
  for (const auto* area : kept) {
    Projected p{area, {}};
    for (const auto& poly : area->polygons) {
      for (const auto& ring : poly) {
        std::vector<MapPoint> pts;
        pts.reserve(ring.size());
        for (const auto& ll : ring) {
          const auto xy = proj.forward(ll.lon, ll.lat);
          min_x = std::min(min_x, xy.x);
          max_x = std::max(max_x, xy.x);
          min_y = std::min(min_y, xy.y);
          max_y = std::max(max_y, xy.y);
          pts.push_back(xy);
        }
        p.rings.push_back(std::move(pts));
      }
    }
    projected.push_back(std::move(p));
  }

  constexpr double kMargin = 20.0;
  constexpr double kTitleHeight = 36.0;
  constexpr double kLegendWidth = 230.0;
  const double avail_w = spec.width - kLegendWidth - 2 * kMargin;
  const double avail_h = spec.height - kTitleHeight - 2 * kMargin;
  const double span_x = std::max(max_x - min_x, 1e-9);
  const double span_y = std::max(max_y - min_y, 1e-9);
  const double scale = std::min(avail_w / span_x, avail_h / span_y);
  const double off_x = kMargin + (avail_w - span_x * scale) / 2.0;
  const double off_y = kMargin + kTitleHeight + (avail_h - span_y * scale) / 2.0;
  auto to_px = [&](const MapPoint& p) -> std::pair<std::string, std::string> {
    return {coord(off_x + (p.x - min_x) * scale), coord(off_y + (max_y - p.y) * scale)};
  };

  const std::string title = spec.title.empty() ? default_title(spec) : spec.title;
  std::string svg;
  svg.reserve(256 * projected.size() + 4096);
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n",
      spec.width, spec.height);
  svg += "<!-- survmap map\n";
  svg += fmt::format("  mode: {}\n  variable: {}\n  magnitude_break: {}\n  ladder: {}\n  projection: {}\n",
                     to_string(spec.mode), to_string(spec.variable), spec.magnitude_break,
                     spec.ladder.describe(), spec.projection.describe());
  svg += fmt::format("  region: {}\n  not_significant_fill: {}\n  no_test_fill: {}\n",
                     spec.region.describe(), to_hex(spec.not_significant_fill), to_hex(spec.no_test_fill));
  for (const auto& [key, value] : spec.provenance) {
    svg += "  " + escape_comment(key) + ": " + escape_comment(value) + "\n";
  }
  svg += "-->\n";
  svg += "<title>" + escape_xml(title) + "</title>\n";
  svg += fmt::format(
      "<text id=\"title\" x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"18\">{}</text>\n",
      coord(kMargin), coord(kMargin + 18.0), escape_xml(title));

  svg += "<g id=\"areas\" fill-rule=\"evenodd\" stroke=\"#666666\" stroke-width=\"0.4\" "
         "stroke-linejoin=\"round\">\n";
  for (const auto& p : projected) {
    const auto it = by_geoid.find(p.area->geoid);
    std::optional<HueClass> hue;
    SigClass sig = SigClass::NoTest;
    if (it != by_geoid.end()) {
      hue = hue_for(spec, *it->second);
      sig = it->second->sig_class;
    }
    std::string d;
    for (const auto& ring : p.rings) {
      std::string prev;
      bool first = true;
      for (const auto& pt : ring) {
        const auto [x, y] = to_px(pt);
        std::string cur = x + "," + y;
        if (cur == prev) continue;
        d += first ? "M" : "L";
        d += cur;
        prev = std::move(cur);
        first = false;
      }
      d += "Z";
    }
    svg += fmt::format(
        "<path id=\"a{0}\" data-geoid=\"{0}\" data-hue=\"{1}\" data-sig=\"{2}\" fill=\"{3}\" d=\"{4}\">"
        "<title>{5}</title></path>\n",
        p.area->geoid.str(), hue ? to_string(*hue) : std::string_view("None"), to_string(sig),
        to_hex(fill_color(spec, hue, sig)), d, escape_xml(p.area->name));
  }
  svg += "</g>\n";

  const double legend_x = spec.width - kLegendWidth;
  double y = kMargin + kTitleHeight;
  svg += "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += fmt::format("<text x=\"{}\" y=\"{}\" font-weight=\"bold\">{}</text>\n", coord(legend_x), coord(y),
                     spec.mode == RenderMode::Difference ? "Difference" : "Difference, significance");
  y += 8.0;
  for (const auto& sw : legend_swatches(spec)) {
    svg += fmt::format(
        "<rect class=\"swatch\" data-hue=\"{}\" data-sig=\"{}\" x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" "
        "fill=\"{}\" stroke=\"#666666\" stroke-width=\"0.5\"/>\n",
        sw.hue ? to_string(*sw.hue) : std::string_view("None"), to_string(sw.sig), coord(legend_x), coord(y),
        to_hex(fill_color(spec, sw.hue, sw.sig)));
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", coord(legend_x + 20.0), coord(y + 11.0),
                       escape_xml(sw.label));
    y += 18.0;
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string render_qq(std::span<const inference::QQPoint> series, std::string_view title,
                      std::span<const std::pair<std::string, std::string>> provenance) {
  if (series.empty()) throw Error("QQ plot needs at least one p-value");
  constexpr double kSize = 480.0;
  constexpr double kLeft = 60.0, kTop = 40.0, kPlot = 380.0;
  constexpr double kMarker = 3.0;
  auto px = [&](double u) { return kLeft + u * kPlot; };
  auto py = [&](double v) { return kTop + (1.0 - v) * kPlot; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{0}\" "
      "viewBox=\"0 0 {0} {0}\">\n",
      kSize);
  svg += fmt::format("<!-- survmap qq\n  points: {}\n  plotting_positions: i/(n+1)\n", series.size());
  for (const auto& [key, value] : provenance) {
    svg += "  " + escape_comment(key) + ": " + escape_comment(value) + "\n";
  }
  svg += "-->\n";
  svg += "<title>" + escape_xml(title) + "</title>\n";
  svg += fmt::format("<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
                     coord(kLeft), escape_xml(title));
  svg += fmt::format(
      "<rect id=\"frame\" x=\"{0}\" y=\"{1}\" width=\"{2}\" height=\"{2}\" fill=\"none\" stroke=\"#000000\"/>\n",
      coord(kLeft), coord(kTop), coord(kPlot));
  svg += "<g id=\"axes\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double u = i / 4.0;
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.2f}</text>\n", coord(px(u)),
                       coord(kTop + kPlot + 16.0), u);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.2f}</text>\n", coord(kLeft - 6.0),
                       coord(py(u) + 4.0), u);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Uniform quantile</text>\n",
                     coord(px(0.5)), coord(kTop + kPlot + 34.0));
  svg += fmt::format(
      "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">Observed p-value</text>\n",
      coord(py(0.5)));
  svg += "</g>\n";
  svg += fmt::format(
      "<line id=\"reference\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ff0000\" stroke-width=\"1.5\"/>\n",
      coord(px(0.0)), coord(py(0.0)), coord(px(1.0)), coord(py(1.0)));
  svg += "<g id=\"observations\" stroke=\"#000000\" stroke-width=\"0.8\" fill=\"none\">\n";
  for (const auto& pt : series) {
    const double cx = px(pt.expected), cy = py(pt.observed);
    svg += fmt::format("<path class=\"obs\" d=\"M{},{}h{}M{},{}v{}\"/>\n", coord(cx - kMarker), coord(cy),
                       coord(2 * kMarker), coord(cx), coord(cy - kMarker), coord(2 * kMarker));
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace survmap::viz
