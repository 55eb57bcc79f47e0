#include "survmap/projection.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "survmap/csv.hpp"
#include "survmap/types.hpp"

namespace survmap::viz {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void require_latitude(double lat, std::string_view what) {
  if (!(lat > -90.0 && lat < 90.0)) {
    throw Error(fmt::format("Albers: {} {} must lie strictly between -90 and 90", what, lat));
  }
}

}  // namespace

AlbersParams AlbersParams::parse(std::string_view text) {
  if (text == "conus") return conus();
  if (text == "alaska") return alaska();
  const auto parts = csv::split(text);
  if (parts.size() != 4) {
    throw Error("projection must be conus, alaska, or lat1,lat2,lon0,lat0; got '" + std::string(text) + "'");
  }
  double v[4];
  for (int i = 0; i < 4; ++i) {
    try {
      v[i] = std::stod(std::string(parts[i]));
    } catch (const std::exception&) {
      throw Error("projection parameter '" + std::string(parts[i]) + "' is not a number");
    }
  }
  AlbersParams p;
  p.lat1 = v[0];
  p.lat2 = v[1];
  p.lon0 = v[2];
  p.lat0 = v[3];
  return p;
}

std::string AlbersParams::describe() const {
  return fmt::format("albers(lat1={},lat2={},lon0={},lat0={})", lat1, lat2, lon0, lat0);
}

AlbersProjection::AlbersProjection(const AlbersParams& params) : params_(params) {
  require_latitude(params.lat1, "standard parallel");
  require_latitude(params.lat2, "standard parallel");
  require_latitude(params.lat0, "latitude of origin");
  if (params.lat1 == params.lat2) throw Error("Albers: standard parallels must be distinct");
  if (!(params.eccentricity_sq >= 0.0 && params.eccentricity_sq < 1.0) || !(params.semi_major_km > 0.0)) {
    throw Error("Albers: invalid ellipsoid");
  }
  e_ = std::sqrt(params.eccentricity_sq);
  const double s1 = std::sin(params.lat1 * kDeg);
  const double s2 = std::sin(params.lat2 * kDeg);
  const double m1 = std::cos(params.lat1 * kDeg) / std::sqrt(1.0 - params.eccentricity_sq * s1 * s1);
  const double m2 = std::cos(params.lat2 * kDeg) / std::sqrt(1.0 - params.eccentricity_sq * s2 * s2);
  const double q1 = authalic_q(s1);
  const double q2 = authalic_q(s2);
  n_ = (m1 * m1 - m2 * m2) / (q2 - q1);
  if (!(std::abs(n_) > 1e-12)) throw Error("Albers: standard parallels are symmetric about the equator");
  c_ = m1 * m1 + n_ * q1;
  rho0_ = rho(authalic_q(std::sin(params.lat0 * kDeg)));
}

double AlbersProjection::authalic_q(double sin_phi) const {
  const double es2 = params_.eccentricity_sq;
  if (e_ == 0.0) return 2.0 * sin_phi;
  const double es = e_ * sin_phi;
  return (1.0 - es2) * (sin_phi / (1.0 - es * es) - std::log((1.0 - es) / (1.0 + es)) / (2.0 * e_));
}

double AlbersProjection::rho(double q) const {
  return params_.semi_major_km * std::sqrt(c_ - n_ * q) / n_;
}

MapPoint AlbersProjection::forward(double lon_deg, double lat_deg) const {
  require_latitude(lat_deg, "latitude");
  double dlon = std::remainder(lon_deg - params_.lon0, 360.0);
  const double theta = n_ * dlon * kDeg;
  const double r = rho(authalic_q(std::sin(lat_deg * kDeg)));
  return {r * std::sin(theta), rho0_ - r * std::cos(theta)};
}

}  // namespace survmap::viz
