#pragma once

#include <string>
#include <string_view>

namespace survmap::viz {

/// Albers equal-area conic on an ellipsoid (GRS80 by default). Coordinates
/// are in kilometres, measured from the projection origin.
struct AlbersParams {
  double lat1 = 29.5;  // standard parallels, degrees
  double lat2 = 45.5;
  double lon0 = -96.0;  // reference meridian and latitude of origin
  double lat0 = 37.5;
  double semi_major_km = 6378.137;
  double eccentricity_sq = 0.00669438002290;

  static AlbersParams conus() { return {}; }
  static AlbersParams alaska() { return {55.0, 65.0, -154.0, 50.0}; }
  /// "conus", "alaska", or "lat1,lat2,lon0,lat0".
  static AlbersParams parse(std::string_view text);
  std::string describe() const;
};

struct MapPoint {
  double x = 0.0;
  double y = 0.0;
};

class AlbersProjection {
 public:
  /// Throws when the standard parallels coincide, straddle the equator
  /// symmetrically, or touch a pole.
  explicit AlbersProjection(const AlbersParams& params);

  /// Latitude must lie strictly inside (-90, 90).
  MapPoint forward(double lon_deg, double lat_deg) const;

  const AlbersParams& params() const noexcept { return params_; }
  double cone_constant() const noexcept { return n_; }

 private:
  double authalic_q(double sin_phi) const;
  double rho(double q) const;

  AlbersParams params_;
  double e_ = 0.0;
  double n_ = 0.0;
  double c_ = 0.0;
  double rho0_ = 0.0;
};

}  // namespace survmap::viz
