#pragma once

#include "atp/core/types.hpp"

namespace atp {

inline constexpr double kEarthRadiusM = 6371000.0;

// Great-circle distance in meters between two WGS-84 points.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

// Boundary-inclusive stop membership test.
bool within_stop_radius(double lat, double lon, const Stop& stop);

// Displace a point by east/north meters using a local equirectangular frame.
// Good to centimeters over the sub-kilometer offsets used here.
void offset_by_meters(double lat, double lon, double east_m, double north_m, double& out_lat,
                      double& out_lon);

// East/north displacement in meters of (lat, lon) relative to (ref_lat, ref_lon).
void en_offset_m(double ref_lat, double ref_lon, double lat, double lon, double& east_m,
                 double& north_m);

// Perpendicular distance in meters from a point to the chord between two
// endpoints, clamped to the nearer endpoint outside the chord span.
double point_to_chord_m(double lat, double lon, double a_lat, double a_lon, double b_lat,
                        double b_lon);

}  // namespace atp
