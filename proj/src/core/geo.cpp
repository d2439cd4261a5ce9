#include "atp/core/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace atp {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double phi1 = lat1 * kDegToRad;
  const double phi2 = lat2 * kDegToRad;
  const double dphi = (lat2 - lat1) * kDegToRad;
  const double dlam = (lon2 - lon1) * kDegToRad;
  const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

bool within_stop_radius(double lat, double lon, const Stop& stop) {
  return haversine_m(lat, lon, stop.lat, stop.lon) <= stop.radius_m;
}

void offset_by_meters(double lat, double lon, double east_m, double north_m, double& out_lat,
                      double& out_lon) {
  out_lat = lat + (north_m / kEarthRadiusM) / kDegToRad;
  const double clat = std::cos(lat * kDegToRad);
  if (std::abs(clat) < 1e-12)
    throw std::invalid_argument("offset_by_meters undefined at the poles");
  out_lon = lon + (east_m / (kEarthRadiusM * clat)) / kDegToRad;
}

void en_offset_m(double ref_lat, double ref_lon, double lat, double lon, double& east_m,
                 double& north_m) {
  north_m = (lat - ref_lat) * kDegToRad * kEarthRadiusM;
  east_m = (lon - ref_lon) * kDegToRad * kEarthRadiusM * std::cos(ref_lat * kDegToRad);
}

double point_to_chord_m(double lat, double lon, double a_lat, double a_lon, double b_lat,
                        double b_lon) {
  // Projected into a local planar frame anchored at endpoint A.
  double px, py, bx, by;
  en_offset_m(a_lat, a_lon, lat, lon, px, py);
  en_offset_m(a_lat, a_lon, b_lat, b_lon, bx, by);
  const double len2 = bx * bx + by * by;
  if (len2 == 0.0) return std::sqrt(px * px + py * py);
  const double t = std::clamp((px * bx + py * by) / len2, 0.0, 1.0);
  const double dx = px - t * bx;
  const double dy = py - t * by;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace atp
