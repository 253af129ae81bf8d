#pragma once

#include <cmath>

namespace wifiepi {

inline constexpr double kEarthRadiusM = 6371000.0; // mean Earth radius
inline constexpr double kPi = 3.14159265358979323846;

struct GeoPoint {
    double lat = 0.0; // degrees, [-90, 90]
    double lon = 0.0; // degrees, [-180, 180]
};

inline double deg2rad(double deg) { return deg * (kPi / 180.0); }
inline double rad2deg(double rad) { return rad * (180.0 / kPi); }

// Great-circle (haversine) distance in meters.
inline double geo_distance_m(const GeoPoint& a, const GeoPoint& b) {
    const double dlat = deg2rad(b.lat - a.lat);
    const double dlon = deg2rad(b.lon - a.lon);
    const double slat = std::sin(dlat / 2.0);
    const double slon = std::sin(dlon / 2.0);
    double h = slat * slat +
               std::cos(deg2rad(a.lat)) * std::cos(deg2rad(b.lat)) * slon * slon;
    if (h > 1.0) h = 1.0;
    if (h < 0.0) h = 0.0;
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

// Displaces a point by (east_m, north_m) meters on the local tangent plane.
// Accurate to O((d/R)^2) for the sub-kilometer offsets used here.
inline GeoPoint geo_offset(const GeoPoint& p, double east_m, double north_m) {
    GeoPoint out;
    out.lat = p.lat + rad2deg(north_m / kEarthRadiusM);
    out.lon = p.lon + rad2deg(east_m / (kEarthRadiusM * std::cos(deg2rad(p.lat))));
    return out;
}

} // namespace wifiepi
