#include "rmode/geo.hpp"

#include "rmode/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rmode::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::array<double, 3> to_unit_vector(const GeoPoint& p) {
    const double lat = p.lat_deg() * kDegToRad;
    const double lon = p.lon_deg() * kDegToRad;
    return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

double central_angle(const std::array<double, 3>& u, const std::array<double, 3>& v) {
    const double cx = u[1] * v[2] - u[2] * v[1];
    const double cy = u[2] * v[0] - u[0] * v[2];
    const double cz = u[0] * v[1] - u[1] * v[0];
    const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

} // namespace

double wrap_longitude(double lon_deg) {
    if (lon_deg >= -180.0 && lon_deg < 180.0)
        return lon_deg;
    double x = std::fmod(lon_deg + 180.0, 360.0);
    if (x < 0.0)
        x += 360.0;
    double wrapped = x - 180.0;
    if (wrapped >= 180.0)
        wrapped -= 360.0;
    return wrapped;
}

GeoPoint::GeoPoint(double lat_deg, double lon_deg) {
    if (!std::isfinite(lat_deg) || !std::isfinite(lon_deg))
        throw ValueError("non-finite coordinate");
    if (lat_deg < -90.0 || lat_deg > 90.0)
        throw ValueError("latitude " + std::to_string(lat_deg) + " outside [-90, 90]");
    lat_deg_ = lat_deg;
    lon_deg_ = wrap_longitude(lon_deg);
}

double great_circle_distance(const GeoPoint& a, const GeoPoint& b) {
    const double lat1 = a.lat_deg() * kDegToRad;
    const double lat2 = b.lat_deg() * kDegToRad;
    const double s_lat = std::sin((lat2 - lat1) / 2.0);
    const double s_lon = std::sin((b.lon_deg() - a.lon_deg()) * kDegToRad / 2.0);
    const double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * (s_lon * s_lon);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GreatCircleArc::GreatCircleArc(const GeoPoint& a, const GeoPoint& b)
    : a_(a), b_(b), ua_(to_unit_vector(a)), ub_(to_unit_vector(b)) {
    delta_ = central_angle(ua_, ub_);
    if (std::numbers::pi - delta_ < kAntipodalTolRad)
        throw AntipodalPath("endpoints are antipodal; the great circle is undefined");
    sin_delta_ = std::sin(delta_);
    length_m_ = great_circle_distance(a, b);
}

GeoPoint GreatCircleArc::point_at(double f) const {
    if (!(f >= 0.0 && f <= 1.0))
        throw ValueError("arc fraction must lie in [0, 1]");
    if (f == 0.0 || delta_ == 0.0)
        return a_;
    if (f == 1.0)
        return b_;
    const double wa = std::sin((1.0 - f) * delta_) / sin_delta_;
    const double wb = std::sin(f * delta_) / sin_delta_;
    const double x = wa * ua_[0] + wb * ub_[0];
    const double y = wa * ua_[1] + wb * ub_[1];
    const double z = wa * ua_[2] + wb * ub_[2];
    const double lat = std::atan2(z, std::hypot(x, y)) * kRadToDeg;
    const double lon = std::atan2(y, x) * kRadToDeg;
    return GeoPoint(std::clamp(lat, -90.0, 90.0), lon);
}

GeoPoint intermediate_point(const GeoPoint& a, const GeoPoint& b, double f) {
    return GreatCircleArc(a, b).point_at(f);
}

std::size_t path_intervals(double distance_m, double max_step_m) {
    if (!(max_step_m > 0.0) || !std::isfinite(max_step_m))
        throw ValueError("max step must be a positive finite length");
    const double q = distance_m / max_step_m;
    const double n = std::ceil(q * (1.0 - 1e-9));
    return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

std::vector<PathSample> sample_path(const GeoPoint& a, const GeoPoint& b, double max_step_m) {
    if (!(max_step_m > 0.0) || !std::isfinite(max_step_m))
        throw ValueError("max step must be a positive finite length");
    const GreatCircleArc arc(a, b);
    const double total = arc.length_m();
    if (total == 0.0)
        throw DegeneratePath("path endpoints coincide");

    const std::size_t n = path_intervals(total, max_step_m);
    std::vector<PathSample> samples;
    samples.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n);
        samples.push_back({arc.point_at(f), i == n ? total : total * f});
    }
    return samples;
}

} // namespace rmode::geo
