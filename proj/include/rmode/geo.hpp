#ifndef RMODE_GEO_HPP
#define RMODE_GEO_HPP

#include <array>
#include <cstddef>
#include <vector>

namespace rmode::geo {

/// Spherical earth radius used for every distance in the toolkit.
inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Tolerance on the central angle below which two points count as antipodal.
inline constexpr double kAntipodalTolRad = 1e-9;

/// Wraps a longitude into [-180, 180).
double wrap_longitude(double lon_deg);

/// Geographic position on the sphere. Latitude is checked to lie in
/// [-90, 90]; longitude is wrapped into [-180, 180).
class GeoPoint {
public:
    GeoPoint() = default;
    GeoPoint(double lat_deg, double lon_deg);

    double lat_deg() const noexcept { return lat_deg_; }
    double lon_deg() const noexcept { return lon_deg_; }

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

private:
    double lat_deg_ = 0.0;
    double lon_deg_ = 0.0;
};

struct PathSample {
    GeoPoint point;
    double cum_dist_m = 0.0;
};

/// Haversine distance on the sphere, in meters.
double great_circle_distance(const GeoPoint& a, const GeoPoint& b);

/// Precomputed great-circle arc from a to b. Evaluating many points along
/// the same arc is the hot loop of path tracing, so the unit vectors and the
/// central angle are computed once.
class GreatCircleArc {
public:
    /// Throws AntipodalPath when a and b are antipodal.
    GreatCircleArc(const GeoPoint& a, const GeoPoint& b);

    double central_angle_rad() const noexcept { return delta_; }
    double length_m() const noexcept { return length_m_; }

    /// Point at fraction f in [0, 1] of the arc; f=0 and f=1 return the
    /// endpoints exactly.
    GeoPoint point_at(double f) const;

private:
    GeoPoint a_;
    GeoPoint b_;
    std::array<double, 3> ua_{};
    std::array<double, 3> ub_{};
    double delta_ = 0.0;
    double sin_delta_ = 0.0;
    double length_m_ = 0.0;
};

/// Point at fraction f of the great-circle arc from a to b.
/// Throws AntipodalPath for antipodal endpoints, ValueError for f outside [0, 1].
GeoPoint intermediate_point(const GeoPoint& a, const GeoPoint& b, double f);

/// Number of equal intervals needed so that no interval exceeds max_step_m.
/// A relative slack of 1e-9 absorbs rounding in distances that are meant to
/// be exact multiples of the step.
std::size_t path_intervals(double distance_m, double max_step_m);

/// Uniformly spaced samples from a to b, endpoints included, with
/// ceil(distance / max_step_m) intervals.
/// Throws DegeneratePath when a == b, AntipodalPath, or ValueError on a
/// nonpositive step.
std::vector<PathSample> sample_path(const GeoPoint& a, const GeoPoint& b, double max_step_m);

} // namespace rmode::geo

#endif
