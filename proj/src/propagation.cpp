#include "rmode/propagation.hpp"

#include "rmode/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rmode::propagation {

using conductivity::CellStatus;
using conductivity::EaPolicy;

namespace {

std::string describe(const geo::GeoPoint& p) {
    return "(" + detail::format_double(p.lat_deg(), 10) + ", " + detail::format_double(p.lon_deg(), 10) + ")";
}

} // namespace

void TraceOptions::validate() const {
    if (!(max_step_m >= 0.0) || !std::isfinite(max_step_m))
        throw ValueError("max step must be >= 0 (0 selects the raster default)");
    if (!(fallback_sigma_S_per_m > 0.0) || !std::isfinite(fallback_sigma_S_per_m))
        throw ValueError("fallback conductivity must be positive");
}

double default_step_m(const conductivity::ConductivityRaster& raster) {
    const auto& g = raster.geometry();
    const double center_lat = (g.origin_lat_deg + g.lat_max_deg()) / 2.0;
    const double cell_rad = g.cell_size_deg * std::numbers::pi / 180.0;
    const double height = cell_rad * geo::kEarthRadiusM;
    const double width = height * std::cos(center_lat * std::numbers::pi / 180.0);
    const double smallest = width > 0.0 ? std::min(height, width) : height;
    return smallest / 4.0;
}

double field_strength_homogeneous(double r_m, const PropagationParams& params, double ea_dB_per_m,
                                  double power_offset_dB) {
    if (!(r_m >= kMinRangeM))
        throw BelowMinRange("range " + detail::format_double(r_m) + " m is below the 1 m model minimum");
    return params.field(r_m, ea_dB_per_m) + power_offset_dB;
}

GroundAt ground_at(const geo::GeoPoint& p, const conductivity::ConductivityRaster& raster,
                   const conductivity::EaTable& table, const TraceOptions& options) {
    GroundAt out;
    out.cell = conductivity::cell_at(raster, p);
    switch (out.cell.status) {
    case CellStatus::ok:
        out.source = CellSource::raster;
        out.sigma_S_per_m = out.cell.sigma;
        break;
    case CellStatus::outside_raster:
        if (options.policy == EaPolicy::exact_only)
            throw OutsideRaster("point " + describe(p) + " lies outside the conductivity raster");
        out.source = CellSource::outside_raster;
        out.sigma_S_per_m = options.fallback_sigma_S_per_m;
        break;
    case CellStatus::nodata:
        if (options.policy == EaPolicy::exact_only)
            throw NoDataCell("point " + describe(p) + " falls on a nodata raster cell");
        out.source = CellSource::nodata;
        out.sigma_S_per_m = options.fallback_sigma_S_per_m;
        break;
    }
    out.ea_dB_per_m = conductivity::ea_for_sigma(out.sigma_S_per_m, table, options.policy);
    return out;
}

PathProfile trace_path(const geo::GeoPoint& tx, const geo::GeoPoint& rx,
                       const conductivity::ConductivityRaster& raster, const conductivity::EaTable& table,
                       const TraceOptions& options) {
    options.validate();
    const geo::GreatCircleArc arc(tx, rx);
    const double total = arc.length_m();
    if (total == 0.0)
        throw DegeneratePath("transmitter and receiver coincide at " + describe(tx));

    const double bound = options.max_step_m > 0.0 ? options.max_step_m : default_step_m(raster);
    const std::size_t n = geo::path_intervals(total, bound);
    const double step = total / static_cast<double>(n);

    PathProfile profile;
    profile.total_r_m = total;
    profile.step_m = step;
    profile.n_steps = n;

    std::vector<std::size_t> step_counts;
    double cached_sigma = -1.0;
    double cached_ea = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const auto mid = arc.point_at(f);
        const auto cell = conductivity::cell_at(raster, mid);

        CellSource source = CellSource::raster;
        double sigma = cell.sigma;
        if (cell.status != CellStatus::ok) {
            if (options.policy == EaPolicy::exact_only) {
                if (cell.status == CellStatus::outside_raster)
                    throw OutsideRaster("path step at " + describe(mid) + " lies outside the conductivity raster");
                throw NoDataCell("path step at " + describe(mid) + " falls on a nodata raster cell");
            }
            source = cell.status == CellStatus::outside_raster ? CellSource::outside_raster : CellSource::nodata;
            sigma = options.fallback_sigma_S_per_m;
            ++profile.fallback_steps;
        }

        if (!profile.segments.empty()) {
            auto& last = profile.segments.back();
            const bool same = last.source == source &&
                              (source == CellSource::outside_raster || (last.row == cell.row && last.col == cell.col));
            if (same) {
                ++step_counts.back();
                continue;
            }
        }

        if (sigma != cached_sigma) {
            cached_ea = conductivity::ea_for_sigma(sigma, table, options.policy);
            cached_sigma = sigma;
        }
        PathSegment seg;
        seg.source = source;
        seg.row = cell.row;
        seg.col = cell.col;
        seg.sigma_S_per_m = sigma;
        seg.ea_dB_per_m = cached_ea;
        profile.segments.push_back(seg);
        step_counts.push_back(1);
    }

    double extra = 0.0;
    for (std::size_t s = 0; s < profile.segments.size(); ++s) {
        auto& seg = profile.segments[s];
        seg.length_m = static_cast<double>(step_counts[s]) * step;
        extra += seg.ea_dB_per_m * seg.length_m;
    }
    profile.extra_atten_dB = extra;
    return profile;
}

PathPrediction predict_path(const Transmitter& tx, const geo::GeoPoint& rx,
                            const conductivity::ConductivityRaster& raster, const conductivity::EaTable& table,
                            const PropagationParams& params, const TraceOptions& options) {
    if (!std::isfinite(tx.power_offset_dB))
        throw ValueError("transmitter power offset must be finite");
    const double r = geo::great_circle_distance(tx.location, rx);
    if (r == 0.0)
        throw DegeneratePath("transmitter and receiver coincide at " + describe(rx));
    if (r < kMinRangeM)
        throw BelowMinRange("range " + detail::format_double(r) + " m is below the 1 m model minimum");

    PathPrediction out;
    out.profile = trace_path(tx.location, rx, raster, table, options);
    out.r_m = r;
    out.near_field = r < kNearFieldM;
    out.field_dBuVm =
        params.C_dBuVm + tx.power_offset_dB - 10.0 * params.e_exponent * std::log10(r) - out.profile.extra_atten_dB;
    return out;
}

} // namespace rmode::propagation
