#ifndef RMODE_PROPAGATION_HPP
#define RMODE_PROPAGATION_HPP

#include "rmode/conductivity.hpp"
#include "rmode/geo.hpp"
#include "rmode/params.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace rmode::propagation {

/// Shortest range the model is evaluated at; guards the log singularity.
inline constexpr double kMinRangeM = 1.0;

/// Below this range results are computed but flagged as advisory: the
/// model is a far-field ground-wave fit.
inline constexpr double kNearFieldM = 1000.0;

inline constexpr double kSeaWaterSigma = 4.0;

struct Transmitter {
    std::string id;
    geo::GeoPoint location;
    /// Added to C. Zero reproduces the nominal radiated power built into C.
    double power_offset_dB = 0.0;
};

enum class CellSource {
    raster,         ///< conductivity read from the raster
    outside_raster, ///< fallback conductivity, point beyond the raster
    nodata,         ///< fallback conductivity, raster cell is nodata
};

/// Contiguous run of path steps attributed to the same cell. row/col are
/// only meaningful for CellSource::raster (and nodata).
struct PathSegment {
    std::size_t row = 0;
    std::size_t col = 0;
    CellSource source = CellSource::raster;
    double sigma_S_per_m = 0.0;
    double ea_dB_per_m = 0.0;
    double length_m = 0.0;
};

struct PathProfile {
    double total_r_m = 0.0;
    std::vector<PathSegment> segments;
    double extra_atten_dB = 0.0; ///< sum of ea * length over segments
    double step_m = 0.0;         ///< actual (uniform) step length
    std::size_t n_steps = 0;
    std::size_t fallback_steps = 0;
};

struct TraceOptions {
    /// Upper bound on the step length; 0 selects default_step_m(raster).
    double max_step_m = 0.0;
    conductivity::EaPolicy policy = conductivity::EaPolicy::loglin_interp;
    /// Conductivity for steps outside the raster or on nodata cells. Under
    /// EaPolicy::exact_only such steps are errors instead.
    double fallback_sigma_S_per_m = kSeaWaterSigma;

    void validate() const;
};

/// A quarter of the smaller cell dimension, in meters, at the raster center.
double default_step_m(const conductivity::ConductivityRaster& raster);

/// C + power_offset - 10 e log10(r) - ea r. Throws BelowMinRange for r < 1 m.
double field_strength_homogeneous(double r_m, const PropagationParams& params, double ea_dB_per_m,
                                  double power_offset_dB = 0.0);

/// Conductivity and ea that apply at a point, honoring the fallback rule.
struct GroundAt {
    CellSource source = CellSource::raster;
    conductivity::CellLookup cell;
    double sigma_S_per_m = 0.0;
    double ea_dB_per_m = 0.0;
};

GroundAt ground_at(const geo::GeoPoint& p, const conductivity::ConductivityRaster& raster,
                   const conductivity::EaTable& table, const TraceOptions& options);

/// Decomposes the tx-rx great circle into per-cell lengths. Each step is
/// attributed to the cell under its midpoint; consecutive steps in the same
/// cell merge into one segment.
///
/// Throws DegeneratePath when tx == rx, AntipodalPath, and under
/// exact_only OutsideRaster / NoDataCell / NotInTable.
PathProfile trace_path(const geo::GeoPoint& tx, const geo::GeoPoint& rx,
                       const conductivity::ConductivityRaster& raster, const conductivity::EaTable& table,
                       const TraceOptions& options = {});

struct PathPrediction {
    double r_m = 0.0;
    double field_dBuVm = 0.0;
    bool near_field = false; ///< r below kNearFieldM, advisory only
    PathProfile profile;
};

/// Field strength over heterogeneous ground:
///     C + power_offset - 10 e log10(r) - sum_i ea_i r_i
/// Throws as trace_path, plus BelowMinRange for 0 < r < 1 m.
PathPrediction predict_path(const Transmitter& tx, const geo::GeoPoint& rx,
                            const conductivity::ConductivityRaster& raster, const conductivity::EaTable& table,
                            const PropagationParams& params, const TraceOptions& options = {});

inline double field_strength_path(const Transmitter& tx, const geo::GeoPoint& rx,
                                  const conductivity::ConductivityRaster& raster,
                                  const conductivity::EaTable& table, const PropagationParams& params,
                                  const TraceOptions& options = {}) {
    return predict_path(tx, rx, raster, table, params, options).field_dBuVm;
}

} // namespace rmode::propagation

#endif
