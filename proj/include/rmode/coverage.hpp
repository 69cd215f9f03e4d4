#ifndef RMODE_COVERAGE_HPP
#define RMODE_COVERAGE_HPP

#include "rmode/conductivity.hpp"
#include "rmode/params.hpp"
#include "rmode/propagation.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rmode::coverage {

/// Output lattice. Row 0 is the southernmost; values are evaluated at cell
/// centers.
struct GridSpec {
    double lat_min_deg = 0.0;
    double lon_min_deg = 0.0;
    double cell_size_deg = 0.0;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;

    double lat_max_deg() const noexcept { return lat_min_deg + static_cast<double>(n_rows) * cell_size_deg; }
    double lon_max_deg() const noexcept { return lon_min_deg + static_cast<double>(n_cols) * cell_size_deg; }
    geo::GeoPoint cell_center(std::size_t row, std::size_t col) const;

    /// Throws InvalidGridSpec.
    void validate() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct CoverageMetadata {
    std::string transmitter_id;
    PropagationParams params;
    double power_offset_dB = 0.0;
    std::string ea_table_hash;
    conductivity::EaPolicy policy = conductivity::EaPolicy::loglin_interp;
    double step_bound_m = 0.0; ///< max step used for path tracing
    std::size_t fallback_steps = 0;
    std::size_t failed_cells = 0;
    std::size_t near_field_cells = 0; ///< advisory: centers within 1 km of tx
};

struct CoverageGrid {
    GridSpec spec;
    std::vector<double> values; ///< dB(uV/m), row-major, NaN marks a failed cell
    CoverageMetadata metadata;

    double at(std::size_t row, std::size_t col) const { return values[row * spec.n_cols + col]; }
};

struct SweepOptions {
    propagation::TraceOptions trace;
    /// 0 = hardware concurrency, 1 = sequential.
    unsigned threads = 1;
};

/// Field strength at every cell center for one transmitter. Cells whose
/// path fails record NaN and count toward metadata.failed_cells. Centers
/// within 1 m of the transmitter are evaluated at 1 m over the ground
/// under the transmitter. Output is independent of the thread count.
/// Throws InvalidGridSpec.
CoverageGrid compute_coverage(const propagation::Transmitter& tx, const conductivity::ConductivityRaster& raster,
                              const conductivity::EaTable& table, const PropagationParams& params,
                              const GridSpec& spec, const SweepOptions& options = {});

enum class ExportFormat { csv, esri_ascii, png };

ExportFormat parse_export_format(std::string_view name);
std::string_view to_string(ExportFormat format);
std::string_view file_extension(ExportFormat format);

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Failed cells render in this color; it is not on the ramp.
inline constexpr Rgb kNoDataColor{0, 0, 0};

struct PngOptions {
    double vmin_dBuVm = 40.0;
    double vmax_dBuVm = 120.0;

    friend bool operator==(const PngOptions&, const PngOptions&) = default;
};

/// Fixed five-stop ramp, linear between stops over [vmin, vmax]:
/// blue (0,0,255) -> cyan (0,255,255) -> green (0,255,0) ->
/// yellow (255,255,0) -> red (255,0,0). Values outside clamp to the ends.
Rgb colormap(double value_dBuVm, const PngOptions& options);

/// Encodes the grid. csv rows are "lat,lon,field_dBuVm" at cell centers,
/// north to south then west to east; failed cells read "NaN". esri_ascii
/// uses NODATA_value -9999. png is 8-bit RGB, one pixel per cell, row 0 at
/// the north. Throws EncodingError.
std::string export_grid(const CoverageGrid& grid, ExportFormat format, const PngOptions& png = {});

/// key=value description of the run (not including timing).
std::string export_metadata(const CoverageGrid& grid);

} // namespace rmode::coverage

#endif
