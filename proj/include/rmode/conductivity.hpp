#ifndef RMODE_CONDUCTIVITY_HPP
#define RMODE_CONDUCTIVITY_HPP

#include "rmode/geo.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rmode::conductivity {

/// Lat/lon grid layout. Row 0 is the southernmost row; cell (row, col)
/// covers the half-open box
/// [origin_lat + row*cell, origin_lat + (row+1)*cell) x
/// [origin_lon + col*cell, origin_lon + (col+1)*cell).
struct GridGeometry {
    double origin_lat_deg = 0.0;
    double origin_lon_deg = 0.0;
    double cell_size_deg = 1.0;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;

    double lat_max_deg() const noexcept {
        return origin_lat_deg + static_cast<double>(n_rows) * cell_size_deg;
    }
    double lon_max_deg() const noexcept {
        return origin_lon_deg + static_cast<double>(n_cols) * cell_size_deg;
    }
    std::size_t cell_count() const noexcept { return n_rows * n_cols; }

    /// Throws ValueError on empty dimensions, nonpositive cell size or
    /// bounds outside the valid lat/lon ranges.
    void validate() const;

    friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Untyped raster as read from disk: conductivities, land-cover codes or
/// exported field strengths. Cells are row-major with row 0 southernmost.
struct RasterData {
    GridGeometry geometry;
    std::vector<double> cells;
    double nodata_value = -9999.0;

    double at(std::size_t row, std::size_t col) const { return cells[row * geometry.n_cols + col]; }
    bool is_nodata(double v) const noexcept { return v == nodata_value; }
};

enum class RasterFormat { esri_ascii, csv_matrix };

RasterFormat parse_raster_format(std::string_view name);
std::string_view to_string(RasterFormat format);

/// Reads an ESRI ASCII grid or a CSV matrix. Both put the northernmost
/// row first on disk; the result is flipped to south-origin order.
///
/// The CSV dialect carries the same six header keys as "key,value" lines
/// ahead of comma-separated data rows.
///
/// Throws ParseError on a malformed header, a row with the wrong number of
/// values, or a row count that disagrees with nrows.
RasterData read_raster_data(std::istream& in, RasterFormat format);

/// Writes cells with the given number of significant digits. The default
/// (0) writes the shortest representation that reads back bit-exactly.
void write_raster_data(std::ostream& out, const RasterData& data, RasterFormat format,
                       int significant_digits = 0);

/// Ground conductivity in S/m on a lat/lon grid. Immutable once built.
class ConductivityRaster {
public:
    /// Throws ValueError when the geometry is invalid, the cell count does
    /// not match, or a non-nodata cell is not a positive finite value.
    explicit ConductivityRaster(RasterData data);

    /// A raster with every cell set to one conductivity.
    static ConductivityRaster uniform(const GridGeometry& geometry, double sigma_S_per_m);

    const GridGeometry& geometry() const noexcept { return data_.geometry; }
    const RasterData& data() const noexcept { return data_; }
    double sigma(std::size_t row, std::size_t col) const { return data_.at(row, col); }
    bool is_nodata(std::size_t row, std::size_t col) const { return data_.is_nodata(data_.at(row, col)); }

private:
    RasterData data_;
};

ConductivityRaster load_raster(std::istream& in, RasterFormat format);
void write_raster(std::ostream& out, const ConductivityRaster& raster, RasterFormat format);

enum class CellStatus { ok, outside_raster, nodata };

/// Result of locating a point. row/col are meaningful unless the status is
/// outside_raster; sigma is meaningful only for ok.
struct CellLookup {
    CellStatus status = CellStatus::outside_raster;
    std::size_t row = 0;
    std::size_t col = 0;
    double sigma = 0.0;
};

CellLookup cell_at(const ConductivityRaster& raster, const geo::GeoPoint& p);

/// Land-cover class code to conductivity (S/m).
class LandCoverMapping {
public:
    LandCoverMapping() = default;

    /// Throws ValueError on a duplicate code or a nonpositive conductivity.
    void add(long class_code, double sigma_S_per_m);

    const double* find(long class_code) const;
    std::size_t size() const noexcept { return entries_.size(); }
    const std::map<long, double>& entries() const noexcept { return entries_; }

private:
    std::map<long, double> entries_;
};

/// Lines "class_code conductivity_S_per_m"; '#' starts a comment.
LandCoverMapping parse_landcover_mapping(std::istream& in);

/// Same geometry, each class code replaced by its conductivity. Nodata
/// cells stay nodata. Throws UnmappedClass for a code missing from the
/// mapping and ValueError for a non-integral code.
ConductivityRaster apply_landcover_mapping(const RasterData& classes, const LandCoverMapping& mapping);

/// How ea_for_sigma treats a conductivity that is not a table row.
enum class EaPolicy {
    exact_only,    ///< a miss is an error
    loglin_interp, ///< linear in log10(sigma), clamped at the table ends
    nearest,       ///< row closest in log10(sigma); ties go to the lower sigma
};

EaPolicy parse_policy(std::string_view name);
std::string_view to_string(EaPolicy policy);

struct EaRow {
    double sigma_S_per_m = 0.0;
    double ea_dB_per_m = 0.0;

    friend bool operator==(const EaRow&, const EaRow&) = default;
};

/// Conductivity to extra attenuation per meter, sorted by sigma.
class EaTable {
public:
    /// Throws ValueError unless sigmas are positive, finite and strictly
    /// increasing and every ea is finite.
    explicit EaTable(std::vector<EaRow> rows);

    /// The seven MF R-Mode rows fitted with C = 195.876, e = 2.046.
    static EaTable mf_rmode();

    const std::vector<EaRow>& rows() const noexcept { return rows_; }

    /// FNV-1a over the raw row bits, as 16 hex digits. Identifies the table
    /// in output metadata.
    std::string fingerprint() const;

private:
    std::vector<EaRow> rows_;
};

/// Lines "sigma_S_per_m ea_dB_per_m"; '#' starts a comment. Rows are
/// sorted on load.
EaTable parse_ea_table(std::istream& in);
void write_ea_table(std::ostream& out, const EaTable& table);

struct EaLookup {
    double ea_dB_per_m = 0.0;
    bool exact = false; ///< true when sigma matched a table row
};

/// Throws InvalidSigma for sigma <= 0 (or non-finite) and NotInTable for an
/// exact_only miss.
EaLookup lookup_ea(double sigma_S_per_m, const EaTable& table, EaPolicy policy);

inline double ea_for_sigma(double sigma_S_per_m, const EaTable& table, EaPolicy policy) {
    return lookup_ea(sigma_S_per_m, table, policy).ea_dB_per_m;
}

} // namespace rmode::conductivity

#endif
