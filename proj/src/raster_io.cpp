#include "rmode/conductivity.hpp"

#include "rmode/error.hpp"
#include "text_util.hpp"

#include <cctype>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

namespace rmode::conductivity {

namespace {

struct Header {
    std::optional<long> ncols;
    std::optional<long> nrows;
    std::optional<double> x;
    std::optional<double> y;
    bool x_is_center = false;
    bool y_is_center = false;
    std::optional<double> cellsize;
    double nodata = -9999.0;
};

bool looks_like_key(std::string_view token) {
    if (token.empty() || !std::isalpha(static_cast<unsigned char>(token.front())))
        return false;
    // nan / inf are values, not keys
    return !(detail::iequals(token, "nan") || detail::iequals(token, "inf"));
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
    throw ParseError("raster line " + std::to_string(line_no) + ": " + what);
}

void apply_header_field(Header& h, std::string_view key, std::string_view value, std::size_t line_no) {
    auto as_double = [&] {
        double v = 0.0;
        if (!detail::parse_double(value, v) || !std::isfinite(v))
            fail(line_no, "bad numeric value for " + std::string(key));
        return v;
    };
    auto as_count = [&] {
        long v = 0;
        if (!detail::parse_long(value, v) || v <= 0)
            fail(line_no, std::string(key) + " must be a positive integer");
        return v;
    };

    if (detail::iequals(key, "ncols")) {
        h.ncols = as_count();
    } else if (detail::iequals(key, "nrows")) {
        h.nrows = as_count();
    } else if (detail::iequals(key, "xllcorner")) {
        h.x = as_double();
        h.x_is_center = false;
    } else if (detail::iequals(key, "xllcenter")) {
        h.x = as_double();
        h.x_is_center = true;
    } else if (detail::iequals(key, "yllcorner")) {
        h.y = as_double();
        h.y_is_center = false;
    } else if (detail::iequals(key, "yllcenter")) {
        h.y = as_double();
        h.y_is_center = true;
    } else if (detail::iequals(key, "cellsize")) {
        h.cellsize = as_double();
    } else if (detail::iequals(key, "nodata_value")) {
        h.nodata = as_double();
    } else {
        fail(line_no, "unknown header key '" + std::string(key) + "'");
    }
}

} // namespace

RasterFormat parse_raster_format(std::string_view name) {
    if (name == "esri_ascii" || name == "asc")
        return RasterFormat::esri_ascii;
    if (name == "csv_matrix" || name == "csv")
        return RasterFormat::csv_matrix;
    throw ValueError("unknown raster format '" + std::string(name) + "'");
}

std::string_view to_string(RasterFormat format) {
    return format == RasterFormat::esri_ascii ? "esri_ascii" : "csv_matrix";
}

void GridGeometry::validate() const {
    if (n_rows == 0 || n_cols == 0)
        throw ValueError("raster must have at least one row and one column");
    if (!(cell_size_deg > 0.0) || !std::isfinite(cell_size_deg))
        throw ValueError("raster cell size must be positive");
    if (!std::isfinite(origin_lat_deg) || !std::isfinite(origin_lon_deg))
        throw ValueError("raster origin must be finite");
    constexpr double slack = 1e-9;
    if (origin_lat_deg < -90.0 - slack || lat_max_deg() > 90.0 + slack)
        throw ValueError("raster latitude extent outside [-90, 90]");
    if (origin_lon_deg < -180.0 - slack || lon_max_deg() > 180.0 + slack)
        throw ValueError("raster longitude extent outside [-180, 180]");
}

RasterData read_raster_data(std::istream& in, RasterFormat format) {
    const std::string_view delims = format == RasterFormat::csv_matrix ? ", \t\r" : " \t\r";

    Header header;
    RasterData data;
    bool in_body = false;
    std::size_t rows_read = 0;
    std::size_t line_no = 0;
    std::string line;

    while (std::getline(in, line)) {
        ++line_no;
        const auto body = detail::trim(line);
        if (body.empty())
            continue;
        const auto tokens = detail::split(body, delims);

        if (!in_body && looks_like_key(tokens.front())) {
            if (tokens.size() != 2)
                fail(line_no, "header lines need exactly one key and one value");
            apply_header_field(header, tokens[0], tokens[1], line_no);
            continue;
        }

        if (!in_body) {
            if (!header.ncols || !header.nrows || !header.x || !header.y || !header.cellsize)
                fail(line_no, "header must define ncols, nrows, xllcorner, yllcorner and cellsize");
            auto& g = data.geometry;
            g.n_cols = static_cast<std::size_t>(*header.ncols);
            g.n_rows = static_cast<std::size_t>(*header.nrows);
            g.cell_size_deg = *header.cellsize;
            g.origin_lon_deg = header.x_is_center ? *header.x - g.cell_size_deg / 2.0 : *header.x;
            g.origin_lat_deg = header.y_is_center ? *header.y - g.cell_size_deg / 2.0 : *header.y;
            data.nodata_value = header.nodata;
            data.cells.assign(g.cell_count(), header.nodata);
            in_body = true;
        }

        const auto& g = data.geometry;
        if (rows_read >= g.n_rows)
            fail(line_no, "more data rows than nrows=" + std::to_string(g.n_rows));
        if (tokens.size() != g.n_cols)
            fail(line_no, "expected " + std::to_string(g.n_cols) + " values, found " +
                              std::to_string(tokens.size()));
        // first data row on disk is the northernmost
        const std::size_t row = g.n_rows - 1 - rows_read;
        for (std::size_t col = 0; col < g.n_cols; ++col) {
            double v = 0.0;
            if (!detail::parse_double(tokens[col], v))
                fail(line_no, "bad value '" + std::string(tokens[col]) + "'");
            data.cells[row * g.n_cols + col] = v;
        }
        ++rows_read;
    }

    if (!in_body)
        throw ParseError("raster has no data rows");
    if (rows_read != data.geometry.n_rows)
        throw ParseError("raster declares nrows=" + std::to_string(data.geometry.n_rows) + " but has " +
                         std::to_string(rows_read) + " data rows");
    return data;
}

void write_raster_data(std::ostream& out, const RasterData& data, RasterFormat format,
                       int significant_digits) {
    const auto& g = data.geometry;
    const bool csv = format == RasterFormat::csv_matrix;
    const char* sep = csv ? "," : " ";
    auto header = [&](const char* key, const std::string& value) {
        out << key << (csv ? "," : " ") << value << '\n';
    };
    header("ncols", std::to_string(g.n_cols));
    header("nrows", std::to_string(g.n_rows));
    header("xllcorner", detail::format_double(g.origin_lon_deg));
    header("yllcorner", detail::format_double(g.origin_lat_deg));
    header("cellsize", detail::format_double(g.cell_size_deg));
    header("NODATA_value", detail::format_double(data.nodata_value));

    std::string row_text;
    for (std::size_t k = 0; k < g.n_rows; ++k) {
        const std::size_t row = g.n_rows - 1 - k;
        row_text.clear();
        for (std::size_t col = 0; col < g.n_cols; ++col) {
            double v = data.at(row, col);
            if (std::isnan(v))
                v = data.nodata_value;
            if (col > 0)
                row_text += sep;
            row_text += detail::format_double(v, significant_digits);
        }
        out << row_text << '\n';
    }
    if (!out)
        throw EncodingError("failed writing raster");
}

ConductivityRaster load_raster(std::istream& in, RasterFormat format) {
    return ConductivityRaster(read_raster_data(in, format));
}

void write_raster(std::ostream& out, const ConductivityRaster& raster, RasterFormat format) {
    write_raster_data(out, raster.data(), format);
}

} // namespace rmode::conductivity
