#include "rmode/coverage.hpp"

#include "rmode/error.hpp"
#include "png_writer.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace rmode::coverage {

namespace {

struct CellResult {
    double value = std::numeric_limits<double>::quiet_NaN();
    std::size_t fallback_steps = 0;
    bool failed = false;
    bool near_field = false;
};

CellResult evaluate_cell(const propagation::Transmitter& tx, const geo::GeoPoint& rx,
                         const conductivity::ConductivityRaster& raster, const conductivity::EaTable& table,
                         const PropagationParams& params, const propagation::TraceOptions& trace) {
    CellResult out;
    try {
        const double r = geo::great_circle_distance(tx.location, rx);
        if (r < propagation::kMinRangeM) {
            const auto ground = propagation::ground_at(tx.location, raster, table, trace);
            out.value = propagation::field_strength_homogeneous(propagation::kMinRangeM, params, ground.ea_dB_per_m,
                                                                tx.power_offset_dB);
            out.fallback_steps = ground.source == propagation::CellSource::raster ? 0 : 1;
            out.near_field = true;
            return out;
        }
        const auto prediction = propagation::predict_path(tx, rx, raster, table, params, trace);
        out.value = prediction.field_dBuVm;
        out.fallback_steps = prediction.profile.fallback_steps;
        out.near_field = prediction.near_field;
        if (!std::isfinite(out.value)) {
            out.value = std::numeric_limits<double>::quiet_NaN();
            out.failed = true;
        }
    } catch (const Error&) {
        out.value = std::numeric_limits<double>::quiet_NaN();
        out.failed = true;
    }
    return out;
}

} // namespace

geo::GeoPoint GridSpec::cell_center(std::size_t row, std::size_t col) const {
    return {lat_min_deg + (static_cast<double>(row) + 0.5) * cell_size_deg,
            lon_min_deg + (static_cast<double>(col) + 0.5) * cell_size_deg};
}

void GridSpec::validate() const {
    if (n_rows == 0 || n_cols == 0)
        throw InvalidGridSpec("coverage grid needs at least one row and one column");
    if (!(cell_size_deg > 0.0) || !std::isfinite(cell_size_deg))
        throw InvalidGridSpec("coverage cell size must be positive");
    if (!std::isfinite(lat_min_deg) || !std::isfinite(lon_min_deg))
        throw InvalidGridSpec("coverage bounds must be finite");
    constexpr double slack = 1e-9;
    if (lat_min_deg < -90.0 - slack || lat_max_deg() > 90.0 + slack)
        throw InvalidGridSpec("coverage latitude extent outside [-90, 90]");
    if (lon_min_deg < -180.0 - slack || lon_max_deg() > 180.0 + slack)
        throw InvalidGridSpec("coverage longitude extent outside [-180, 180]");
}

CoverageGrid compute_coverage(const propagation::Transmitter& tx, const conductivity::ConductivityRaster& raster,
                              const conductivity::EaTable& table, const PropagationParams& params,
                              const GridSpec& spec, const SweepOptions& options) {
    spec.validate();
    params.validate();
    options.trace.validate();

    CoverageGrid grid;
    grid.spec = spec;
    grid.metadata.transmitter_id = tx.id;
    grid.metadata.params = params;
    grid.metadata.power_offset_dB = tx.power_offset_dB;
    grid.metadata.ea_table_hash = table.fingerprint();
    grid.metadata.policy = options.trace.policy;
    grid.metadata.step_bound_m =
        options.trace.max_step_m > 0.0 ? options.trace.max_step_m : propagation::default_step_m(raster);

    // resolve the default step once so every cell uses the same bound
    propagation::TraceOptions trace = options.trace;
    trace.max_step_m = grid.metadata.step_bound_m;

    const std::size_t n_rows = spec.n_rows;
    const std::size_t n_cols = spec.n_cols;
    std::vector<CellResult> cells(n_rows * n_cols);

    auto run_row = [&](std::size_t row) {
        for (std::size_t col = 0; col < n_cols; ++col)
            cells[row * n_cols + col] = evaluate_cell(tx, spec.cell_center(row, col), raster, table, params, trace);
    };

    unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_rows));
    if (threads <= 1) {
        for (std::size_t row = 0; row < n_rows; ++row)
            run_row(row);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t row = next++; row < n_rows; row = next++)
                    run_row(row);
            });
        }
    }

    grid.values.resize(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        grid.values[i] = cells[i].value;
        grid.metadata.fallback_steps += cells[i].fallback_steps;
        grid.metadata.failed_cells += cells[i].failed ? 1 : 0;
        grid.metadata.near_field_cells += cells[i].near_field ? 1 : 0;
    }
    return grid;
}

ExportFormat parse_export_format(std::string_view name) {
    if (name == "csv")
        return ExportFormat::csv;
    if (name == "esri_ascii" || name == "asc")
        return ExportFormat::esri_ascii;
    if (name == "png")
        return ExportFormat::png;
    throw ValueError("unknown export format '" + std::string(name) + "' (expected csv, esri_ascii or png)");
}

std::string_view to_string(ExportFormat format) {
    switch (format) {
    case ExportFormat::csv:
        return "csv";
    case ExportFormat::esri_ascii:
        return "esri_ascii";
    case ExportFormat::png:
        return "png";
    }
    return "?";
}

std::string_view file_extension(ExportFormat format) {
    switch (format) {
    case ExportFormat::csv:
        return ".csv";
    case ExportFormat::esri_ascii:
        return ".asc";
    case ExportFormat::png:
        return ".png";
    }
    return "";
}

Rgb colormap(double value, const PngOptions& options) {
    static constexpr Rgb stops[] = {{0, 0, 255}, {0, 255, 255}, {0, 255, 0}, {255, 255, 0}, {255, 0, 0}};
    constexpr int n_segments = 4;
    if (!(options.vmin_dBuVm < options.vmax_dBuVm) || !std::isfinite(options.vmin_dBuVm) ||
        !std::isfinite(options.vmax_dBuVm))
        throw ValueError("colormap range needs finite vmin < vmax");
    double t = (value - options.vmin_dBuVm) / (options.vmax_dBuVm - options.vmin_dBuVm);
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * n_segments;
    const int seg = std::min(n_segments - 1, static_cast<int>(pos));
    const double u = pos - seg;
    auto lerp = [u](std::uint8_t a, std::uint8_t b) {
        return static_cast<std::uint8_t>(std::lround(a + u * (static_cast<double>(b) - a)));
    };
    const Rgb& a = stops[seg];
    const Rgb& b = stops[seg + 1];
    return {lerp(a.r, b.r), lerp(a.g, b.g), lerp(a.b, b.b)};
}

std::string export_grid(const CoverageGrid& grid, ExportFormat format, const PngOptions& png) {
    const auto& spec = grid.spec;
    if (grid.values.size() != spec.n_rows * spec.n_cols)
        throw EncodingError("coverage grid value count does not match its dimensions");

    switch (format) {
    case ExportFormat::csv: {
        std::string out = "lat,lon,field_dBuVm\n";
        for (std::size_t k = 0; k < spec.n_rows; ++k) {
            const std::size_t row = spec.n_rows - 1 - k;
            for (std::size_t col = 0; col < spec.n_cols; ++col) {
                const auto c = spec.cell_center(row, col);
                const double v = grid.at(row, col);
                out += detail::format_double(c.lat_deg(), 12);
                out += ',';
                out += detail::format_double(c.lon_deg(), 12);
                out += ',';
                out += std::isnan(v) ? std::string("NaN") : detail::format_double(v, 10);
                out += '\n';
            }
        }
        return out;
    }
    case ExportFormat::esri_ascii: {
        conductivity::RasterData data;
        data.geometry = {spec.lat_min_deg, spec.lon_min_deg, spec.cell_size_deg, spec.n_rows, spec.n_cols};
        data.cells = grid.values;
        data.nodata_value = -9999.0;
        std::ostringstream os;
        conductivity::write_raster_data(os, data, conductivity::RasterFormat::esri_ascii, 10);
        return os.str();
    }
    case ExportFormat::png: {
        if (!(png.vmin_dBuVm < png.vmax_dBuVm) || !std::isfinite(png.vmin_dBuVm) || !std::isfinite(png.vmax_dBuVm))
            throw EncodingError("colormap range needs finite vmin < vmax");
        std::vector<std::uint8_t> rgb;
        rgb.reserve(grid.values.size() * 3);
        for (std::size_t k = 0; k < spec.n_rows; ++k) {
            const std::size_t row = spec.n_rows - 1 - k;
            for (std::size_t col = 0; col < spec.n_cols; ++col) {
                const double v = grid.at(row, col);
                const Rgb c = std::isfinite(v) ? colormap(v, png) : kNoDataColor;
                rgb.insert(rgb.end(), {c.r, c.g, c.b});
            }
        }
        return detail::encode_rgb_png(rgb, spec.n_cols, spec.n_rows);
    }
    }
    throw EncodingError("unsupported export format");
}

std::string export_metadata(const CoverageGrid& grid) {
    const auto& m = grid.metadata;
    const auto& s = grid.spec;
    std::string out;
    auto kv = [&out](std::string_view key, const std::string& value) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    };
    kv("transmitter_id", m.transmitter_id);
    kv("C_dBuVm", detail::format_double(m.params.C_dBuVm));
    kv("e_exponent", detail::format_double(m.params.e_exponent));
    kv("power_offset_dB", detail::format_double(m.power_offset_dB));
    kv("ea_table_hash", m.ea_table_hash);
    kv("ea_policy", std::string(conductivity::to_string(m.policy)));
    kv("step_bound_m", detail::format_double(m.step_bound_m));
    kv("lat_min_deg", detail::format_double(s.lat_min_deg));
    kv("lon_min_deg", detail::format_double(s.lon_min_deg));
    kv("cell_size_deg", detail::format_double(s.cell_size_deg));
    kv("n_rows", std::to_string(s.n_rows));
    kv("n_cols", std::to_string(s.n_cols));
    kv("fallback_steps", std::to_string(m.fallback_steps));
    kv("failed_cells", std::to_string(m.failed_cells));
    kv("near_field_cells", std::to_string(m.near_field_cells));
    if (m.near_field_cells > 0)
        kv("advisory", "cells within 1 km of the transmitter are outside the model's far-field validity");
    return out;
}

} // namespace rmode::coverage
