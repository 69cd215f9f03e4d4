#include "rmode/cli.hpp"

#include "rmode/error.hpp"
#include "text_util.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace rmode::cli {

namespace {

namespace fs = std::filesystem;

double to_double(std::string_view key, std::string_view value) {
    double v = 0.0;
    if (!detail::parse_double(value, v) || !std::isfinite(v))
        throw ConfigError("setting '" + std::string(key) + "': expected a number, got '" + std::string(value) + "'");
    return v;
}

std::size_t to_count(std::string_view key, std::string_view value) {
    long v = 0;
    if (!detail::parse_long(value, v) || v < 0)
        throw ConfigError("setting '" + std::string(key) + "': expected a nonnegative integer, got '" +
                          std::string(value) + "'");
    return static_cast<std::size_t>(v);
}

std::string resolve(std::string_view value, const fs::path& base_dir) {
    if (value.empty())
        return {};
    fs::path p{std::string(value)};
    if (p.is_relative())
        p = base_dir / p;
    return fs::absolute(p).lexically_normal().string();
}

coverage::GridSpec& grid_of(RunConfig& c) {
    if (!c.grid)
        c.grid = coverage::GridSpec{};
    return *c.grid;
}

} // namespace

double parse_length_m(std::string_view text) {
    auto body = detail::trim(text);
    double scale = 1.0;
    if (body.size() > 2 && body.substr(body.size() - 2) == "km") {
        scale = 1000.0;
        body.remove_suffix(2);
    } else if (body.size() > 1 && body.back() == 'm') {
        body.remove_suffix(1);
    }
    double v = 0.0;
    if (!detail::parse_double(body, v) || !std::isfinite(v) || v < 0.0)
        throw ValueError("expected a nonnegative length such as 500, 500m or 2.5km, got '" + std::string(text) + "'");
    return v * scale;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value, const fs::path& base_dir) {
    try {
        if (key == "tx.id")
            c.tx_id = std::string(value);
        else if (key == "tx.lat")
            c.tx_lat_deg = to_double(key, value);
        else if (key == "tx.lon")
            c.tx_lon_deg = to_double(key, value);
        else if (key == "tx.power_offset_dB")
            c.power_offset_dB = to_double(key, value);
        else if (key == "raster")
            c.raster_path = resolve(value, base_dir);
        else if (key == "raster.format")
            c.raster_format = conductivity::parse_raster_format(value);
        else if (key == "landcover")
            c.landcover_path = resolve(value, base_dir);
        else if (key == "ea_table")
            c.ea_table_path = resolve(value, base_dir);
        else if (key == "params")
            c.params_path = resolve(value, base_dir);
        else if (key == "model") {
            params_preset(std::string(value)); // validates the name
            c.model = std::string(value);
        }
        else if (key == "grid.lat_min")
            grid_of(c).lat_min_deg = to_double(key, value);
        else if (key == "grid.lon_min")
            grid_of(c).lon_min_deg = to_double(key, value);
        else if (key == "grid.cell_size_deg")
            grid_of(c).cell_size_deg = to_double(key, value);
        else if (key == "grid.rows")
            grid_of(c).n_rows = to_count(key, value);
        else if (key == "grid.cols")
            grid_of(c).n_cols = to_count(key, value);
        else if (key == "step_m")
            c.step_m = parse_length_m(value);
        else if (key == "policy")
            c.policy = conductivity::parse_policy(value);
        else if (key == "fallback_sigma")
            c.fallback_sigma_S_per_m = to_double(key, value);
        else if (key == "threads")
            c.threads = static_cast<unsigned>(to_count(key, value));
        else if (key == "out")
            c.out = resolve(value, base_dir);
        else if (key == "formats") {
            c.formats.clear();
            for (const auto f : detail::split(value, ", \t"))
                c.formats.push_back(coverage::parse_export_format(f));
        } else if (key == "png.vmin")
            c.png.vmin_dBuVm = to_double(key, value);
        else if (key == "png.vmax")
            c.png.vmax_dBuVm = to_double(key, value);
        else
            throw ConfigError("unknown setting '" + std::string(key) + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("setting '" + std::string(key) + "': " + e.what());
    }
}

RunConfig parse_config(std::istream& in, const fs::path& base_dir, RunConfig config) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = detail::trim(detail::strip_comment(line));
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        apply_setting(config, detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)), base_dir);
    }
    return config;
}

void dump_config(std::ostream& out, const RunConfig& c) {
    auto kv = [&out](std::string_view key, const std::string& value) { out << key << " = " << value << '\n'; };
    auto num = [](double v) { return detail::format_double(v); };

    kv("tx.id", c.tx_id);
    if (c.tx_lat_deg)
        kv("tx.lat", num(*c.tx_lat_deg));
    if (c.tx_lon_deg)
        kv("tx.lon", num(*c.tx_lon_deg));
    kv("tx.power_offset_dB", num(c.power_offset_dB));
    if (!c.raster_path.empty())
        kv("raster", c.raster_path);
    kv("raster.format", std::string(conductivity::to_string(c.raster_format)));
    if (!c.landcover_path.empty())
        kv("landcover", c.landcover_path);
    if (!c.ea_table_path.empty())
        kv("ea_table", c.ea_table_path);
    if (!c.params_path.empty())
        kv("params", c.params_path);
    kv("model", c.model);
    if (c.grid) {
        kv("grid.lat_min", num(c.grid->lat_min_deg));
        kv("grid.lon_min", num(c.grid->lon_min_deg));
        kv("grid.cell_size_deg", num(c.grid->cell_size_deg));
        kv("grid.rows", std::to_string(c.grid->n_rows));
        kv("grid.cols", std::to_string(c.grid->n_cols));
    }
    kv("step_m", num(c.step_m));
    kv("policy", std::string(conductivity::to_string(c.policy)));
    kv("fallback_sigma", num(c.fallback_sigma_S_per_m));
    kv("threads", std::to_string(c.threads));
    if (!c.out.empty())
        kv("out", c.out);
    std::string formats;
    for (const auto f : c.formats) {
        if (!formats.empty())
            formats += ',';
        formats += coverage::to_string(f);
    }
    kv("formats", formats);
    kv("png.vmin", num(c.png.vmin_dBuVm));
    kv("png.vmax", num(c.png.vmax_dBuVm));
}

} // namespace rmode::cli
