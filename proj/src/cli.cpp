#include "rmode/cli.hpp"

#include "rmode/coverage.hpp"
#include "rmode/error.hpp"
#include "rmode/fitting.hpp"
#include "rmode/propagation.hpp"
#include "text_util.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace rmode::cli {

namespace {

namespace fs = std::filesystem;

/// Unwinds a command to run() with an exit code and message.
class CommandFailure : public std::runtime_error {
public:
    CommandFailure(int code, const std::string& message) : std::runtime_error(message), code_(code) {}
    int code() const noexcept { return code_; }

private:
    int code_;
};

[[noreturn]] void fail(int code, const std::string& message) { throw CommandFailure(code, message); }

std::ifstream open_input(const std::string& path, std::string_view what) {
    if (path.empty())
        fail(kExitUsage, std::string(what) + " path is empty");
    if (!fs::exists(path))
        fail(kExitUsage, std::string(what) + " not found: " + path);
    std::ifstream in(path);
    if (!in)
        fail(kExitUsage, "cannot open " + std::string(what) + ": " + path);
    return in;
}

/// RMODE_OUT_DIR, when set, replaces the directory part of every output.
fs::path output_path(const std::string& prefix, std::string_view suffix) {
    fs::path p{prefix + std::string(suffix)};
    if (const char* dir = std::getenv("RMODE_OUT_DIR"); dir != nullptr && *dir != '\0')
        p = fs::path(dir) / p.filename();
    return p;
}

void write_output(const fs::path& path, const std::string& bytes) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        fail(kExitExport, "cannot open output file " + path.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.close();
    if (!os)
        fail(kExitExport, "failed writing output file " + path.string());
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

struct CommonFlags {
    std::string config;
    std::string params;
    std::string ea_table;
    std::string policy;
    std::string step;
    std::string out;
    std::vector<std::string> formats;
    std::vector<std::string> sets;
    bool dump = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "Run configuration file (key = value lines)");
    cmd->add_option("--params", f.params, "Fitted parameter file (C_dBuVm, e_exponent)");
    cmd->add_option("--ea-table", f.ea_table, "Conductivity to ea table file");
    cmd->add_option("--policy", f.policy, "ea lookup policy: exact_only, loglin_interp, nearest");
    cmd->add_option("--step-m", f.step, "Maximum path step, e.g. 500 or 1.5km (0 = raster default)");
    cmd->add_option("--out", f.out, "Output path prefix");
    cmd->add_option("--format", f.formats, "Export format(s): csv, esri_ascii, png")
        ->delimiter(',')
        ->allow_extra_args(false);
    cmd->add_option("--set", f.sets, "Override any config key, e.g. --set tx.lat=36.8")->allow_extra_args(false);
    cmd->add_flag("--dump-config", f.dump, "Print the effective configuration and exit");
}

RunConfig build_config(const CommonFlags& f) {
    RunConfig config;
    try {
        if (!f.config.empty()) {
            auto in = open_input(f.config, "config file");
            config = parse_config(in, fs::absolute(f.config).parent_path());
        }
        const fs::path cwd = fs::current_path();
        if (!f.params.empty())
            apply_setting(config, "params", f.params, cwd);
        if (!f.ea_table.empty())
            apply_setting(config, "ea_table", f.ea_table, cwd);
        if (!f.policy.empty())
            apply_setting(config, "policy", f.policy, cwd);
        if (!f.step.empty())
            apply_setting(config, "step_m", f.step, cwd);
        if (!f.out.empty())
            apply_setting(config, "out", f.out, cwd);
        if (!f.formats.empty()) {
            std::string joined;
            for (const auto& s : f.formats)
                joined += s + ",";
            apply_setting(config, "formats", joined, cwd);
        }
        for (const auto& s : f.sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                fail(kExitUsage, "--set expects key=value, got '" + s + "'");
            apply_setting(config, detail::trim(std::string_view(s).substr(0, eq)),
                          detail::trim(std::string_view(s).substr(eq + 1)), cwd);
        }
    } catch (const Error& e) {
        fail(kExitUsage, e.what());
    }
    return config;
}

struct Inputs {
    conductivity::ConductivityRaster raster;
    conductivity::EaTable table;
    PropagationParams params;
    propagation::Transmitter tx;
    propagation::TraceOptions trace;
};

Inputs load_inputs(const RunConfig& c) {
    if (!c.tx_lat_deg || !c.tx_lon_deg)
        fail(kExitUsage, "transmitter position missing (set tx.lat and tx.lon)");
    if (c.raster_path.empty())
        fail(kExitUsage, "no conductivity raster configured (set raster)");
    try {
        auto raster_in = open_input(c.raster_path, "raster file");
        auto data = conductivity::read_raster_data(raster_in, c.raster_format);
        std::optional<conductivity::ConductivityRaster> raster;
        if (!c.landcover_path.empty()) {
            auto map_in = open_input(c.landcover_path, "land-cover mapping");
            raster.emplace(conductivity::apply_landcover_mapping(data, conductivity::parse_landcover_mapping(map_in)));
        } else {
            raster.emplace(std::move(data));
        }

        auto table = conductivity::EaTable::mf_rmode();
        if (!c.ea_table_path.empty()) {
            auto in = open_input(c.ea_table_path, "ea table");
            table = conductivity::parse_ea_table(in);
        }
        auto params = params_preset(c.model);
        if (!c.params_path.empty()) {
            auto in = open_input(c.params_path, "params file");
            params = fitting::read_params(in);
        }

        propagation::Transmitter tx{c.tx_id, geo::GeoPoint(*c.tx_lat_deg, *c.tx_lon_deg), c.power_offset_dB};
        propagation::TraceOptions trace;
        trace.max_step_m = c.step_m;
        trace.policy = c.policy;
        trace.fallback_sigma_S_per_m = c.fallback_sigma_S_per_m;
        trace.validate();
        return {std::move(*raster), std::move(table), params, std::move(tx), trace};
    } catch (const CommandFailure&) {
        throw;
    } catch (const Error& e) {
        fail(kExitUsage, e.what());
    }
}

int cmd_fit(const std::vector<std::string>& files, const fitting::SearchConfig& search, const std::string& out_prefix,
            std::ostream& out) {
    if (files.empty())
        fail(kExitUsage, "fit needs at least one curve file");
    std::vector<fitting::ReferenceCurve> curves;
    for (const auto& file : files) {
        auto in = open_input(file, "curve file");
        try {
            curves.push_back(fitting::read_curve(in, fs::path(file).filename().string()));
        } catch (const Error& e) {
            fail(kExitUsage, file + ": " + e.what());
        }
        try {
            curves.back().validate();
        } catch (const Error& e) {
            fail(kExitFit, file + ": " + e.what());
        }
    }

    fitting::FitResult result;
    try {
        result = fitting::fit_global(curves, search);
    } catch (const Error& e) {
        fail(kExitFit, std::string("fit failed: ") + e.what());
    }

    std::ostringstream report;
    fitting::write_fit_report(report, result);
    out << report.str();

    if (!out_prefix.empty()) {
        std::ostringstream params;
        fitting::write_fit_params(params, result);
        write_output(output_path(out_prefix, ".params"), params.str());
        write_output(output_path(out_prefix, ".report.txt"), report.str());
        try {
            std::ostringstream table;
            conductivity::write_ea_table(table, fitting::ea_table_from_fit(result));
            write_output(output_path(out_prefix, "_ea.txt"), table.str());
        } catch (const ValueError&) {
            // curves sharing a conductivity: no table, params still written
        }
    }
    return kExitOk;
}

int cmd_point(const RunConfig& config, double rx_lat, double rx_lon, std::ostream& out) {
    const auto in = load_inputs(config);
    geo::GeoPoint rx;
    try {
        rx = geo::GeoPoint(rx_lat, rx_lon);
    } catch (const Error& e) {
        fail(kExitUsage, std::string("receiver position: ") + e.what());
    }
    propagation::PathPrediction p;
    try {
        p = propagation::predict_path(in.tx, rx, in.raster, in.table, in.params, in.trace);
    } catch (const PathError& e) {
        fail(kExitPath, e.what());
    } catch (const NotInTable& e) {
        fail(kExitPath, e.what());
    }
    out << "r_m=" << fixed(p.r_m, 3) << " extra_atten_dB=" << fixed(p.profile.extra_atten_dB, 6)
        << " field_dBuVm=" << fixed(p.field_dBuVm, 6) << " fallback_steps=" << p.profile.fallback_steps;
    if (p.near_field)
        out << " advisory=near_field";
    out << '\n';
    return kExitOk;
}

int cmd_coverage(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (!config.grid)
        fail(kExitUsage, "no output grid configured (set grid.lat_min, grid.lon_min, grid.cell_size_deg, "
                         "grid.rows, grid.cols)");
    if (config.formats.empty())
        fail(kExitUsage, "no export formats requested");
    if (std::find(config.formats.begin(), config.formats.end(), coverage::ExportFormat::png) != config.formats.end() &&
        !(config.png.vmin_dBuVm < config.png.vmax_dBuVm))
        fail(kExitUsage, "png.vmin must be below png.vmax");
    const auto in = load_inputs(config);

    const auto t0 = std::chrono::steady_clock::now();
    coverage::CoverageGrid grid;
    try {
        grid = coverage::compute_coverage(in.tx, in.raster, in.table, in.params, *config.grid,
                                          {in.trace, config.threads});
    } catch (const Error& e) {
        fail(kExitUsage, e.what());
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string prefix = config.out.empty() ? std::string("coverage") : config.out;
    std::vector<fs::path> written;
    for (const auto format : config.formats) {
        std::string bytes;
        try {
            bytes = coverage::export_grid(grid, format, config.png);
        } catch (const Error& e) {
            fail(kExitExport, e.what());
        }
        const auto path = output_path(prefix, coverage::file_extension(format));
        write_output(path, bytes);
        written.push_back(path);
    }
    const auto meta_path = output_path(prefix, ".meta.txt");
    write_output(meta_path, coverage::export_metadata(grid));
    written.push_back(meta_path);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : grid.values) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    out << "cells=" << grid.values.size() << " min_dBuVm=" << (std::isfinite(lo) ? fixed(lo, 3) : "NaN")
        << " max_dBuVm=" << (std::isfinite(hi) ? fixed(hi, 3) : "NaN")
        << " failed_cells=" << grid.metadata.failed_cells << " fallback_steps=" << grid.metadata.fallback_steps
        << '\n';
    for (const auto& p : written)
        out << "wrote " << p.string() << '\n';
    err << "wall_time_s=" << fixed(wall, 3) << '\n';
    return kExitOk;
}

int cmd_ea_table(const std::vector<std::string>& sigmas, const std::string& table_path,
                 const std::string& policy_name, std::ostream& out) {
    if (sigmas.empty())
        fail(kExitUsage, "ea-table needs at least one conductivity");
    conductivity::EaPolicy policy = conductivity::EaPolicy::loglin_interp;
    auto table = conductivity::EaTable::mf_rmode();
    try {
        if (!policy_name.empty())
            policy = conductivity::parse_policy(policy_name);
        if (!table_path.empty()) {
            auto in = open_input(table_path, "ea table");
            table = conductivity::parse_ea_table(in);
        }
    } catch (const Error& e) {
        fail(kExitUsage, e.what());
    }

    // validate everything before printing anything
    std::vector<double> values;
    for (const auto& s : sigmas) {
        double v = 0.0;
        if (!detail::parse_double(s, v) || !(v > 0.0) || !std::isfinite(v))
            fail(kExitUsage, "invalid conductivity '" + s + "' (must be a positive number in S/m)");
        values.push_back(v);
    }
    std::ostringstream text;
    for (std::size_t i = 0; i < values.size(); ++i) {
        conductivity::EaLookup hit;
        try {
            hit = conductivity::lookup_ea(values[i], table, policy);
        } catch (const Error& e) {
            fail(kExitUsage, e.what());
        }
        text << "sigma_S_per_m=" << sigmas[i] << " ea_dB_per_m=" << sci(hit.ea_dB_per_m);
        if (!hit.exact)
            text << (policy == conductivity::EaPolicy::nearest ? " (nearest)" : " (interpolated)");
        text << '\n';
    }
    out << text.str();
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"MF R-Mode ground-wave signal strength simulator", "rmode-sim"};
    app.require_subcommand(1);

    std::vector<std::string> curve_files;
    fitting::SearchConfig search;
    std::string fit_out;
    auto* fit = app.add_subcommand("fit", "Fit C, e and per-conductivity ea to reference curves");
    fit->add_option("curves", curve_files, "Curve files ('# sigma=<S/m> units=<m|km>' header, 'r field' rows)");
    fit->add_option("--c-min", search.c_min, "Lower search bound for C")->capture_default_str();
    fit->add_option("--c-max", search.c_max, "Upper search bound for C")->capture_default_str();
    fit->add_option("--e-min", search.e_min, "Lower search bound for e")->capture_default_str();
    fit->add_option("--e-max", search.e_max, "Upper search bound for e")->capture_default_str();
    fit->add_option("--threads", search.threads, "Grid-stage worker threads (0 = all cores)");
    fit->add_option("--out", fit_out, "Write <out>.params, <out>.report.txt and <out>_ea.txt");

    CommonFlags point_flags;
    double rx_lat = 0.0;
    double rx_lon = 0.0;
    auto* point = app.add_subcommand("point", "Predict field strength at one receiver position");
    add_common_flags(point, point_flags);
    point->add_option("lat", rx_lat, "Receiver latitude (deg)");
    point->add_option("lon", rx_lon, "Receiver longitude (deg)");

    CommonFlags cov_flags;
    auto* cov = app.add_subcommand("coverage", "Sweep a coverage grid and export it");
    add_common_flags(cov, cov_flags);

    std::vector<std::string> sigmas;
    std::string ea_table_path;
    std::string ea_policy;
    auto* ea = app.add_subcommand("ea-table", "Print extra attenuation per meter for conductivities (S/m)");
    ea->add_option("sigma", sigmas, "Conductivities in S/m");
    ea->add_option("--ea-table", ea_table_path, "Table file (default: built-in MF R-Mode table)");
    ea->add_option("--policy", ea_policy, "exact_only, loglin_interp or nearest");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args)
        argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (fit->parsed()) {
            if (curve_files.empty()) {
                err << "error: fit needs at least one curve file\n\n" << fit->help();
                return kExitUsage;
            }
            return cmd_fit(curve_files, search, fit_out, out);
        }
        if (point->parsed()) {
            const auto config = build_config(point_flags);
            if (point_flags.dump) {
                dump_config(out, config);
                return kExitOk;
            }
            if (point->count("lat") == 0 || point->count("lon") == 0)
                fail(kExitUsage, "point needs receiver lat and lon");
            return cmd_point(config, rx_lat, rx_lon, out);
        }
        if (cov->parsed()) {
            const auto config = build_config(cov_flags);
            if (cov_flags.dump) {
                dump_config(out, config);
                return kExitOk;
            }
            return cmd_coverage(config, out, err);
        }
        if (ea->parsed())
            return cmd_ea_table(sigmas, ea_table_path, ea_policy, out);
    } catch (const CommandFailure& e) {
        err << "error: " << e.what() << '\n';
        return e.code();
    }
    return kExitUsage;
}

} // namespace rmode::cli
