#ifndef RMODE_CLI_HPP
#define RMODE_CLI_HPP

#include "rmode/conductivity.hpp"
#include "rmode/coverage.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rmode::cli {

/// Process exit codes. Stable; scripts depend on them.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,   ///< bad arguments, unreadable or malformed input files
    kExitFit = 3,     ///< fitting failed
    kExitPath = 4,    ///< path could not be evaluated (degenerate, outside raster, ...)
    kExitExport = 5,  ///< writing an output file failed
};

/// Everything a point or coverage run needs. Populated from a flat
/// key=value file, then overridden by command-line flags.
struct RunConfig {
    std::string tx_id = "tx";
    std::optional<double> tx_lat_deg;
    std::optional<double> tx_lon_deg;
    double power_offset_dB = 0.0;

    std::string raster_path;
    conductivity::RasterFormat raster_format = conductivity::RasterFormat::esri_ascii;
    std::string landcover_path; ///< when set, the raster holds land-cover codes
    std::string ea_table_path;  ///< empty = built-in MF R-Mode table
    std::string params_path;    ///< empty = the preset named by model
    std::string model = "mf_rmode";

    std::optional<coverage::GridSpec> grid;

    double step_m = 0.0; ///< 0 = raster default
    conductivity::EaPolicy policy = conductivity::EaPolicy::loglin_interp;
    double fallback_sigma_S_per_m = 4.0;
    unsigned threads = 0;

    std::string out; ///< output path prefix; empty = "coverage" in the working directory
    std::vector<coverage::ExportFormat> formats{coverage::ExportFormat::csv};
    coverage::PngOptions png;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses "500", "500m" or "2.5km" into meters. Throws ValueError.
double parse_length_m(std::string_view text);

/// Applies one key=value setting. Relative paths resolve against base_dir.
/// Throws ConfigError for unknown keys or malformed values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir);

/// Lines "key = value"; '#' comments and blank lines are ignored.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir, RunConfig base = {});

/// Writes every setting in the key=value dialect that parse_config reads.
void dump_config(std::ostream& out, const RunConfig& config);

/// Entry point shared by the rmode-sim binary and the tests. args[0] is
/// the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace rmode::cli

#endif
