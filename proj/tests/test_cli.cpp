#include "oracles.hpp"

#include "rmode/cli.hpp"
#include "rmode/error.hpp"
#include "rmode/fitting.hpp"

#include <doctest.h>
#include <png.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace rmode;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "rmode-sim");
    std::ostringstream out;
    std::ostringstream err;
    Result r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("rmode_cli_test_" + std::to_string(::getpid()) + "_" +
                                             std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream(p) << content;
        return p.string();
    }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string uniform_asc(double sigma) {
    std::ostringstream os;
    os << "ncols 200\nnrows 100\nxllcorner -0.5\nyllcorner -0.5\ncellsize 0.01\nNODATA_value -9999\n";
    for (int r = 0; r < 100; ++r) {
        for (int c = 0; c < 200; ++c)
            os << (c ? " " : "") << sigma;
        os << '\n';
    }
    return os.str();
}

std::string tx_config(const std::string& raster) {
    return "tx.id = unit\ntx.lat = 0\ntx.lon = 0\nraster = " + raster + "\n";
}

double field_value(const std::string& line) {
    const auto pos = line.find("field_dBuVm=");
    REQUIRE(pos != std::string::npos);
    return std::stod(line.substr(pos + 12));
}

const double kLon100km = 1e5 / oracle::kR / oracle::kDeg;

// Restores RMODE_OUT_DIR on scope exit.
struct OutDirGuard {
    explicit OutDirGuard(const std::string& value) { ::setenv("RMODE_OUT_DIR", value.c_str(), 1); }
    ~OutDirGuard() { ::unsetenv("RMODE_OUT_DIR"); }
};

} // namespace

TEST_CASE("fit recovers the built-in table from curve files") {
    TempDir dir;
    const auto builtin = conductivity::EaTable::mf_rmode();
    std::vector<std::string> args{"fit"};
    for (const auto& row : builtin.rows()) {
        std::ostringstream os;
        os << "# sigma=" << row.sigma_S_per_m << " units=km\n";
        for (int km = 10; km <= 400; km += 10)
            os.precision(17), os << km << ' ' << oracle::model(195.876, 2.046, row.ea_dB_per_m, km * 1000.0) << '\n';
        args.push_back(dir.file("curve_" + std::to_string(args.size()) + ".txt", os.str()));
    }
    args.insert(args.end(), {"--out", dir / "fit"});
    const auto r = run_cli(args);
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);

    std::ifstream params_in(dir / "fit.params");
    const auto p = fitting::read_params(params_in);
    CHECK(std::fabs(p.C_dBuVm - 195.876) <= 0.01);
    CHECK(std::fabs(p.e_exponent - 2.046) <= 0.001);

    std::ifstream table_in(dir / "fit_ea.txt");
    const auto table = conductivity::parse_ea_table(table_in);
    const auto& ref = builtin.rows();
    REQUIRE(table.rows().size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(std::fabs(table.rows()[i].ea_dB_per_m - ref[i].ea_dB_per_m) <= 1e-8);
    CHECK(fs::exists(dir / "fit.report.txt"));
}

TEST_CASE("fit argument and input errors") {
    CHECK(run_cli({"fit"}).code == cli::kExitUsage);
    CHECK(run_cli({}).code == cli::kExitUsage);
    CHECK(run_cli({"bogus"}).code == cli::kExitUsage);

    TempDir dir;
    const auto missing = run_cli({"fit", dir / "nope.txt"});
    CHECK(missing.code == cli::kExitUsage);
    CHECK(missing.err.find("nope.txt") != std::string::npos);

    CHECK(run_cli({"fit", dir.file("bad.txt", "10 20\n")}).code == cli::kExitUsage);
    CHECK(run_cli({"fit", dir.file("short.txt", "# sigma=0.005\n1000 100\n2000 90\n")}).code == cli::kExitFit);
}

TEST_CASE("fit of a curve with zero extra attenuation") {
    TempDir dir;
    std::ostringstream os;
    os.precision(17);
    os << "# sigma=1\n";
    for (int km = 10; km <= 400; km += 10)
        os << km * 1000 << ' ' << oracle::model(190.0, 2.0, 0.0, km * 1000.0) << '\n';
    const auto r = run_cli({"fit", dir.file("c.txt", os.str()), "--out", dir / "z"});
    REQUIRE(r.code == cli::kExitOk);
    std::ifstream in(dir / "z_ea.txt");
    const auto table = conductivity::parse_ea_table(in);
    CHECK(std::fabs(table.rows()[0].ea_dB_per_m) < 1e-9);
}

TEST_CASE("point prediction") {
    TempDir dir;
    const auto raster = dir.file("u.asc", uniform_asc(0.005));
    const auto conf = dir.file("run.conf", tx_config("u.asc"));
    const std::string lon = std::to_string(kLon100km);

    const auto r = run_cli({"point", "--config", conf, "0", lon});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    CHECK(std::fabs(field_value(r.out) - 88.976) <= 1e-3);
    CHECK(r.out.find("advisory") == std::string::npos);

    const auto boosted = run_cli({"point", "--config", conf, "--set", "tx.power_offset_dB=3", "0", lon});
    REQUIRE(boosted.code == cli::kExitOk);
    CHECK(field_value(boosted.out) - field_value(r.out) == doctest::Approx(3.0).epsilon(1e-6));

    const auto eloran = run_cli({"point", "--config", conf, "--set", "model=eloran", "0", lon});
    REQUIRE(eloran.code == cli::kExitOk);
    CHECK(field_value(eloran.out) == doctest::Approx(189.353 - 100.0 - 4.6).epsilon(1e-6));

    // relative raster path resolves against the config file, not the cwd
    CHECK(raster.find(dir.path().string()) == 0);
}

TEST_CASE("point path failures exit 4") {
    TempDir dir;
    dir.file("u.asc", uniform_asc(0.005));
    const auto conf = dir.file("run.conf", tx_config("u.asc"));
    CHECK(run_cli({"point", "--config", conf, "0", "0"}).code == cli::kExitPath);
    const auto outside = run_cli({"point", "--config", conf, "--policy", "exact_only", "0", "2"});
    CHECK(outside.code == cli::kExitPath);
    CHECK(outside.err.find("outside") != std::string::npos);
    CHECK(run_cli({"point", "--config", conf, "0", "2"}).code == cli::kExitOk);
}

TEST_CASE("point usage errors exit 2") {
    TempDir dir;
    dir.file("u.asc", uniform_asc(0.005));
    const auto conf = dir.file("run.conf", tx_config("u.asc"));
    CHECK(run_cli({"point", "--config", conf}).code == cli::kExitUsage);
    CHECK(run_cli({"point", "--config", dir / "missing.conf", "0", "1"}).code == cli::kExitUsage);
    CHECK(run_cli({"point", "--config", conf, "--set", "no.such.key=1", "0", "1"}).code == cli::kExitUsage);
    CHECK(run_cli({"point", "--config", conf, "--policy", "cubic", "0", "1"}).code == cli::kExitUsage);
    CHECK(run_cli({"point", "--config", conf, "95", "1"}).code == cli::kExitUsage);
    const auto no_raster = run_cli({"point", "--set", "tx.lat=0", "--set", "tx.lon=0", "0", "1"});
    CHECK(no_raster.code == cli::kExitUsage);
}

TEST_CASE("coverage writes the requested exports") {
    TempDir dir;
    dir.file("u.asc", uniform_asc(4.0));
    const auto conf = dir.file("run.conf", tx_config("u.asc") +
                                               "grid.lat_min = -0.015\ngrid.lon_min = -0.015\n"
                                               "grid.cell_size_deg = 0.01\ngrid.rows = 3\ngrid.cols = 3\n");
    const auto r = run_cli({"coverage", "--config", conf, "--out", dir / "cov", "--format", "csv,png,esri_ascii"});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    CHECK(r.out.find("cells=9") != std::string::npos);
    CHECK(r.err.find("wall_time_s=") != std::string::npos);

    std::istringstream csv(read_file(dir / "cov.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "lat,lon,field_dBuVm");
    int rows = 0;
    while (std::getline(csv, line))
        ++rows;
    CHECK(rows == 9);

    const auto png = read_file(dir / "cov.png");
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    REQUIRE(png_image_begin_read_from_memory(&image, png.data(), png.size()) != 0);
    CHECK(image.width == 3);
    CHECK(image.height == 3);
    png_image_free(&image);

    CHECK(fs::exists(dir / "cov.asc"));
    const auto meta = read_file(dir / "cov.meta.txt");
    CHECK(meta.find("transmitter_id=unit") != std::string::npos);
    CHECK(meta.find("advisory=") != std::string::npos);
}

TEST_CASE("coverage input and export failures") {
    TempDir dir;
    const std::string grid = "grid.lat_min = 0\ngrid.lon_min = 0\ngrid.cell_size_deg = 0.1\ngrid.rows = 2\n"
                             "grid.cols = 2\n";
    const auto missing = run_cli({"coverage", "--config", dir.file("a.conf", tx_config("absent.asc") + grid)});
    CHECK(missing.code == cli::kExitUsage);
    CHECK(missing.err.find("absent.asc") != std::string::npos);

    dir.file("u.asc", uniform_asc(0.005));
    const auto conf = dir.file("b.conf", tx_config("u.asc") + grid);
    CHECK(run_cli({"coverage", "--config", dir.file("c.conf", tx_config("u.asc"))}).code == cli::kExitUsage);
    const auto bad_out = run_cli({"coverage", "--config", conf, "--out", dir / "no/such/dir/cov"});
    CHECK(bad_out.code == cli::kExitExport);
    CHECK(run_cli({"coverage", "--config", conf, "--format", "tiff"}).code == cli::kExitUsage);
    CHECK(run_cli({"coverage", "--config", conf, "--format", "png", "--set", "png.vmin=90", "--set",
                   "png.vmax=80", "--out", dir / "x"})
              .code == cli::kExitUsage);
}

TEST_CASE("RMODE_OUT_DIR redirects outputs") {
    TempDir dir;
    TempDir out_dir;
    dir.file("u.asc", uniform_asc(0.005));
    const auto conf = dir.file("run.conf", tx_config("u.asc") +
                                               "grid.lat_min = 0\ngrid.lon_min = 0\ngrid.cell_size_deg = 0.1\n"
                                               "grid.rows = 2\ngrid.cols = 2\nout = results/cov\n");
    const OutDirGuard guard(out_dir.path().string());
    const auto r = run_cli({"coverage", "--config", conf});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    CHECK(fs::exists(out_dir / "cov.csv"));
    CHECK(fs::exists(out_dir / "cov.meta.txt"));
    CHECK_FALSE(fs::exists(dir / "results"));
}

TEST_CASE("ea-table subcommand") {
    const auto r = run_cli({"ea-table", "0.005", "0.001", "4", "0.0014142"});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(r.out.find("sigma_S_per_m=0.005 ea_dB_per_m=4.600000e-05\n") != std::string::npos);
    CHECK(r.out.find("sigma_S_per_m=0.001 ea_dB_per_m=1.640000e-04\n") != std::string::npos);
    CHECK(r.out.find("sigma_S_per_m=4 ea_dB_per_m=-5.400000e-07\n") != std::string::npos);
    CHECK(r.out.find("(interpolated)") != std::string::npos);

    CHECK(run_cli({"ea-table", "--", "-1"}).code == cli::kExitUsage);
    CHECK(run_cli({"ea-table", "abc"}).code == cli::kExitUsage);
    CHECK(run_cli({"ea-table", "--policy", "exact_only", "0.003"}).code == cli::kExitUsage);
    const auto nearest = run_cli({"ea-table", "--policy", "nearest", "0.0011"});
    CHECK(nearest.out.find("1.640000e-04 (nearest)") != std::string::npos);
}

TEST_CASE("dump-config re-parses to the same configuration") {
    TempDir dir;
    dir.file("u.asc", uniform_asc(0.005));
    const auto conf = dir.file("run.conf", tx_config("u.asc") +
                                               "grid.lat_min = -0.25\ngrid.lon_min = 0.125\n"
                                               "grid.cell_size_deg = 0.005\ngrid.rows = 7\ngrid.cols = 9\n"
                                               "policy = nearest\nfallback_sigma = 0.01\nthreads = 3\n"
                                               "png.vmin = 30.5\ntx.power_offset_dB = -1.25\n");
    const auto r = run_cli({"coverage", "--config", conf, "--step-m", "1.5km", "--format", "png,csv", "--out",
                            dir / "o", "--dump-config"});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);

    std::istringstream first(r.out);
    const auto parsed = cli::parse_config(first, dir.path());
    CHECK(parsed.step_m == 1500.0);
    CHECK(parsed.policy == conductivity::EaPolicy::nearest);
    CHECK(parsed.threads == 3);
    REQUIRE(parsed.grid.has_value());
    CHECK(parsed.grid->n_cols == 9);
    CHECK(parsed.formats.size() == 2);

    std::ostringstream again;
    cli::dump_config(again, parsed);
    CHECK(again.str() == r.out);
    std::istringstream second(again.str());
    CHECK(cli::parse_config(second, dir.path()) == parsed);
}

TEST_CASE("config values are validated") {
    cli::RunConfig c;
    CHECK_THROWS_AS(cli::apply_setting(c, "tx.lat", "north", "/"), ConfigError);
    CHECK_THROWS_AS(cli::apply_setting(c, "grid.rows", "-3", "/"), ConfigError);
    CHECK_THROWS_AS(cli::apply_setting(c, "unknown", "1", "/"), ConfigError);
    CHECK_NOTHROW(cli::apply_setting(c, "raster", "data/x.asc", "/base"));
    CHECK(c.raster_path == "/base/data/x.asc");
    std::istringstream in("tx.lat = 1\nbroken line\n");
    CHECK_THROWS_AS(cli::parse_config(in, "/"), ConfigError);
}

TEST_CASE("parse_length_m") {
    CHECK(cli::parse_length_m("500") == 500.0);
    CHECK(cli::parse_length_m("500m") == 500.0);
    CHECK(cli::parse_length_m("2.5km") == 2500.0);
    CHECK(cli::parse_length_m(" 0 ") == 0.0);
    CHECK_THROWS_AS(cli::parse_length_m("5 miles"), ValueError);
    CHECK_THROWS_AS(cli::parse_length_m("-1"), ValueError);
    CHECK_THROWS_AS(cli::parse_length_m(""), ValueError);
}

TEST_CASE("the demo configuration runs") {
    TempDir out_dir;
    const OutDirGuard guard(out_dir.path().string());
    const auto r = run_cli({"coverage", "--config", RMODE_DATA_DIR "/demo.conf", "--set", "grid.rows=20", "--set",
                            "grid.cols=20", "--set", "grid.cell_size_deg=0.2"});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    CHECK(fs::exists(out_dir / "coverage.png"));
}
