#include "oracles.hpp"

#include "rmode/coverage.hpp"
#include "rmode/error.hpp"

#include <doctest.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <vector>

using namespace rmode;
using namespace rmode::coverage;
using conductivity::ConductivityRaster;
using conductivity::EaTable;
using conductivity::RasterData;
using propagation::Transmitter;

namespace {

const PropagationParams kParams = PropagationParams::mf_rmode();

struct DecodedPng {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;
    Rgb at(std::size_t x, std::size_t y) const {
        const auto* p = &rgb[(y * width + x) * 3];
        return {p[0], p[1], p[2]};
    }
};

DecodedPng decode(const std::string& bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    REQUIRE(png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) != 0);
    image.format = PNG_FORMAT_RGB;
    DecodedPng out;
    out.width = image.width;
    out.height = image.height;
    out.rgb.resize(PNG_IMAGE_SIZE(image));
    REQUIRE(png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr) != 0);
    return out;
}

CoverageGrid filled(std::size_t rows, std::size_t cols, double value) {
    CoverageGrid g;
    g.spec = {10.0, 20.0, 0.5, rows, cols};
    g.values.assign(rows * cols, value);
    return g;
}

// Land (poor ground) west of lon 0, sea east of it.
ConductivityRaster land_sea() {
    RasterData d;
    d.geometry = {-1.0, -2.0, 0.05, 40, 80};
    d.cells.resize(d.geometry.cell_count());
    for (std::size_t r = 0; r < 40; ++r)
        for (std::size_t c = 0; c < 80; ++c)
            d.cells[r * 80 + c] = c < 40 ? 5e-4 : 4.0;
    return ConductivityRaster(d);
}

} // namespace

TEST_CASE("3x3 grid around a centered transmitter") {
    const auto raster = ConductivityRaster::uniform({-1.0, -1.0, 0.01, 200, 200}, 0.005);
    const GridSpec spec{-0.015, -0.015, 0.01, 3, 3};
    const Transmitter tx{"c", spec.cell_center(1, 1), 0.0};
    const auto g = compute_coverage(tx, raster, EaTable::mf_rmode(), kParams, spec);
    REQUIRE(g.values.size() == 9);
    CHECK(g.at(1, 1) == doctest::Approx(kParams.C_dBuVm - 4.6e-5).epsilon(1e-12));
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            if (r == 1 && c == 1)
                continue;
            const auto p = spec.cell_center(r, c);
            const double d = oracle::chord_distance(0.0, 0.0, p.lat_deg(), p.lon_deg());
            CHECK(g.at(r, c) == doctest::Approx(oracle::model(195.876, 2.046, 4.6e-5, d)).epsilon(1e-9));
        }
    }
    CHECK(g.at(0, 0) == doctest::Approx(g.at(2, 2)).epsilon(1e-12));
    CHECK(g.at(0, 2) == doctest::Approx(g.at(2, 0)).epsilon(1e-12));
    CHECK(g.at(0, 0) == doctest::Approx(g.at(0, 2)).epsilon(1e-12));
    CHECK(g.metadata.near_field_cells == 1);
    CHECK(g.metadata.failed_cells == 0);
}

TEST_CASE("east-west symmetry on uniform ground") {
    const auto raster = ConductivityRaster::uniform({-5.0, -5.0, 0.1, 100, 100}, 0.002);
    const GridSpec spec{-1.0, -1.0, 0.2, 10, 10};
    const Transmitter tx{"t", {0.0, 0.0}, 0.0};
    const auto g = compute_coverage(tx, raster, EaTable::mf_rmode(), kParams, spec);
    for (std::size_t r = 0; r < 10; ++r)
        for (std::size_t c = 0; c < 5; ++c)
            CHECK(g.at(r, c) == doctest::Approx(g.at(r, 9 - c)).epsilon(1e-9));
}

TEST_CASE("invalid grid specs") {
    const auto raster = ConductivityRaster::uniform({0.0, 0.0, 1.0, 2, 2}, 0.005);
    const Transmitter tx{"t", {0.5, 0.5}, 0.0};
    const auto table = EaTable::mf_rmode();
    CHECK_THROWS_AS(compute_coverage(tx, raster, table, kParams, {0.0, 0.0, 0.1, 3, 0}), InvalidGridSpec);
    CHECK_THROWS_AS(compute_coverage(tx, raster, table, kParams, {0.0, 0.0, 0.1, 0, 3}), InvalidGridSpec);
    CHECK_THROWS_AS(compute_coverage(tx, raster, table, kParams, {0.0, 0.0, -0.1, 3, 3}), InvalidGridSpec);
    CHECK_THROWS_AS(compute_coverage(tx, raster, table, kParams, {89.0, 0.0, 1.0, 3, 3}), InvalidGridSpec);
    CHECK_THROWS_AS(compute_coverage(tx, raster, table, kParams, {0.0, 179.0, 1.0, 1, 3}), InvalidGridSpec);
}

TEST_CASE("1x1 CSV export") {
    auto g = filled(1, 1, 87.25);
    const auto csv = export_grid(g, ExportFormat::csv);
    CHECK(csv == "lat,lon,field_dBuVm\n10.25,20.25,87.25\n");
}

TEST_CASE("CSV rows run north to south then west to east") {
    CoverageGrid g = filled(2, 2, 0.0);
    g.values = {1.0, 2.0, 3.0, std::numeric_limits<double>::quiet_NaN()};
    const auto csv = export_grid(g, ExportFormat::csv);
    CHECK(csv == "lat,lon,field_dBuVm\n10.75,20.25,3\n10.75,20.75,NaN\n10.25,20.25,1\n10.25,20.75,2\n");
}

TEST_CASE("ESRI export round-trips within formatting precision") {
    const auto raster = land_sea();
    const GridSpec spec{-0.5, -1.0, 0.1, 10, 20};
    const auto g = compute_coverage({"t", {0.0, -0.3}, 0.0}, raster, EaTable::mf_rmode(), kParams, spec);
    const auto text = export_grid(g, ExportFormat::esri_ascii);
    std::istringstream in(text);
    const auto back = conductivity::read_raster_data(in, conductivity::RasterFormat::esri_ascii);
    CHECK(back.geometry.n_rows == 10);
    CHECK(back.geometry.n_cols == 20);
    CHECK(back.geometry.origin_lat_deg == -0.5);
    CHECK(back.geometry.origin_lon_deg == -1.0);
    CHECK(back.geometry.cell_size_deg == 0.1);
    for (std::size_t i = 0; i < g.values.size(); ++i)
        CHECK(back.cells[i] == doctest::Approx(g.values[i]).epsilon(1e-9));
}

TEST_CASE("all-failed grid exports nodata") {
    const auto g = filled(2, 3, std::numeric_limits<double>::quiet_NaN());
    std::istringstream in(export_grid(g, ExportFormat::esri_ascii));
    const auto back = conductivity::read_raster_data(in, conductivity::RasterFormat::esri_ascii);
    for (const double v : back.cells)
        CHECK(v == -9999.0);

    const auto png = decode(export_grid(g, ExportFormat::png));
    CHECK(png.width == 3);
    CHECK(png.height == 2);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 3; ++x)
            CHECK(png.at(x, y) == kNoDataColor);
}

TEST_CASE("PNG dimensions and orientation") {
    CoverageGrid g = filled(2, 3, 80.0);
    g.values[0] = 40.0;  // south-west
    g.values[5] = 120.0; // north-east
    const auto bytes = export_grid(g, ExportFormat::png);
    REQUIRE(bytes.size() > 8);
    CHECK(bytes.substr(1, 3) == "PNG");
    const auto png = decode(bytes);
    CHECK(png.width == 3);
    CHECK(png.height == 2);
    CHECK(png.at(0, 1) == Rgb{0, 0, 255});
    CHECK(png.at(2, 0) == Rgb{255, 0, 0});
    CHECK(png.at(1, 0) == Rgb{0, 255, 0});

    CHECK_THROWS_AS(export_grid(g, ExportFormat::png, {50.0, 50.0}), EncodingError);
}

TEST_CASE("colormap stops and clamping") {
    const PngOptions o;
    CHECK(colormap(40.0, o) == Rgb{0, 0, 255});
    CHECK(colormap(60.0, o) == Rgb{0, 255, 255});
    CHECK(colormap(80.0, o) == Rgb{0, 255, 0});
    CHECK(colormap(100.0, o) == Rgb{255, 255, 0});
    CHECK(colormap(120.0, o) == Rgb{255, 0, 0});
    CHECK(colormap(-50.0, o) == Rgb{0, 0, 255});
    CHECK(colormap(500.0, o) == Rgb{255, 0, 0});
    CHECK(colormap(70.0, o) == Rgb{0, 255, 128});
    CHECK(colormap(0.5, {0.0, 1.0}) == Rgb{0, 255, 0});
    CHECK_THROWS_AS(colormap(1.0, {2.0, 2.0}), ValueError);
    CHECK_FALSE(colormap(40.0, o) == kNoDataColor);
}

TEST_CASE("exports are deterministic and the sweep is thread-count independent") {
    const auto raster = land_sea();
    const GridSpec spec{-0.9, -1.9, 0.05, 36, 76};
    const Transmitter tx{"t", {0.1, -0.4}, 1.5};
    const auto table = EaTable::mf_rmode();
    const auto a = compute_coverage(tx, raster, table, kParams, spec, {{}, 1});
    const auto b = compute_coverage(tx, raster, table, kParams, spec, {{}, 1});
    const auto p4 = compute_coverage(tx, raster, table, kParams, spec, {{}, 4});
    const auto p0 = compute_coverage(tx, raster, table, kParams, spec, {{}, 0});
    const auto p7 = compute_coverage(tx, raster, table, kParams, spec, {{}, 7});
    for (const auto* other : {&b, &p4, &p0, &p7}) {
        REQUIRE(other->values.size() == a.values.size());
        CHECK(std::memcmp(other->values.data(), a.values.data(), a.values.size() * sizeof(double)) == 0);
        CHECK(export_grid(*other, ExportFormat::csv) == export_grid(a, ExportFormat::csv));
        CHECK(export_grid(*other, ExportFormat::esri_ascii) == export_grid(a, ExportFormat::esri_ascii));
        CHECK(export_metadata(*other) == export_metadata(a));
    }
}

TEST_CASE("uniform ground: field decreases with distance") {
    const auto raster = ConductivityRaster::uniform({-5.0, -5.0, 0.1, 100, 100}, 0.005);
    const GridSpec spec{-2.0, -2.0, 0.1, 40, 40};
    const Transmitter tx{"t", {0.33, -0.71}, 0.0};
    const auto g = compute_coverage(tx, raster, EaTable::mf_rmode(), kParams, spec, {{}, 4});
    std::vector<std::pair<double, double>> dv;
    for (std::size_t r = 0; r < 40; ++r)
        for (std::size_t c = 0; c < 40; ++c)
            dv.emplace_back(geo::great_circle_distance(tx.location, spec.cell_center(r, c)), g.at(r, c));
    std::sort(dv.begin(), dv.end());
    for (std::size_t i = 1; i < dv.size(); ++i)
        CHECK(dv[i].second <= dv[i - 1].second + 1e-9);
}

TEST_CASE("heterogeneous ground: a farther cell can be stronger") {
    const auto raster = land_sea();
    const GridSpec spec{-0.9, -1.9, 0.1, 18, 38};
    const Transmitter tx{"t", {0.0, 0.0}, 0.0};
    const auto g = compute_coverage(tx, raster, EaTable::mf_rmode(), kParams, spec);
    // by construction: 0.45 deg west over poor ground vs 0.55 deg east over sea
    const std::size_t row = 9;
    const auto west = spec.cell_center(row, 14);
    const auto east = spec.cell_center(row, 24);
    REQUIRE(geo::great_circle_distance(tx.location, east) > geo::great_circle_distance(tx.location, west));
    CHECK(g.at(row, 24) > g.at(row, 14));
}

TEST_CASE("failed cells become NaN and are counted") {
    const auto raster = ConductivityRaster::uniform({0.0, 0.0, 0.1, 10, 10}, 0.005);
    const GridSpec spec{0.0, 0.0, 0.1, 10, 20};
    SweepOptions opt;
    opt.trace.policy = conductivity::EaPolicy::exact_only;
    const auto g = compute_coverage({"t", {0.55, 0.25}, 0.0}, raster, EaTable::mf_rmode(), kParams, spec, opt);
    CHECK(g.metadata.failed_cells == 100);
    for (std::size_t r = 0; r < 10; ++r) {
        CHECK(std::isfinite(g.at(r, 3)));
        CHECK(std::isnan(g.at(r, 15)));
    }
    CHECK(export_grid(g, ExportFormat::csv).find("NaN") != std::string::npos);
}

TEST_CASE("fallback steps are recorded in metadata") {
    const auto raster = ConductivityRaster::uniform({0.0, 0.0, 0.1, 10, 10}, 0.005);
    const GridSpec spec{0.0, 0.0, 0.1, 10, 20};
    const auto g = compute_coverage({"tx-1", {0.52, 0.23}, 2.0}, raster, EaTable::mf_rmode(), kParams, spec);
    CHECK(g.metadata.failed_cells == 0);
    CHECK(g.metadata.fallback_steps > 0);
    const auto meta = export_metadata(g);
    CHECK(meta.find("transmitter_id=tx-1\n") != std::string::npos);
    CHECK(meta.find("power_offset_dB=2\n") != std::string::npos);
    CHECK(meta.find("ea_table_hash=" + EaTable::mf_rmode().fingerprint()) != std::string::npos);
    CHECK(meta.find("ea_policy=loglin_interp\n") != std::string::npos);
    CHECK(meta.find("failed_cells=0\n") != std::string::npos);
    CHECK(meta.find("advisory=") == std::string::npos);
}

TEST_CASE("export format names") {
    CHECK(parse_export_format("csv") == ExportFormat::csv);
    CHECK(parse_export_format("esri_ascii") == ExportFormat::esri_ascii);
    CHECK(parse_export_format("png") == ExportFormat::png);
    CHECK_THROWS_AS(parse_export_format("tiff"), ValueError);
    CHECK(file_extension(ExportFormat::esri_ascii) == ".asc");
}
