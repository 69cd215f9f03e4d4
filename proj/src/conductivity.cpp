#include "rmode/conductivity.hpp"

#include "rmode/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace rmode::conductivity {

ConductivityRaster::ConductivityRaster(RasterData data) : data_(std::move(data)) {
    data_.geometry.validate();
    if (data_.cells.size() != data_.geometry.cell_count())
        throw ValueError("raster has " + std::to_string(data_.cells.size()) + " cells, geometry needs " +
                         std::to_string(data_.geometry.cell_count()));
    for (std::size_t i = 0; i < data_.cells.size(); ++i) {
        const double v = data_.cells[i];
        if (data_.is_nodata(v))
            continue;
        if (!std::isfinite(v) || v <= 0.0)
            throw ValueError("conductivity must be positive, found " + detail::format_double(v) +
                             " at row " + std::to_string(i / data_.geometry.n_cols) + " col " +
                             std::to_string(i % data_.geometry.n_cols));
    }
}

ConductivityRaster ConductivityRaster::uniform(const GridGeometry& geometry, double sigma_S_per_m) {
    RasterData data;
    data.geometry = geometry;
    data.cells.assign(geometry.cell_count(), sigma_S_per_m);
    return ConductivityRaster(std::move(data));
}

CellLookup cell_at(const ConductivityRaster& raster, const geo::GeoPoint& p) {
    const auto& g = raster.geometry();
    const double fr = (p.lat_deg() - g.origin_lat_deg) / g.cell_size_deg;
    const double fc = (p.lon_deg() - g.origin_lon_deg) / g.cell_size_deg;
    CellLookup out;
    if (!(fr >= 0.0) || !(fc >= 0.0))
        return out;
    const double rf = std::floor(fr);
    const double cf = std::floor(fc);
    if (rf >= static_cast<double>(g.n_rows) || cf >= static_cast<double>(g.n_cols))
        return out;
    out.row = static_cast<std::size_t>(rf);
    out.col = static_cast<std::size_t>(cf);
    if (raster.is_nodata(out.row, out.col)) {
        out.status = CellStatus::nodata;
        return out;
    }
    out.status = CellStatus::ok;
    out.sigma = raster.sigma(out.row, out.col);
    return out;
}

void LandCoverMapping::add(long class_code, double sigma_S_per_m) {
    if (!(sigma_S_per_m > 0.0) || !std::isfinite(sigma_S_per_m))
        throw ValueError("land-cover class " + std::to_string(class_code) + ": conductivity must be positive");
    if (!entries_.emplace(class_code, sigma_S_per_m).second)
        throw ValueError("land-cover class " + std::to_string(class_code) + " mapped twice");
}

const double* LandCoverMapping::find(long class_code) const {
    const auto it = entries_.find(class_code);
    return it == entries_.end() ? nullptr : &it->second;
}

LandCoverMapping parse_landcover_mapping(std::istream& in) {
    LandCoverMapping mapping;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = detail::split(detail::strip_comment(line));
        if (tokens.empty())
            continue;
        long code = 0;
        double sigma = 0.0;
        if (tokens.size() != 2 || !detail::parse_long(tokens[0], code) || !detail::parse_double(tokens[1], sigma))
            throw ParseError("land-cover mapping line " + std::to_string(line_no) +
                             ": expected 'class_code conductivity_S_per_m'");
        mapping.add(code, sigma);
    }
    return mapping;
}

ConductivityRaster apply_landcover_mapping(const RasterData& classes, const LandCoverMapping& mapping) {
    RasterData out;
    out.geometry = classes.geometry;
    // nodata sentinel carried over; it can never collide with a positive
    // conductivity unless the source used a positive sentinel
    out.nodata_value = classes.nodata_value;
    out.cells.resize(classes.cells.size());
    for (std::size_t i = 0; i < classes.cells.size(); ++i) {
        const double v = classes.cells[i];
        if (classes.is_nodata(v)) {
            out.cells[i] = v;
            continue;
        }
        if (!std::isfinite(v) || v != std::trunc(v))
            throw ValueError("land-cover code " + detail::format_double(v) + " is not an integer");
        const auto code = static_cast<long>(v);
        const double* sigma = mapping.find(code);
        if (sigma == nullptr)
            throw UnmappedClass(code);
        out.cells[i] = *sigma;
    }
    return ConductivityRaster(std::move(out));
}

EaPolicy parse_policy(std::string_view name) {
    if (name == "exact_only")
        return EaPolicy::exact_only;
    if (name == "loglin_interp")
        return EaPolicy::loglin_interp;
    if (name == "nearest")
        return EaPolicy::nearest;
    throw ValueError("unknown ea policy '" + std::string(name) +
                     "' (expected exact_only, loglin_interp or nearest)");
}

std::string_view to_string(EaPolicy policy) {
    switch (policy) {
    case EaPolicy::exact_only:
        return "exact_only";
    case EaPolicy::loglin_interp:
        return "loglin_interp";
    case EaPolicy::nearest:
        return "nearest";
    }
    return "?";
}

EaTable::EaTable(std::vector<EaRow> rows) : rows_(std::move(rows)) {
    if (rows_.empty())
        throw ValueError("ea table is empty");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& r = rows_[i];
        if (!(r.sigma_S_per_m > 0.0) || !std::isfinite(r.sigma_S_per_m))
            throw ValueError("ea table conductivities must be positive");
        if (!std::isfinite(r.ea_dB_per_m))
            throw ValueError("ea table values must be finite");
        if (i > 0 && !(rows_[i - 1].sigma_S_per_m < r.sigma_S_per_m))
            throw ValueError("ea table conductivities must be strictly increasing");
    }
}

EaTable EaTable::mf_rmode() {
    return EaTable({
        {5e-4, 2.24e-4},
        {1e-3, 1.64e-4},
        {2e-3, 1.04e-4},
        {5e-3, 4.60e-5},
        {8e-3, 2.89e-5},
        {1e-2, 2.37e-5},
        {4.0, -5.40e-7},
    });
}

std::string EaTable::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double v) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& r : rows_) {
        mix(r.sigma_S_per_m);
        mix(r.ea_dB_per_m);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

EaTable parse_ea_table(std::istream& in) {
    std::vector<EaRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = detail::split(detail::strip_comment(line));
        if (tokens.empty())
            continue;
        EaRow row;
        if (tokens.size() != 2 || !detail::parse_double(tokens[0], row.sigma_S_per_m) ||
            !detail::parse_double(tokens[1], row.ea_dB_per_m))
            throw ParseError("ea table line " + std::to_string(line_no) + ": expected 'sigma_S_per_m ea_dB_per_m'");
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(),
              [](const EaRow& a, const EaRow& b) { return a.sigma_S_per_m < b.sigma_S_per_m; });
    return EaTable(std::move(rows));
}

void write_ea_table(std::ostream& out, const EaTable& table) {
    out << "# sigma_S_per_m ea_dB_per_m\n";
    for (const auto& r : table.rows())
        out << detail::format_double(r.sigma_S_per_m) << ' ' << detail::format_double(r.ea_dB_per_m) << '\n';
}

EaLookup lookup_ea(double sigma, const EaTable& table, EaPolicy policy) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InvalidSigma("conductivity must be positive, got " + detail::format_double(sigma));

    const auto& rows = table.rows();
    // first row with sigma_row >= sigma
    const auto it = std::lower_bound(rows.begin(), rows.end(), sigma,
                                     [](const EaRow& r, double s) { return r.sigma_S_per_m < s; });
    auto is_hit = [sigma](const EaRow& r) {
        return std::abs(r.sigma_S_per_m - sigma) <= 1e-12 * r.sigma_S_per_m;
    };
    if (it != rows.end() && is_hit(*it))
        return {it->ea_dB_per_m, true};
    if (it != rows.begin() && is_hit(*std::prev(it)))
        return {std::prev(it)->ea_dB_per_m, true};

    switch (policy) {
    case EaPolicy::exact_only:
        throw NotInTable("conductivity " + detail::format_double(sigma) + " S/m is not a table row");
    case EaPolicy::loglin_interp: {
        if (it == rows.begin())
            return {rows.front().ea_dB_per_m, false};
        if (it == rows.end())
            return {rows.back().ea_dB_per_m, false};
        const auto& lo = *std::prev(it);
        const auto& hi = *it;
        const double t = (std::log10(sigma) - std::log10(lo.sigma_S_per_m)) /
                         (std::log10(hi.sigma_S_per_m) - std::log10(lo.sigma_S_per_m));
        return {lo.ea_dB_per_m + t * (hi.ea_dB_per_m - lo.ea_dB_per_m), false};
    }
    case EaPolicy::nearest: {
        if (it == rows.begin())
            return {rows.front().ea_dB_per_m, false};
        if (it == rows.end())
            return {rows.back().ea_dB_per_m, false};
        const auto& lo = *std::prev(it);
        const auto& hi = *it;
        const double ls = std::log10(sigma);
        const double d_lo = ls - std::log10(lo.sigma_S_per_m);
        const double d_hi = std::log10(hi.sigma_S_per_m) - ls;
        return {d_hi < d_lo ? hi.ea_dB_per_m : lo.ea_dB_per_m, false};
    }
    }
    return {};
}

} // namespace rmode::conductivity
