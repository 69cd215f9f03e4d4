#include "rmode/fitting.hpp"

#include "rmode/error.hpp"
#include "text_util.hpp"

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>

namespace rmode::fitting {

namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

// Parses "key=value" tokens of a curve header comment.
void parse_header_comment(std::string_view comment, std::optional<double>& sigma, DistanceUnit& units,
                          std::string& label, std::size_t line_no) {
    const auto label_pos = comment.find("label=");
    if (label_pos != std::string_view::npos) {
        label = std::string(detail::trim(comment.substr(label_pos + 6)));
        comment = comment.substr(0, label_pos);
    }
    for (const auto token : detail::split(comment)) {
        const auto eq = token.find('=');
        if (eq == std::string_view::npos)
            continue;
        const auto key = token.substr(0, eq);
        const auto value = token.substr(eq + 1);
        if (key == "sigma") {
            double v = 0.0;
            if (!detail::parse_double(value, v))
                throw ParseError("curve line " + std::to_string(line_no) + ": bad sigma '" + std::string(value) + "'");
            sigma = v;
        } else if (key == "units") {
            if (value == "m")
                units = DistanceUnit::m;
            else if (value == "km")
                units = DistanceUnit::km;
            else
                throw ParseError("curve line " + std::to_string(line_no) + ": units must be m or km");
        }
    }
}

} // namespace

ReferenceCurve read_curve(std::istream& in, const std::string& default_label) {
    std::optional<double> sigma;
    DistanceUnit units = DistanceUnit::m;
    std::string label = default_label;
    ReferenceCurve curve;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = detail::trim(line);
        if (body.empty())
            continue;
        if (body.front() == '#') {
            parse_header_comment(body.substr(1), sigma, units, label, line_no);
            continue;
        }
        const auto tokens = detail::split(detail::strip_comment(body), " \t\r,");
        CurveSample s;
        if ((tokens.size() != 2 && tokens.size() != 3) || !detail::parse_double(tokens[0], s.r_m) ||
            !detail::parse_double(tokens[1], s.field_dBuVm) ||
            (tokens.size() == 3 && !detail::parse_double(tokens[2], s.weight)))
            throw ParseError("curve line " + std::to_string(line_no) + ": expected 'r field_dBuVm [weight]'");
        curve.samples.push_back(s);
    }
    if (!sigma)
        throw ParseError("curve has no '# sigma=<S/m>' header");
    if (units == DistanceUnit::km) {
        for (auto& s : curve.samples)
            s.r_m *= 1000.0;
    }
    curve.sigma_S_per_m = *sigma;
    curve.source_label = label;
    return curve;
}

void write_curve(std::ostream& out, const ReferenceCurve& curve, DistanceUnit units) {
    const double scale = units == DistanceUnit::km ? 1e-3 : 1.0;
    out << "# sigma=" << detail::format_double(curve.sigma_S_per_m)
        << " units=" << (units == DistanceUnit::km ? "km" : "m") << '\n';
    if (!curve.source_label.empty())
        out << "# label=" << curve.source_label << '\n';
    for (const auto& s : curve.samples) {
        out << detail::format_double(s.r_m * scale) << ' ' << detail::format_double(s.field_dBuVm);
        if (s.weight != 1.0)
            out << ' ' << detail::format_double(s.weight);
        out << '\n';
    }
}

void write_fit_report(std::ostream& out, const FitResult& result) {
    out << "model: field = C - 10 log10(r^e) - ea r\n";
    out << "C_dBuVm     " << fmt("%.6f", result.params.C_dBuVm) << '\n';
    out << "e_exponent  " << fmt("%.6f", result.params.e_exponent) << '\n';
    out << "pooled_rms  " << fmt("%.3e", result.pooled_rms_dB) << " dB\n";
    out << "iterations  " << result.iterations << (result.converged ? "" : " (not converged)") << '\n';
    out << '\n';
    out << "sigma_S_per_m   ea_dB_per_m     rms_dB      samples  label\n";
    for (const auto& c : result.curves) {
        char line[160];
        std::snprintf(line, sizeof line, "%-15.6g %-15.6e %-11.3e %-8zu %s", c.sigma_S_per_m, c.ea_dB_per_m,
                      c.rms_dB, c.n_samples, c.source_label.c_str());
        out << line << '\n';
    }
}

void write_fit_params(std::ostream& out, const FitResult& result) {
    out << "C_dBuVm=" << detail::format_double(result.params.C_dBuVm) << '\n';
    out << "e_exponent=" << detail::format_double(result.params.e_exponent) << '\n';
    out << "pooled_rms_dB=" << detail::format_double(result.pooled_rms_dB) << '\n';
    out << "sse=" << detail::format_double(result.sse) << '\n';
    out << "iterations=" << result.iterations << '\n';
    out << "converged=" << (result.converged ? 1 : 0) << '\n';
    out << "curves=" << result.curves.size() << '\n';
    for (std::size_t i = 0; i < result.curves.size(); ++i) {
        const auto& c = result.curves[i];
        const std::string p = "curve." + std::to_string(i) + ".";
        out << p << "sigma_S_per_m=" << detail::format_double(c.sigma_S_per_m) << '\n';
        out << p << "ea_dB_per_m=" << detail::format_double(c.ea_dB_per_m) << '\n';
        out << p << "rms_dB=" << detail::format_double(c.rms_dB) << '\n';
        out << p << "label=" << c.source_label << '\n';
    }
}

PropagationParams read_params(std::istream& in) {
    std::optional<double> c;
    std::optional<double> e;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = detail::trim(detail::strip_comment(line));
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("params line " + std::to_string(line_no) + ": expected key=value");
        const auto key = detail::trim(body.substr(0, eq));
        const auto value = detail::trim(body.substr(eq + 1));
        if (key == "C_dBuVm" || key == "e_exponent") {
            double v = 0.0;
            if (!detail::parse_double(value, v))
                throw ParseError("params line " + std::to_string(line_no) + ": bad number for " + std::string(key));
            (key == "C_dBuVm" ? c : e) = v;
        }
    }
    if (!c || !e)
        throw ParseError("params file must define C_dBuVm and e_exponent");
    PropagationParams p{*c, *e};
    p.validate();
    return p;
}

} // namespace rmode::fitting
