#ifndef RMODE_FITTING_HPP
#define RMODE_FITTING_HPP

#include "rmode/conductivity.hpp"
#include "rmode/params.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rmode::fitting {

struct CurveSample {
    double r_m = 0.0;
    double field_dBuVm = 0.0;
    double weight = 1.0;
};

/// Field strength against distance over homogeneous ground of one
/// conductivity, typically tabulated output of an external ground-wave
/// program.
struct ReferenceCurve {
    double sigma_S_per_m = 0.0;
    std::vector<CurveSample> samples;
    std::string source_label;

    /// Throws NonFiniteInput for a non-finite value, ValueError when there
    /// are fewer than 3 samples, r is not strictly increasing and positive,
    /// a weight is negative, or sigma is not positive.
    void validate() const;
};

struct EaFit {
    double ea_dB_per_m = 0.0;
    double rms_dB = 0.0;
};

/// Least-squares ea for fixed (C, e). Closed form:
///     d_k = C - 10 e log10(r_k) - F_k,   ea = sum w_k d_k r_k / sum w_k r_k^2
/// Throws DegenerateCurve if sum w_k r_k^2 == 0.
EaFit fit_ea_fixed_params(const ReferenceCurve& curve, const PropagationParams& params);

/// Outer search for the joint (C, e) fit. A coarse grid over the bounds
/// picks the start point for a Nelder-Mead refinement; each curve's ea is
/// always profiled out in closed form.
struct SearchConfig {
    double c_min = 150.0;
    double c_max = 250.0;
    double e_min = 1.5;
    double e_max = 3.0;
    std::size_t c_steps = 41;
    std::size_t e_steps = 31;
    /// Relative spread of the simplex SSE values required to stop.
    double rel_tol = 1e-9;
    /// Simplex extent (in search-box-normalized units) also required to stop.
    double x_tol = 1e-9;
    std::size_t max_iterations = 20000;
    std::size_t max_restarts = 8;
    /// Worker threads for the grid stage; 0 = hardware concurrency.
    unsigned threads = 1;

    void validate() const;
};

struct CurveFit {
    double sigma_S_per_m = 0.0;
    double ea_dB_per_m = 0.0;
    double rms_dB = 0.0;
    std::size_t n_samples = 0;
    std::string source_label;
};

struct FitResult {
    PropagationParams params;
    std::vector<CurveFit> curves; ///< same order as the input curves
    double pooled_rms_dB = 0.0;
    double sse = 0.0;
    std::size_t iterations = 0;  ///< Nelder-Mead iterations over all restarts
    std::size_t evaluations = 0; ///< objective evaluations including the grid
    bool converged = false;
};

/// Pooled SSE over all curves at (C, e) with every ea profiled out.
double profile_sse(std::span<const ReferenceCurve> curves, const PropagationParams& params);

/// Throws NoCurves on an empty list and NonFiniteInput on a non-finite
/// sample; see ReferenceCurve::validate for the other checks.
FitResult fit_global(std::span<const ReferenceCurve> curves, const SearchConfig& search = {});

/// model(r_k) - F_k for every sample.
std::vector<double> evaluate_residuals(const ReferenceCurve& curve, const PropagationParams& params,
                                       double ea_dB_per_m);

/// Exact model evaluations on r_grid. Throws InvalidGrid unless r_grid is
/// non-empty, positive and strictly increasing.
ReferenceCurve synthesize_curve(double sigma_S_per_m, const PropagationParams& params, double ea_dB_per_m,
                                std::span<const double> r_grid_m, std::string source_label = "synthetic");

enum class DistanceUnit { m, km };

/// Curve file: a "# sigma=<S/m> units=<m|km>" header line, then rows
/// "r field_dBuVm [weight]". Other '#' lines are comments; "# label=..."
/// sets the source label.
ReferenceCurve read_curve(std::istream& in, const std::string& default_label = "");
void write_curve(std::ostream& out, const ReferenceCurve& curve, DistanceUnit units = DistanceUnit::m);

/// Human-readable table of parameters, per-curve ea and residuals.
void write_fit_report(std::ostream& out, const FitResult& result);

/// key=value export. C_dBuVm and e_exponent are what read_params needs.
void write_fit_params(std::ostream& out, const FitResult& result);

/// Reads C_dBuVm and e_exponent from a key=value file; unknown keys are
/// ignored. Throws ParseError when either is missing or malformed.
PropagationParams read_params(std::istream& in);

/// (sigma, ea) pairs of a fit as a table. Throws ValueError when two curves
/// share a conductivity.
conductivity::EaTable ea_table_from_fit(const FitResult& result);

} // namespace rmode::fitting

#endif
