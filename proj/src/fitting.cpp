#include "rmode/fitting.hpp"

#include "rmode/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>
#include <tuple>

namespace rmode::fitting {

namespace {

struct PreparedCurve {
    std::vector<double> r;
    std::vector<double> w;
    std::vector<double> ten_log_r; // 10 log10(r)
    std::vector<double> field;
    double sum_wrr = 0.0;
    double sum_w = 0.0;
};

PreparedCurve prepare(const ReferenceCurve& c) {
    PreparedCurve p;
    const auto n = c.samples.size();
    p.r.reserve(n);
    p.w.reserve(n);
    p.ten_log_r.reserve(n);
    p.field.reserve(n);
    for (const auto& s : c.samples) {
        p.r.push_back(s.r_m);
        p.w.push_back(s.weight);
        p.ten_log_r.push_back(10.0 * std::log10(s.r_m));
        p.field.push_back(s.field_dBuVm);
        p.sum_wrr += s.weight * s.r_m * s.r_m;
        p.sum_w += s.weight;
    }
    return p;
}

struct InnerFit {
    double ea = 0.0;
    double sse = 0.0; // weighted
};

InnerFit inner_fit(const PreparedCurve& p, double c, double e) {
    if (!(p.sum_wrr > 0.0))
        throw DegenerateCurve("curve has zero weighted sum of r^2; ea is undetermined");
    double num = 0.0;
    for (std::size_t k = 0; k < p.r.size(); ++k) {
        const double d = c - e * p.ten_log_r[k] - p.field[k];
        num += p.w[k] * d * p.r[k];
    }
    InnerFit out;
    out.ea = num / p.sum_wrr;
    for (std::size_t k = 0; k < p.r.size(); ++k) {
        const double res = c - e * p.ten_log_r[k] - out.ea * p.r[k] - p.field[k];
        out.sse += p.w[k] * res * res;
    }
    return out;
}

bool sample_less(const CurveSample& a, const CurveSample& b) {
    return std::tie(a.r_m, a.field_dBuVm, a.weight) < std::tie(b.r_m, b.field_dBuVm, b.weight);
}

// Content order of curves; makes the pooled sum independent of input order.
bool curve_less(const ReferenceCurve& a, const ReferenceCurve& b) {
    if (a.sigma_S_per_m != b.sigma_S_per_m)
        return a.sigma_S_per_m < b.sigma_S_per_m;
    if (a.samples.size() != b.samples.size())
        return a.samples.size() < b.samples.size();
    return std::lexicographical_compare(a.samples.begin(), a.samples.end(), b.samples.begin(), b.samples.end(),
                                        sample_less);
}

class PooledObjective {
public:
    explicit PooledObjective(std::span<const ReferenceCurve> curves) {
        std::vector<std::size_t> order(curves.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t i, std::size_t j) { return curve_less(curves[i], curves[j]); });
        for (std::size_t i : order)
            prepared_.push_back(prepare(curves[i]));
    }

    double operator()(double c, double e) const {
        double total = 0.0;
        for (const auto& p : prepared_)
            total += inner_fit(p, c, e).sse;
        return total;
    }

private:
    std::vector<PreparedCurve> prepared_;
};

void check_curves(std::span<const ReferenceCurve> curves) {
    if (curves.empty())
        throw NoCurves("at least one reference curve is required");
    for (const auto& c : curves)
        c.validate();
}

// Maps the unit box onto the search bounds so the simplex sees comparable
// scales along C and e.
struct BoxMap {
    double c0, c_span, e0, e_span;
    double c(double x) const { return c0 + x * c_span; }
    double e(double y) const { return e0 + y * e_span; }
};

struct NelderMeadOutcome {
    std::array<double, 2> best{};
    double f_best = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

template <typename F>
NelderMeadOutcome nelder_mead(const F& f, std::array<double, 2> start, std::array<double, 2> step,
                              const SearchConfig& cfg) {
    using Point = std::array<double, 2>;
    std::array<Point, 3> x{start, {start[0] + step[0], start[1]}, {start[0], start[1] + step[1]}};
    std::array<double, 3> fx{};
    NelderMeadOutcome out;
    for (int i = 0; i < 3; ++i)
        fx[i] = f(x[i][0], x[i][1]);
    out.evaluations += 3;

    auto eval = [&](const Point& p) {
        ++out.evaluations;
        return f(p[0], p[1]);
    };

    while (out.iterations < cfg.max_iterations) {
        // order vertices by value, ties by coordinates for determinism
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            return std::tie(fx[a], x[a][0], x[a][1]) < std::tie(fx[b], x[b][0], x[b][1]);
        });
        const std::array<Point, 3> xs{x[idx[0]], x[idx[1]], x[idx[2]]};
        const std::array<double, 3> fs{fx[idx[0]], fx[idx[1]], fx[idx[2]]};
        x = xs;
        fx = fs;

        double extent = 0.0;
        for (int i = 1; i < 3; ++i)
            for (int d = 0; d < 2; ++d)
                extent = std::max(extent, std::abs(x[i][d] - x[0][d]));
        const double spread = fx[2] - fx[0];
        const bool f_ok = spread <= cfg.rel_tol * std::abs(fx[0]);
        if ((f_ok && extent <= cfg.x_tol) || extent <= 1e-15) {
            out.converged = true;
            break;
        }
        ++out.iterations;

        const Point centroid{(x[0][0] + x[1][0]) / 2.0, (x[0][1] + x[1][1]) / 2.0};
        auto along = [&](double t) {
            return Point{centroid[0] + t * (x[2][0] - centroid[0]), centroid[1] + t * (x[2][1] - centroid[1])};
        };

        const Point xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < fx[0]) {
            const Point xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                x[2] = xe;
                fx[2] = fe;
            } else {
                x[2] = xr;
                fx[2] = fr;
            }
            continue;
        }
        if (fr < fx[1]) {
            x[2] = xr;
            fx[2] = fr;
            continue;
        }
        if (fr < fx[2]) {
            const Point xc = along(-0.5);
            const double fc = eval(xc);
            if (fc <= fr) {
                x[2] = xc;
                fx[2] = fc;
                continue;
            }
        } else {
            const Point xcc = along(0.5);
            const double fcc = eval(xcc);
            if (fcc < fx[2]) {
                x[2] = xcc;
                fx[2] = fcc;
                continue;
            }
        }
        // shrink toward the best vertex
        for (int i = 1; i < 3; ++i) {
            x[i] = Point{x[0][0] + 0.5 * (x[i][0] - x[0][0]), x[0][1] + 0.5 * (x[i][1] - x[0][1])};
            fx[i] = eval(x[i]);
        }
    }

    const auto best = std::min_element(fx.begin(), fx.end()) - fx.begin();
    out.best = x[best];
    out.f_best = fx[best];
    return out;
}

} // namespace

void ReferenceCurve::validate() const {
    if (!std::isfinite(sigma_S_per_m))
        throw NonFiniteInput("curve conductivity is not finite");
    for (const auto& s : samples) {
        if (!std::isfinite(s.r_m) || !std::isfinite(s.field_dBuVm) || !std::isfinite(s.weight))
            throw NonFiniteInput("curve '" + source_label + "' has a non-finite sample");
    }
    if (!(sigma_S_per_m > 0.0))
        throw ValueError("curve conductivity must be positive");
    if (samples.size() < 3)
        throw ValueError("curve '" + source_label + "' needs at least 3 samples");
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (!(samples[k].r_m > 0.0))
            throw ValueError("curve distances must be positive");
        if (k > 0 && !(samples[k - 1].r_m < samples[k].r_m))
            throw ValueError("curve distances must be strictly increasing");
        if (samples[k].weight < 0.0)
            throw ValueError("sample weights must be nonnegative");
    }
}

void SearchConfig::validate() const {
    if (!(c_min < c_max) || !(e_min < e_max) || !std::isfinite(c_min) || !std::isfinite(c_max) ||
        !std::isfinite(e_min) || !std::isfinite(e_max))
        throw ValueError("search bounds must be finite with min < max");
    if (c_steps < 2 || e_steps < 2)
        throw ValueError("search grid needs at least 2 points per axis");
    if (!(rel_tol > 0.0) || !(x_tol > 0.0))
        throw ValueError("search tolerances must be positive");
}

EaFit fit_ea_fixed_params(const ReferenceCurve& curve, const PropagationParams& params) {
    curve.validate();
    params.validate();
    const auto p = prepare(curve);
    const auto fit = inner_fit(p, params.C_dBuVm, params.e_exponent);
    return {fit.ea, p.sum_w > 0.0 ? std::sqrt(fit.sse / p.sum_w) : 0.0};
}

double profile_sse(std::span<const ReferenceCurve> curves, const PropagationParams& params) {
    check_curves(curves);
    return PooledObjective(curves)(params.C_dBuVm, params.e_exponent);
}

FitResult fit_global(std::span<const ReferenceCurve> curves, const SearchConfig& search) {
    check_curves(curves);
    search.validate();

    const PooledObjective objective(curves);
    const BoxMap box{search.c_min, search.c_max - search.c_min, search.e_min, search.e_max - search.e_min};
    auto f_unit = [&](double x, double y) { return objective(box.c(x), box.e(y)); };

    // Grid stage. Values land in a flat array; argmin is a single ordered
    // pass, so the chosen start point does not depend on thread count.
    const std::size_t nc = search.c_steps;
    const std::size_t ne = search.e_steps;
    std::vector<double> grid(nc * ne);
    auto fill = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const double x = static_cast<double>(k / ne) / static_cast<double>(nc - 1);
            const double y = static_cast<double>(k % ne) / static_cast<double>(ne - 1);
            grid[k] = f_unit(x, y);
        }
    };
    unsigned threads = search.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : search.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, grid.size()));
    if (threads <= 1) {
        fill(0, grid.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (grid.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(grid.size(), b + chunk);
            if (b < e)
                pool.emplace_back(fill, b, e);
        }
    }

    // strict < keeps the first minimum: smallest C, then smallest e
    std::size_t best_k = 0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (grid[k] < grid[best_k])
            best_k = k;
    }

    FitResult result;
    result.evaluations = grid.size();

    std::array<double, 2> start{static_cast<double>(best_k / ne) / static_cast<double>(nc - 1),
                                static_cast<double>(best_k % ne) / static_cast<double>(ne - 1)};
    std::array<double, 2> step{1.0 / static_cast<double>(nc - 1), 1.0 / static_cast<double>(ne - 1)};
    double f_best = grid[best_k];

    // Restart from the incumbent until a pass no longer improves it; guards
    // against a simplex that collapsed early in the narrow C/e valley.
    for (std::size_t pass = 0; pass <= search.max_restarts; ++pass) {
        const auto nm = nelder_mead(f_unit, start, step, search);
        result.iterations += nm.iterations;
        result.evaluations += nm.evaluations;
        const bool improved = nm.f_best < f_best - search.rel_tol * std::abs(f_best);
        if (nm.f_best <= f_best) {
            start = nm.best;
            f_best = nm.f_best;
        }
        result.converged = nm.converged;
        if (!improved && pass > 0)
            break;
        step = {step[0] * 1e-2, step[1] * 1e-2};
    }

    result.params = {box.c(start[0]), box.e(start[1])};
    result.params.validate();

    double total_w = 0.0;
    result.curves.reserve(curves.size());
    for (const auto& c : curves) {
        const auto p = prepare(c);
        const auto fit = inner_fit(p, result.params.C_dBuVm, result.params.e_exponent);
        result.curves.push_back({c.sigma_S_per_m, fit.ea, p.sum_w > 0.0 ? std::sqrt(fit.sse / p.sum_w) : 0.0,
                                 c.samples.size(), c.source_label});
        total_w += p.sum_w;
    }
    result.sse = objective(result.params.C_dBuVm, result.params.e_exponent);
    result.pooled_rms_dB = total_w > 0.0 ? std::sqrt(result.sse / total_w) : 0.0;
    return result;
}

std::vector<double> evaluate_residuals(const ReferenceCurve& curve, const PropagationParams& params,
                                       double ea_dB_per_m) {
    std::vector<double> out;
    out.reserve(curve.samples.size());
    for (const auto& s : curve.samples)
        out.push_back(params.field(s.r_m, ea_dB_per_m) - s.field_dBuVm);
    return out;
}

ReferenceCurve synthesize_curve(double sigma_S_per_m, const PropagationParams& params, double ea_dB_per_m,
                                std::span<const double> r_grid_m, std::string source_label) {
    if (r_grid_m.empty())
        throw InvalidGrid("distance grid is empty");
    for (std::size_t k = 0; k < r_grid_m.size(); ++k) {
        if (!(r_grid_m[k] > 0.0) || !std::isfinite(r_grid_m[k]))
            throw InvalidGrid("distance grid values must be positive and finite");
        if (k > 0 && !(r_grid_m[k - 1] < r_grid_m[k]))
            throw InvalidGrid("distance grid must be strictly increasing");
    }
    ReferenceCurve curve;
    curve.sigma_S_per_m = sigma_S_per_m;
    curve.source_label = std::move(source_label);
    curve.samples.reserve(r_grid_m.size());
    for (double r : r_grid_m)
        curve.samples.push_back({r, params.field(r, ea_dB_per_m), 1.0});
    return curve;
}

conductivity::EaTable ea_table_from_fit(const FitResult& result) {
    std::vector<conductivity::EaRow> rows;
    for (const auto& c : result.curves)
        rows.push_back({c.sigma_S_per_m, c.ea_dB_per_m});
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.sigma_S_per_m < b.sigma_S_per_m; });
    return conductivity::EaTable(std::move(rows));
}

} // namespace rmode::fitting
