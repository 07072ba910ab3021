// Downstream products of a fitted law: compute-optimal allocation under
// C = 6ND, held-out evaluation, robustness curves, monotonicity checks,
// differential-perspective diagnostics, and law-vs-law surface deltas.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scalefit/core.hpp"
#include "scalefit/nonlinear.hpp"
#include "scalefit/piecewise.hpp"
#include "scalefit/report.hpp"

namespace scalefit {

inline constexpr double kFlopFactorDefault = 6.0;  // C = 6 N D

struct AllocationBracket {
    double n_lo = 1e6;
    double n_hi = 1e14;
};

struct AllocationPoint {
    double c = 0;
    double n_star = 0;
    double d_star = 0;
    double ratio = 0;        // d_star / n_star
    double loss_at_opt = 0;
    bool boundary_warning = false;  // minimizer at the search bracket edge
};

// Minimizes L(n, c/(f*n)) over log n: a coarse bracketing scan of the search
// interval followed by golden-section refinement to 1e-6 relative width.
// The scan is needed because fitted laws can be multimodal along the
// constraint slice once pushed far outside their calibration domain.
inline AllocationPoint optimal_allocation(const LawParams& law, double c,
                                          const AllocationBracket& bracket = {},
                                          double flop_factor = kFlopFactorDefault) {
    if (!(c > 0) || !std::isfinite(c)) throw evaluation_error("optimal_allocation: c must be positive");
    if (!(bracket.n_lo > 0) || !(bracket.n_hi > bracket.n_lo))
        throw evaluation_error("optimal_allocation: bad bracket");
    const double t_lo = std::log(bracket.n_lo);
    const double t_hi = std::log(bracket.n_hi);

    auto f = [&](double t) {
        const double n = std::exp(t);
        const double d = c / (flop_factor * n);
        try {
            return eval_law(law, n, d);
        } catch (const evaluation_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    constexpr int kScan = 65;
    double best_t = t_lo;
    double best_f = std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i < kScan; ++i) {
        const double t = t_lo + (t_hi - t_lo) * i / (kScan - 1);
        const double v = f(t);
        if (v < best_f) { best_f = v; best_t = t; best_i = i; }
    }
    double a = best_i > 0 ? t_lo + (t_hi - t_lo) * (best_i - 1) / (kScan - 1) : t_lo;
    double b = best_i < kScan - 1 ? t_lo + (t_hi - t_lo) * (best_i + 1) / (kScan - 1) : t_hi;

    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > 1e-6) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        }
    }
    double t_star = (a + b) / 2;
    if (f(best_t) < f(t_star)) t_star = best_t;  // guard against a flat golden collapse

    AllocationPoint out;
    out.c = c;
    out.n_star = std::exp(t_star);
    out.d_star = c / (flop_factor * out.n_star);
    out.ratio = out.d_star / out.n_star;
    out.loss_at_opt = f(t_star);
    out.boundary_warning = (t_star - t_lo) < 1e-3 || (t_hi - t_star) < 1e-3;
    return out;
}

inline std::vector<AllocationPoint> allocation_sweep(const LawParams& law, std::span<const double> c_values,
                                                     const AllocationBracket& bracket = {},
                                                     double flop_factor = kFlopFactorDefault) {
    std::vector<AllocationPoint> out;
    out.reserve(c_values.size());
    for (double c : c_values) out.push_back(optimal_allocation(law, c, bracket, flop_factor));
    return out;
}

struct EvalReport {
    std::vector<PointError> held_out;
    double mean_rel_err = 0;
    double max_rel_err = 0;
    std::string fit_subset_description;
};

inline EvalReport evaluate_held_out(const LawParams& law, std::span<const LossPoint> points,
                                    std::string subset_description = {}) {
    if (points.empty()) throw fit_error("evaluate_held_out: no points");
    EvalReport out;
    out.fit_subset_description = std::move(subset_description);
    double sum = 0;
    for (const auto& p : points) {
        PointError e;
        e.n = p.n;
        e.d = p.d;
        e.actual = p.loss;
        e.predicted = eval_law(law, p.n, p.d);
        e.rel_err = std::fabs(e.predicted - e.actual) / e.actual;
        sum += e.rel_err;
        out.max_rel_err = std::max(out.max_rel_err, e.rel_err);
        out.held_out.push_back(e);
    }
    out.mean_rel_err = sum / static_cast<double>(out.held_out.size());
    return out;
}

enum class FitMethod { piecewise, nonlinear };

struct RobustnessEntry {
    double cap = 0;
    int fit_points = 0;
    EvalReport report;
};

struct RobustnessCurve {
    std::vector<RobustnessEntry> entries;
    std::vector<std::string> warnings;
};

// Fits on {points with n <= cap, n != held_out_n} for each cap and evaluates
// on the held-out model size. Caps whose subset cannot form a valid grid (or
// cannot be fitted) are skipped with a warning.
inline RobustnessCurve robustness_curve(const LossGrid& grid, double held_out_n,
                                        std::span<const double> n_caps, FitMethod method, Family family,
                                        const MultiStartConfig& cfg = {}) {
    if (method == FitMethod::piecewise && family == Family::chinchilla)
        throw std::invalid_argument("robustness_curve: piecewise fitting applies to the farseer family only");

    std::vector<LossPoint> held;
    for (const auto& p : grid.points())
        if (std::fabs(p.n - held_out_n) <= 1e-9 * held_out_n) held.push_back(p);
    if (held.empty())
        throw fit_error("robustness_curve: no grid points at held-out n=" + std::to_string(held_out_n));

    RobustnessCurve out;
    for (double cap : n_caps) {
        std::vector<LossPoint> subset;
        for (const auto& p : grid.points()) {
            if (std::fabs(p.n - held_out_n) <= 1e-9 * held_out_n) continue;
            if (p.n <= cap * (1 + 1e-12)) subset.push_back(p);
        }
        try {
            LossGrid sub(subset, grid.lambda());
            LawParams law;
            if (method == FitMethod::piecewise) {
                law = LawParams::make(fit_farseer(sub).params);
            } else if (family == Family::farseer) {
                law = fit_farseer_nonlinear(sub, cfg).params;
            } else {
                law = fit_chinchilla_nonlinear(sub, cfg).params;
            }
            RobustnessEntry entry;
            entry.cap = cap;
            entry.fit_points = static_cast<int>(subset.size());
            entry.report = evaluate_held_out(law, held,
                                             "n <= " + std::to_string(cap) + ", held out n=" +
                                                 std::to_string(held_out_n));
            out.entries.push_back(std::move(entry));
        } catch (const error& e) {
            out.warnings.push_back("cap " + std::to_string(cap) + " skipped: " + e.what());
        }
    }
    return out;
}

struct MonotonicityViolation {
    double n = 0;
    double d = 0;
    char axis = 'n';      // 'n' or 'd'
    double derivative = 0;  // non-negative central-difference estimate
};

struct MonotonicityReport {
    int checked = 0;
    std::vector<MonotonicityViolation> violations;
};

// Central finite differences of L along each axis over a log-spaced lattice;
// any non-negative estimate is reported (not an error).
inline MonotonicityReport monotonicity_check(const LawParams& law, double n_lo, double n_hi, double d_lo,
                                             double d_hi, int samples_per_axis) {
    if (samples_per_axis < 2) throw fit_error("monotonicity_check: need >= 2 samples per axis");
    if (!(n_lo > 0) || !(n_hi > n_lo) || !(d_lo > 0) || !(d_hi > d_lo))
        throw fit_error("monotonicity_check: bad ranges");
    MonotonicityReport out;
    constexpr double h = 1e-4;  // log-space half-step
    for (int i = 0; i < samples_per_axis; ++i) {
        const double n = n_lo * std::pow(n_hi / n_lo, static_cast<double>(i) / (samples_per_axis - 1));
        for (int j = 0; j < samples_per_axis; ++j) {
            const double d = d_lo * std::pow(d_hi / d_lo, static_cast<double>(j) / (samples_per_axis - 1));
            const double dn = (eval_law(law, n * std::exp(h), d) - eval_law(law, n * std::exp(-h), d)) / (2 * h);
            const double dd = (eval_law(law, n, d * std::exp(h)) - eval_law(law, n, d * std::exp(-h))) / (2 * h);
            ++out.checked;
            if (!(dn < 0)) out.violations.push_back({n, d, 'n', dn});
            if (!(dd < 0)) out.violations.push_back({n, d, 'd', dd});
        }
    }
    return out;
}

struct PerspectiveSummary {
    std::string name;   // e.g. "diff_d_vs_d"
    bool available = false;
    int series_count = 0;
    double mean_r2 = 0;
};

namespace detail {

// Pairs each value with the nearest ladder point to lambda*v (1% relative
// tolerance); returns (index, partner index).
inline std::vector<std::pair<std::size_t, std::size_t>> ladder_pairs(const std::vector<double>& v,
                                                                     double lambda) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double target = lambda * v[i];
        std::size_t best = i;
        double err = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double e = std::fabs(v[j] - target);
            if (e < err) { err = e; best = j; }
        }
        if (err <= 0.01 * target && v[best] > v[i]) out.emplace_back(i, best);
    }
    return out;
}

inline std::optional<double> series_r2(const std::vector<double>& lx, const std::vector<double>& ly) {
    if (lx.size() < 3) return std::nullopt;
    try {
        return linear_fit(lx, ly).r2;
    } catch (const fit_error&) {
        return std::nullopt;
    }
}

}  // namespace detail

// The four log-log difference regressions: Delta_D against D and N, and
// Delta_N against D and N, each summarized by its mean r^2 across series.
inline std::vector<PerspectiveSummary> differential_perspectives(const LossGrid& grid) {
    const double lambda = grid.lambda();
    const auto ns = grid.model_sizes();

    // Common d-ladder: union of all data sizes (exact values).
    std::vector<double> ds;
    for (const auto& p : grid.points()) ds.push_back(p.d);
    std::sort(ds.begin(), ds.end());
    ds.erase(std::unique(ds.begin(), ds.end()), ds.end());

    const auto d_pairs = detail::ladder_pairs(ds, lambda);
    const auto n_pairs = detail::ladder_pairs(ns, lambda);

    // diff_d[(n_idx, d_idx)] = L(n, d) - L(n, lambda d), positive only
    std::map<std::pair<std::size_t, std::size_t>, double> diff_d, diff_n;
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        for (const auto& [di, dj] : d_pairs) {
            const LossPoint* a = grid.find(ns[ni], ds[di]);
            const LossPoint* b = grid.find(ns[ni], ds[dj]);
            if (!a || !b) continue;
            const double r = a->loss - b->loss;
            if (r > 0) diff_d[{ni, di}] = r;
        }
    }
    for (const auto& [ni, nj] : n_pairs) {
        for (std::size_t di = 0; di < ds.size(); ++di) {
            const LossPoint* a = grid.find(ns[ni], ds[di]);
            const LossPoint* b = grid.find(ns[nj], ds[di]);
            if (!a || !b) continue;
            const double r = a->loss - b->loss;
            if (r > 0) diff_n[{ni, di}] = r;
        }
    }

    auto summarize = [](std::string name, const std::vector<std::vector<std::pair<double, double>>>& series) {
        PerspectiveSummary s;
        s.name = std::move(name);
        double sum = 0;
        for (const auto& ser : series) {
            std::vector<double> lx, ly;
            for (const auto& [x, y] : ser) {
                lx.push_back(std::log(x));
                ly.push_back(std::log(y));
            }
            if (auto r2 = detail::series_r2(lx, ly)) {
                sum += *r2;
                ++s.series_count;
            }
        }
        s.available = s.series_count > 0;
        s.mean_r2 = s.available ? sum / s.series_count : 0.0;
        return s;
    };

    std::vector<std::vector<std::pair<double, double>>> dd_vs_d, dd_vs_n, dn_vs_d, dn_vs_n;
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        std::vector<std::pair<double, double>> ser;
        for (const auto& [key, r] : diff_d)
            if (key.first == ni) ser.emplace_back(ds[key.second], r);
        if (!ser.empty()) dd_vs_d.push_back(std::move(ser));
    }
    for (std::size_t di = 0; di < ds.size(); ++di) {
        std::vector<std::pair<double, double>> ser;
        for (const auto& [key, r] : diff_d)
            if (key.second == di) ser.emplace_back(ns[key.first], r);
        if (!ser.empty()) dd_vs_n.push_back(std::move(ser));
    }
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        std::vector<std::pair<double, double>> ser;
        for (const auto& [key, r] : diff_n)
            if (key.first == ni) ser.emplace_back(ds[key.second], r);
        if (!ser.empty()) dn_vs_d.push_back(std::move(ser));
    }
    for (std::size_t di = 0; di < ds.size(); ++di) {
        std::vector<std::pair<double, double>> ser;
        for (const auto& [key, r] : diff_n)
            if (key.second == di) ser.emplace_back(ns[key.first], r);
        if (!ser.empty()) dn_vs_n.push_back(std::move(ser));
    }

    return {summarize("diff_d_vs_d", dd_vs_d), summarize("diff_d_vs_n", dd_vs_n),
            summarize("diff_n_vs_d", dn_vs_d), summarize("diff_n_vs_n", dn_vs_n)};
}

struct SurfaceDelta {
    std::vector<double> n_values;
    std::vector<double> d_values;
    std::vector<double> delta;  // row-major [n_index * d_count + d_index], (L_a - L_b) / L_b
    std::vector<std::pair<double, double>> zero_crossings;  // interpolated (n, d) sign changes
    bool has_crossings = false;
};

// Normalized relative difference between two laws over a log-spaced lattice,
// with the sign-change contour located by per-cell linear interpolation
// along lattice edges.
inline SurfaceDelta surface_compare(const LawParams& law_a, const LawParams& law_b, double n_lo, double n_hi,
                                    double d_lo, double d_hi, int resolution = 50) {
    if (resolution < 2) throw fit_error("surface_compare: resolution must be >= 2");
    if (!(n_lo > 0) || !(n_hi > n_lo) || !(d_lo > 0) || !(d_hi > d_lo))
        throw fit_error("surface_compare: bad ranges");
    SurfaceDelta out;
    for (int i = 0; i < resolution; ++i)
        out.n_values.push_back(n_lo * std::pow(n_hi / n_lo, static_cast<double>(i) / (resolution - 1)));
    for (int j = 0; j < resolution; ++j)
        out.d_values.push_back(d_lo * std::pow(d_hi / d_lo, static_cast<double>(j) / (resolution - 1)));
    out.delta.resize(static_cast<std::size_t>(resolution) * resolution);
    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            const double la = eval_law(law_a, out.n_values[i], out.d_values[j]);
            const double lb = eval_law(law_b, out.n_values[i], out.d_values[j]);
            out.delta[static_cast<std::size_t>(i) * resolution + j] = (la - lb) / lb;
        }
    }
    auto at = [&](int i, int j) { return out.delta[static_cast<std::size_t>(i) * resolution + j]; };
    auto lerp_log = [](double a, double b, double t) { return a * std::pow(b / a, t); };
    auto opposite = [](double v0, double v1) { return (v0 < 0 && v1 > 0) || (v0 > 0 && v1 < 0); };
    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            if (j + 1 < resolution) {
                const double v0 = at(i, j), v1 = at(i, j + 1);
                if (opposite(v0, v1)) {
                    const double t = v0 / (v0 - v1);
                    out.zero_crossings.emplace_back(out.n_values[i],
                                                    lerp_log(out.d_values[j], out.d_values[j + 1], t));
                }
            }
            if (i + 1 < resolution) {
                const double v0 = at(i, j), v1 = at(i + 1, j);
                if (opposite(v0, v1)) {
                    const double t = v0 / (v0 - v1);
                    out.zero_crossings.emplace_back(lerp_log(out.n_values[i], out.n_values[i + 1], t),
                                                    out.d_values[j]);
                }
            }
        }
    }
    out.has_crossings = !out.zero_crossings.empty();
    return out;
}

}  // namespace scalefit
