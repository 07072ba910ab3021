// Three-stage differential piecewise fitting:
//   1. per-model-size log-log regressions of loss differences,
//   2. stretched-exponential parameterization of the per-size exponents and
//      coefficients with alternating refinement against the global
//      difference loss ell_R,
//   3. residual-term fit on the per-size means of what the data term leaves.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "scalefit/core.hpp"
#include "scalefit/regression.hpp"
#include "scalefit/report.hpp"

namespace scalefit {

// Per-model-size series of loss differences r = L(n, d) - L(n, lambda*d).
struct DiffSeries {
    double n = 0;
    std::vector<std::pair<double, double>> pairs;  // (d, r), sorted by d, r > 0
    int dropped = 0;                               // non-positive differences excluded
};

struct DiffBuildResult {
    std::vector<DiffSeries> series;
    std::vector<std::string> warnings;
};

// Pairs every d with the nearest grid point to lambda*d (1% relative
// tolerance). Model sizes retaining fewer than 3 positive differences are
// excluded with a warning; an empty result is an error.
inline DiffBuildResult build_diff_series(const LossGrid& grid) {
    DiffBuildResult out;
    const double lambda = grid.lambda();
    for (double n : grid.model_sizes()) {
        const auto ds = grid.data_sizes(n);
        DiffSeries s;
        s.n = n;
        for (double d : ds) {
            const double target = lambda * d;
            auto it = std::lower_bound(ds.begin(), ds.end(), target);
            double partner = 0;
            double err = std::numeric_limits<double>::infinity();
            if (it != ds.end() && std::fabs(*it - target) < err) { partner = *it; err = std::fabs(*it - target); }
            if (it != ds.begin() && std::fabs(*(it - 1) - target) < err) { partner = *(it - 1); err = std::fabs(*(it - 1) - target); }
            if (!(err <= 0.01 * target) || partner <= d) continue;
            const double r = grid.find(n, d)->loss - grid.find(n, partner)->loss;
            if (r > 0)
                s.pairs.emplace_back(d, r);
            else
                ++s.dropped;
        }
        if (s.pairs.size() < 3) {
            out.warnings.push_back("model size n=" + std::to_string(n) + " excluded from differencing (" +
                                   std::to_string(s.pairs.size()) + " positive pairs, " +
                                   std::to_string(s.dropped) + " dropped)");
            continue;
        }
        out.series.push_back(std::move(s));
    }
    if (out.series.empty())
        throw fit_error("build_diff_series: insufficient data (no model size kept 3 positive differences)");
    return out;
}

struct StageOneEntry {
    double a_n = 0;      // per-size exponent A_N
    double b_hat_n = 0;  // difference coefficient
    double b_n = 0;      // corrected coefficient B_N = b_hat / (1 - lambda^-A_N)
    LinearFit fit;
};

struct StageOneResult {
    std::map<double, StageOneEntry> per_n;
    std::vector<std::string> warnings;
};

// Per model size: linear fit of log r against log d; A_N = -slope,
// B_hat = exp(intercept). Sizes with A_N <= 0 or a singular regression are
// excluded with a warning.
inline StageOneResult stage1_fit(const std::vector<DiffSeries>& series, double lambda) {
    StageOneResult out;
    for (const auto& s : series) {
        std::vector<double> lx, ly;
        lx.reserve(s.pairs.size());
        ly.reserve(s.pairs.size());
        for (const auto& [d, r] : s.pairs) {
            lx.push_back(std::log(d));
            ly.push_back(std::log(r));
        }
        LinearFit f;
        try {
            f = linear_fit(lx, ly);
        } catch (const fit_error& e) {
            out.warnings.push_back("model size n=" + std::to_string(s.n) + " excluded from stage 1: " + e.what());
            continue;
        }
        StageOneEntry entry;
        entry.a_n = -f.slope;
        entry.b_hat_n = std::exp(f.intercept);
        entry.fit = std::move(f);
        if (!(entry.a_n > 0)) {
            out.warnings.push_back("model size n=" + std::to_string(s.n) +
                                   " excluded from stage 1 (non-positive exponent A_N=" +
                                   std::to_string(entry.a_n) + ")");
            continue;
        }
        entry.b_n = entry.b_hat_n / (1.0 - std::pow(lambda, -entry.a_n));
        out.per_n.emplace(s.n, std::move(entry));
    }
    return out;
}

// exp(a * n^p + b)
struct StretchedExp {
    double a = 0, b = 0, p = 0;
    double operator()(double n) const { return std::exp(a * std::pow(n, p) + b); }
};

struct StageTwoResult {
    StretchedExp theta_a;  // data exponent A(n)
    StretchedExp theta_b;  // data coefficient B(n)
    RefinementTrace trace;
};

namespace detail {

// Global difference loss over all retained series; +inf on overflow so the
// refinement simply rejects wild candidates.
inline double ell_r(const std::vector<DiffSeries>& series, const StretchedExp& ta, const StretchedExp& tb,
                    double lambda) {
    double tot = 0;
    for (const auto& s : series) {
        const double ea = ta.a * std::pow(s.n, ta.p) + ta.b;
        const double eb = tb.a * std::pow(s.n, tb.p) + tb.b;
        if (!(std::fabs(ea) < kExpArgLimit) || !(std::fabs(eb) < kExpArgLimit))
            return std::numeric_limits<double>::infinity();
        const double an = std::exp(ea);
        const double bn = std::exp(eb);
        const double shrink = 1.0 - std::pow(lambda, -an);
        for (const auto& [d, r] : s.pairs) {
            const double pred = bn * shrink * std::exp(-an * std::log(d));
            const double res = r - pred;
            tot += res * res;
        }
    }
    return std::isfinite(tot) ? tot : std::numeric_limits<double>::infinity();
}

// Damped Gauss-Newton on (a, b) of one stretched-exponential term at a fixed
// exponent, minimizing ell_R with the other term held fixed. `fit_a_term`
// selects whether (a, b) parameterize the data exponent or the coefficient.
inline std::pair<StretchedExp, double> refit_ab_against_ell_r(const std::vector<DiffSeries>& series,
                                                              bool fit_a_term, StretchedExp term,
                                                              const StretchedExp& other, double lambda,
                                                              int max_iters = 60) {
    auto objective = [&](const StretchedExp& t) {
        return fit_a_term ? ell_r(series, t, other, lambda) : ell_r(series, other, t, lambda);
    };
    double cur = objective(term);
    if (!std::isfinite(cur)) return {term, cur};
    double mu = 1e-4;
    for (int iter = 0; iter < max_iters; ++iter) {
        double j11 = 0, j12 = 0, j22 = 0, g1 = 0, g2 = 0;
        for (const auto& s : series) {
            const double u = std::pow(s.n, term.p);
            const double earg = term.a * u + term.b;
            const double oarg = other.a * std::pow(s.n, other.p) + other.b;
            if (std::fabs(earg) > kExpArgLimit || std::fabs(oarg) > kExpArgLimit) continue;
            const double self = std::exp(earg);
            const double off = std::exp(oarg);
            const double an = fit_a_term ? self : off;
            const double bn = fit_a_term ? off : self;
            const double lam_pow = std::pow(lambda, -an);
            const double shrink = 1.0 - lam_pow;
            for (const auto& [d, r] : s.pairs) {
                const double dpow = std::exp(-an * std::log(d));
                const double m = bn * shrink * dpow;
                // dm/d(self-term value)
                const double dm = fit_a_term
                                      ? bn * dpow * (std::log(lambda) * lam_pow - shrink * std::log(d))
                                      : shrink * dpow;
                const double da = dm * self * u;  // chain through exp(a*u+b)
                const double db = dm * self;
                const double res = r - m;
                j11 += da * da;
                j12 += da * db;
                j22 += db * db;
                g1 += da * res;
                g2 += db * res;
            }
        }
        bool stepped = false;
        double step_a = 0, step_b = 0;
        for (int attempt = 0; attempt < 40; ++attempt) {
            const double m11 = j11 * (1.0 + mu);
            const double m22 = j22 * (1.0 + mu);
            const double det = m11 * m22 - j12 * j12;
            if (!(std::fabs(det) > 0)) {
                mu *= 10;
                continue;
            }
            step_a = (m22 * g1 - j12 * g2) / det;
            step_b = (m11 * g2 - j12 * g1) / det;
            StretchedExp trial = term;
            trial.a += step_a;
            trial.b += step_b;
            const double c = objective(trial);
            if (c < cur) {
                term = trial;
                const double prev = cur;
                cur = c;
                mu = std::max(mu / 3.0, 1e-14);
                stepped = true;
                if (prev - cur <= 1e-15 * std::max(prev, 1e-300)) return {term, cur};
                break;
            }
            mu *= 10;
        }
        if (!stepped) break;
    }
    return {term, cur};
}

}  // namespace detail

// Fits the stretched-exponential forms for A(n) and B(n). Initial exponents
// and coefficients come from projection-space fits of log A_N and log B_N;
// refinement then alternates between the two terms, re-optimizing each
// exponent over the shared power grid with (a, b) re-fit against ell_R per
// candidate, until the relative ell_R improvement drops below 1e-6 or 10
// iterations.
inline StageTwoResult stage2_parameterize(const StageOneResult& s1, const std::vector<DiffSeries>& series,
                                          double lambda) {
    if (s1.per_n.size() < 3)
        throw fit_error("stage2_parameterize: insufficient data (needs >= 3 model sizes, got " +
                        std::to_string(s1.per_n.size()) + ")");
    std::vector<double> ns, log_a, log_b;
    for (const auto& [n, e] : s1.per_n) {
        ns.push_back(n);
        log_a.push_back(std::log(e.a_n));
        log_b.push_back(std::log(e.b_n));
    }
    // Only series that survived stage 1 participate in ell_R.
    std::vector<DiffSeries> kept;
    for (const auto& s : series)
        if (s1.per_n.count(s.n)) kept.push_back(s);

    StageTwoResult out;
    auto flat = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        double scale = 0;
        for (double x : v) scale = std::max(scale, std::fabs(x));
        return (*hi - *lo) <= 1e-9 * std::max(1.0, scale);
    };

    const auto grid = default_power_grid();
    const bool a_flat = flat(log_a);
    const bool b_flat = flat(log_b);
    if (a_flat)
        out.trace.notes.push_back("alpha unidentifiable: A_N constant across model sizes (a1 ~ 0)");
    if (b_flat)
        out.trace.notes.push_back("beta unidentifiable: B_N constant across model sizes (a2 ~ 0)");

    auto projection_init = [&](const std::vector<double>& resp, bool is_flat) {
        if (is_flat) {
            // any exponent works; pin a ~ 0 and keep the mean response
            double mean = 0;
            for (double v : resp) mean += v;
            return StretchedExp{0.0, mean / static_cast<double>(resp.size()), grid.front()};
        }
        const PowerProjectionFit f = power_projection_fit(ns, resp, grid);
        return StretchedExp{f.fit.slope, f.fit.intercept, f.exponent};
    };
    out.theta_a = projection_init(log_a, a_flat);
    out.theta_b = projection_init(log_b, b_flat);

    double data_scale = 0;
    for (const auto& s : kept)
        for (const auto& [d, r] : s.pairs) data_scale += r * r;
    const double floor = 1e-24 * data_scale;  // ell_R at double-precision exactness

    double cur = detail::ell_r(kept, out.theta_a, out.theta_b, lambda);
    out.trace.iterations.push_back({out.theta_a.p, out.theta_b.p, cur});
    if (cur <= floor) {
        out.trace.converged = true;
        return out;
    }

    // One alternation half-step: exponent candidates are the coarse grid plus
    // the incumbent, each solved by Gauss-Newton from the projection fit and
    // from the incumbent coefficients; then a fine pass around the winner.
    auto update_term = [&](bool fit_a_term, StretchedExp incumbent, const std::vector<double>& resp,
                           double incumbent_obj) {
        const StretchedExp& other = fit_a_term ? out.theta_b : out.theta_a;
        StretchedExp best = incumbent;
        double best_obj = incumbent_obj;
        std::vector<double> tx(ns.size());
        auto consider = [&](double e) {
            StretchedExp init{0, 0, e};
            for (std::size_t i = 0; i < ns.size(); ++i) tx[i] = std::pow(ns[i], e);
            try {
                const LinearFit f = linear_fit(tx, resp);
                init.a = f.slope;
                init.b = f.intercept;
            } catch (const fit_error&) {
                init.a = 0;
                init.b = resp.empty() ? 0 : resp.front();
            }
            auto [t1, c1] = detail::refit_ab_against_ell_r(kept, fit_a_term, init, other, lambda);
            if (c1 < best_obj) { best = t1; best_obj = c1; }
            StretchedExp carry = incumbent;
            carry.p = e;
            auto [t2, c2] = detail::refit_ab_against_ell_r(kept, fit_a_term, carry, other, lambda);
            if (c2 < best_obj) { best = t2; best_obj = c2; }
        };
        for (double e : grid) consider(e);
        for (double e : refine_power_grid(best.p)) consider(e);
        return std::make_pair(best, best_obj);
    };

    constexpr int kMaxIterations = 10;
    constexpr double kRelTol = 1e-6;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        const double prev = cur;
        if (!a_flat) {
            auto [ta, ca] = update_term(true, out.theta_a, log_a, cur);
            out.theta_a = ta;
            cur = ca;
        }
        if (!b_flat) {
            auto [tb, cb] = update_term(false, out.theta_b, log_b, cur);
            out.theta_b = tb;
            cur = cb;
        }
        out.trace.iterations.push_back({out.theta_a.p, out.theta_b.p, cur});
        if (cur <= floor || prev <= 0 || (prev - cur) / prev < kRelTol) {
            out.trace.converged = true;
            break;
        }
    }
    if (!out.trace.converged && (a_flat && b_flat)) out.trace.converged = true;
    return out;
}

struct ResidualDiagnostics {
    std::vector<std::tuple<double, double, double>> o_values;  // (n, d, O(n,d))
    std::map<double, double> g_values;                         // n -> G(n)
    std::vector<std::tuple<double, double, double>> centered;  // (n, d, O - G)
};

struct StageThreeResult {
    StretchedExp theta_u;
    ResidualDiagnostics diagnostics;
};

// O(n,d) = L(n,d) - B(n) d^(-A(n)) over every grid point (including any the
// differencing dropped), G(n) = mean over d, then a stretched-exponential
// fit of log G(n).
inline StageThreeResult stage3_fit_residual(const LossGrid& grid, const StretchedExp& theta_a,
                                            const StretchedExp& theta_b) {
    StageThreeResult out;
    std::map<double, std::pair<double, int>> acc;  // n -> (sum O, count)
    for (const auto& p : grid.points()) {
        const double an = theta_a(p.n);
        const double bn = theta_b(p.n);
        const double o = p.loss - bn * std::exp(-an * std::log(p.d));
        out.diagnostics.o_values.emplace_back(p.n, p.d, o);
        auto& [sum, cnt] = acc[p.n];
        sum += o;
        ++cnt;
    }
    std::vector<double> ns, log_g;
    for (const auto& [n, sc] : acc) {
        const double g = sc.first / sc.second;
        if (!(g > 0))
            throw fit_error("stage3_fit_residual: residual sign error, G(n) = " + std::to_string(g) +
                            " at n=" + std::to_string(n) + " (stage 1/2 misfit)");
        out.diagnostics.g_values[n] = g;
        ns.push_back(n);
        log_g.push_back(std::log(g));
    }
    for (const auto& [n, d, o] : out.diagnostics.o_values)
        out.diagnostics.centered.emplace_back(n, d, o - out.diagnostics.g_values.at(n));

    const auto [lo, hi] = std::minmax_element(log_g.begin(), log_g.end());
    double scale = 0;
    for (double x : log_g) scale = std::max(scale, std::fabs(x));
    if ((*hi - *lo) <= 1e-9 * std::max(1.0, scale)) {
        double mean = 0;
        for (double x : log_g) mean += x;
        out.theta_u = StretchedExp{0.0, mean / static_cast<double>(log_g.size()),
                                   default_power_grid().front()};
        return out;
    }
    const PowerProjectionFit f = power_projection_fit(ns, log_g);
    out.theta_u = StretchedExp{f.fit.slope, f.fit.intercept, f.exponent};
    return out;
}

struct PiecewiseFit {
    FarseerParams params;
    FitReport report;
};

// The full pipeline: differencing, stage 1 regressions, stage 2
// parameterization and refinement, stage 3 residual fit.
inline PiecewiseFit fit_farseer(const LossGrid& grid) {
    PiecewiseFit out;
    out.report.family = Family::farseer;
    out.report.method = "piecewise";
    out.report.config = "lambda=" + std::to_string(grid.lambda());

    DiffBuildResult diffs = build_diff_series(grid);
    out.report.warnings = diffs.warnings;
    for (const auto& s : diffs.series)
        if (s.dropped > 0)
            out.report.warnings.push_back("n=" + std::to_string(s.n) + ": dropped " +
                                          std::to_string(s.dropped) + " non-positive differences");

    StageOneResult s1 = stage1_fit(diffs.series, grid.lambda());
    for (const auto& w : s1.warnings) out.report.warnings.push_back(w);
    for (const auto& [n, e] : s1.per_n)
        out.report.stage1.push_back({n, e.a_n, e.b_hat_n, e.b_n, e.fit.r2});

    StageTwoResult s2 = stage2_parameterize(s1, diffs.series, grid.lambda());
    out.report.refinement = s2.trace;
    for (const auto& note : s2.trace.notes) out.report.warnings.push_back(note);
    if (!s2.trace.iterations.empty()) out.report.ell_r = s2.trace.iterations.back().ell_r;

    StageThreeResult s3 = stage3_fit_residual(grid, s2.theta_a, s2.theta_b);

    out.params.a1 = s2.theta_a.a;
    out.params.b1 = s2.theta_a.b;
    out.params.alpha = s2.theta_a.p;
    out.params.a2 = s2.theta_b.a;
    out.params.b2 = s2.theta_b.b;
    out.params.beta = s2.theta_b.p;
    out.params.a3 = s3.theta_u.a;
    out.params.b3 = s3.theta_u.b;
    out.params.gamma = s3.theta_u.p;

    fill_prediction_errors(out.report, LawParams::make(out.params), grid);
    return out;
}

}  // namespace scalefit
