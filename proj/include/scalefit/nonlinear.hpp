// End-to-end multi-start nonlinear least squares for both law families:
// seeded random initialization, box-projected Nelder-Mead descent per start,
// deterministic best-of reduction.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "scalefit/core.hpp"
#include "scalefit/synth.hpp"

namespace scalefit {

struct ParamRange {
    double lo = 0;
    double hi = 0;
    bool log_scale = false;  // sample magnitude log-uniformly (sign from the bounds)
};

enum class Objective { squared, squared_log };

struct MultiStartConfig {
    int starts = 256;
    std::uint64_t seed = 0;
    std::vector<ParamRange> init_ranges;  // empty -> family defaults; lo == hi pins a parameter
    int max_steps = 2000;
    double step_tolerance = 1e-10;
    Objective objective = Objective::squared;
    int threads = 1;
};

struct NonlinearFitResult {
    LawParams params;
    double objective = 0;  // min over all_objectives
    int start_index = -1;
    std::vector<double> all_objectives;
};

inline std::vector<ParamRange> chinchilla_default_ranges() {
    return {
        {1e-3, 1e3, true},   // A
        {0.05, 1.0, false},  // alpha
        {1e-3, 1e3, true},   // B
        {0.05, 1.0, false},  // beta
        {0.0, 2.0, false},   // E
    };
}

// One decade of jitter around the reference coefficient magnitudes,
// sign-preserving.
inline std::vector<ParamRange> farseer_default_ranges() {
    const FarseerParams r = reference_farseer_params();
    auto decade = [](double v) {
        return v >= 0 ? ParamRange{v / 10.0, v * 10.0, true} : ParamRange{v * 10.0, v / 10.0, true};
    };
    return {decade(r.a1), decade(r.b1),    decade(r.alpha), decade(r.a2), decade(r.b2),
            decade(r.beta), decade(r.a3),  decade(r.b3),    decade(r.gamma)};
}

namespace detail {

inline double sample_range(const ParamRange& r, std::mt19937_64& eng) {
    if (r.lo == r.hi) return r.lo;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (!r.log_scale) return r.lo + (r.hi - r.lo) * u(eng);
    if (r.lo > 0) {
        const double t = std::log(r.lo) + (std::log(r.hi) - std::log(r.lo)) * u(eng);
        return std::exp(t);
    }
    if (r.hi < 0) {
        const double t = std::log(-r.hi) + (std::log(-r.lo) - std::log(-r.hi)) * u(eng);
        return -std::exp(t);
    }
    return r.lo + (r.hi - r.lo) * u(eng);  // mixed-sign: fall back to uniform
}

struct Box {
    std::vector<double> lo, hi;
    void clamp(std::vector<double>& x) const {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    }
};

// Nelder-Mead over the free coordinates with projection into the box before
// every evaluation. The best vertex never worsens, so the per-run objective
// trace is non-increasing.
inline std::pair<std::vector<double>, double> nelder_mead(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0, const Box& box,
    const std::vector<int>& free_dims, int max_steps, double tol) {
    box.clamp(x0);
    const std::size_t k = free_dims.size();
    if (k == 0) return {x0, f(x0)};

    auto embed = [&](const std::vector<double>& y) {
        std::vector<double> x = x0;
        for (std::size_t i = 0; i < k; ++i) x[free_dims[i]] = y[i];
        box.clamp(x);
        return x;
    };
    auto eval = [&](const std::vector<double>& y) { return f(embed(y)); };

    std::vector<std::vector<double>> simplex(k + 1, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i) simplex[0][i] = x0[free_dims[i]];
    for (std::size_t v = 1; v <= k; ++v) {
        simplex[v] = simplex[0];
        const double base = simplex[0][v - 1];
        simplex[v][v - 1] = base != 0 ? base * 1.05 : 0.00025;
    }
    std::vector<double> fv(k + 1);
    for (std::size_t v = 0; v <= k; ++v) fv[v] = eval(simplex[v]);

    std::vector<std::size_t> order(k + 1);
    for (int step = 0; step < max_steps; ++step) {
        for (std::size_t i = 0; i <= k; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[k], second = order[k - 1];

        const double spread = std::fabs(fv[worst] - fv[best]);
        if (std::isfinite(fv[best]) && spread <= tol * (std::fabs(fv[best]) + tol)) break;

        std::vector<double> centroid(k, 0.0);
        for (std::size_t i = 0; i <= k; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < k; ++j) centroid[j] += simplex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(k);

        auto blend = [&](double coeff) {
            std::vector<double> y(k);
            for (std::size_t j = 0; j < k; ++j) y[j] = centroid[j] + coeff * (centroid[j] - simplex[worst][j]);
            return y;
        };
        const auto reflected = blend(1.0);
        const double fr = eval(reflected);
        if (fr < fv[best]) {
            const auto expanded = blend(2.0);
            const double fe = eval(expanded);
            if (fe < fr) { simplex[worst] = expanded; fv[worst] = fe; }
            else { simplex[worst] = reflected; fv[worst] = fr; }
        } else if (fr < fv[second]) {
            simplex[worst] = reflected;
            fv[worst] = fr;
        } else {
            const auto contracted = blend(fr < fv[worst] ? 0.5 : -0.5);
            const double fc = eval(contracted);
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = contracted;
                fv[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= k; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < k; ++j)
                        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
                    fv[i] = eval(simplex[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= k; ++i)
        if (fv[i] < fv[best]) best = i;
    return {embed(simplex[best]), fv[best]};
}

inline double grid_objective(const LossGrid& grid, Objective kind,
                             const std::function<double(double, double)>& predict) {
    double tot = 0;
    for (const auto& p : grid.points()) {
        double pred;
        try {
            pred = predict(p.n, p.d);
        } catch (const evaluation_error&) {
            return std::numeric_limits<double>::infinity();
        }
        if (!std::isfinite(pred)) return std::numeric_limits<double>::infinity();
        double res;
        if (kind == Objective::squared) {
            res = pred - p.loss;
        } else {
            if (!(pred > 0)) return std::numeric_limits<double>::infinity();
            res = std::log(pred) - std::log(p.loss);
        }
        tot += res * res;
    }
    return std::isfinite(tot) ? tot : std::numeric_limits<double>::infinity();
}

struct MultiStartProblem {
    std::size_t dim = 0;
    std::vector<ParamRange> ranges;
    Box box;
    std::function<double(const std::vector<double>&)> objective;
};

inline NonlinearFitResult run_multi_start(const MultiStartProblem& prob, const MultiStartConfig& cfg,
                                          const std::function<LawParams(const std::vector<double>&)>& pack) {
    if (cfg.starts < 1) throw fit_error("multi-start: starts must be >= 1");
    if (prob.ranges.size() != prob.dim) throw fit_error("multi-start: init_ranges size mismatch");
    for (const auto& r : prob.ranges)
        if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
            throw fit_error("multi-start: init range needs finite lo <= hi");

    std::vector<int> free_dims;
    for (std::size_t i = 0; i < prob.dim; ++i)
        if (prob.ranges[i].lo != prob.ranges[i].hi) free_dims.push_back(static_cast<int>(i));

    std::vector<double> objectives(cfg.starts, std::numeric_limits<double>::infinity());
    std::vector<std::vector<double>> winners(cfg.starts);

    auto run_one = [&](int s) {
        std::mt19937_64 eng(detail::mix64(cfg.seed ^ detail::mix64(static_cast<std::uint64_t>(s) + 1)));
        std::vector<double> x0(prob.dim);
        for (std::size_t i = 0; i < prob.dim; ++i) x0[i] = sample_range(prob.ranges[i], eng);
        auto [x, fx] = nelder_mead(prob.objective, std::move(x0), prob.box, free_dims, cfg.max_steps,
                                   cfg.step_tolerance);
        objectives[s] = fx;
        winners[s] = std::move(x);
    };

    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || cfg.starts == 1) {
        for (int s = 0; s < cfg.starts; ++s) run_one(s);
    } else {
        std::vector<std::thread> pool;
        const int per = (cfg.starts + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int lo = t * per;
            const int hi = std::min(cfg.starts, lo + per);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                for (int s = lo; s < hi; ++s) run_one(s);
            });
        }
        for (auto& th : pool) th.join();
    }

    int best = -1;
    for (int s = 0; s < cfg.starts; ++s)
        if (std::isfinite(objectives[s]) && (best < 0 || objectives[s] < objectives[best])) best = s;
    if (best < 0) {
        std::string msg = "nonlinear fit failed: all " + std::to_string(cfg.starts) + " starts diverged;";
        for (int s = 0; s < std::min(cfg.starts, 8); ++s)
            msg += " start " + std::to_string(s) + " -> " + std::to_string(objectives[s]);
        throw fit_error(msg);
    }

    NonlinearFitResult out;
    out.params = pack(winners[best]);
    out.objective = objectives[best];
    out.start_index = best;
    out.all_objectives = std::move(objectives);
    return out;
}

}  // namespace detail

// Minimizes the squared loss-space residual over (A, alpha, B, beta, E) with
// A, B, E >= 0 and alpha, beta > 0 enforced by box projection.
inline NonlinearFitResult fit_chinchilla_nonlinear(const LossGrid& grid, const MultiStartConfig& cfg = {}) {
    detail::MultiStartProblem prob;
    prob.dim = 5;
    prob.ranges = cfg.init_ranges.empty() ? chinchilla_default_ranges() : cfg.init_ranges;
    if (prob.ranges.size() != prob.dim) throw fit_error("fit_chinchilla_nonlinear: need 5 init ranges");
    const double inf = std::numeric_limits<double>::infinity();
    prob.box.lo = {0.0, 1e-8, 0.0, 1e-8, 0.0};
    prob.box.hi = {inf, 4.0, inf, 4.0, inf};
    prob.objective = [&grid, &cfg](const std::vector<double>& x) {
        const ChinchillaParams p{x[0], x[1], x[2], x[3], x[4]};
        return detail::grid_objective(grid, cfg.objective,
                                      [&p](double n, double d) { return eval_chinchilla(p, n, d); });
    };
    return detail::run_multi_start(prob, cfg, [](const std::vector<double>& x) {
        return LawParams::make(ChinchillaParams{x[0], x[1], x[2], x[3], x[4]});
    });
}

// Same contract over the nine stretched-exponential parameters. Exists to
// reproduce the accuracy comparison against the piecewise pipeline; the
// landscape is famously hard for end-to-end descent.
inline NonlinearFitResult fit_farseer_nonlinear(const LossGrid& grid, const MultiStartConfig& cfg = {}) {
    detail::MultiStartProblem prob;
    prob.dim = 9;
    prob.ranges = cfg.init_ranges.empty() ? farseer_default_ranges() : cfg.init_ranges;
    if (prob.ranges.size() != prob.dim) throw fit_error("fit_farseer_nonlinear: need 9 init ranges");
    const double inf = std::numeric_limits<double>::infinity();
    prob.box.lo = {-inf, -inf, -1.0, -inf, -inf, -1.0, -inf, -inf, -1.0};
    prob.box.hi = {inf, inf, 1.0, inf, inf, 1.0, inf, inf, 1.0};
    prob.objective = [&grid, &cfg](const std::vector<double>& x) {
        FarseerParams p;
        p.a1 = x[0]; p.b1 = x[1]; p.alpha = x[2];
        p.a2 = x[3]; p.b2 = x[4]; p.beta = x[5];
        p.a3 = x[6]; p.b3 = x[7]; p.gamma = x[8];
        return detail::grid_objective(grid, cfg.objective,
                                      [&p](double n, double d) { return eval_farseer(p, n, d); });
    };
    return detail::run_multi_start(prob, cfg, [](const std::vector<double>& x) {
        FarseerParams p;
        p.a1 = x[0]; p.b1 = x[1]; p.alpha = x[2];
        p.a2 = x[3]; p.b2 = x[4]; p.beta = x[5];
        p.a3 = x[6]; p.b3 = x[7]; p.gamma = x[8];
        return LawParams::make(p);
    });
}

}  // namespace scalefit
