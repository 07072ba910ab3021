// Transformed-space linear regression: closed-form normal equations,
// the small transform dictionary (identity / log / power), and exhaustive
// transform-pair selection with coarse-to-fine power-exponent search.
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalefit/core.hpp"

namespace scalefit {

struct LinearFit {
    double slope = 0;
    double intercept = 0;
    std::vector<double> residuals;
    double rss = 0;
    double r2 = 1.0;
};

// Least squares y ~ slope*x + intercept via the 2x2 normal equations with
// mean-centered x (conditioning on log-spaced abscissae).
inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw fit_error("linear_fit: size mismatch");
    if (xs.size() < 2) throw fit_error("linear_fit: need at least 2 points");
    const std::size_t m = xs.size();
    double xm = 0, ym = 0;
    for (std::size_t i = 0; i < m; ++i) { xm += xs[i]; ym += ys[i]; }
    xm /= static_cast<double>(m);
    ym /= static_cast<double>(m);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double xc = xs[i] - xm;
        sxx += xc * xc;
        sxy += xc * ys[i];
    }
    if (!(sxx > 0))
        throw fit_error("linear_fit: singular system (zero variance in x)");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = ym - f.slope * xm;
    f.residuals.resize(m);
    double tss = 0;
    for (std::size_t i = 0; i < m; ++i) {
        f.residuals[i] = ys[i] - (f.slope * xs[i] + f.intercept);
        f.rss += f.residuals[i] * f.residuals[i];
        const double yc = ys[i] - ym;
        tss += yc * yc;
    }
    f.r2 = tss > 0 ? 1.0 - f.rss / tss : 1.0;
    if (!std::isfinite(f.slope) || !std::isfinite(f.intercept))
        throw fit_error("linear_fit: non-finite solution");
    return f;
}

enum class TransformType { identity, log, power };

struct TransformKind {
    TransformType type = TransformType::identity;
    double exponent = 0;  // power only

    static TransformKind identity() { return {TransformType::identity, 0}; }
    static TransformKind log() { return {TransformType::log, 0}; }
    static TransformKind power(double e) {
        if (!std::isfinite(e) || e == 0) throw transform_error("power transform exponent must be finite and nonzero");
        return {TransformType::power, e};
    }

    std::string name() const {
        switch (type) {
            case TransformType::identity: return "identity";
            case TransformType::log: return "log";
            case TransformType::power: return "power(" + std::to_string(exponent) + ")";
        }
        return "?";
    }
};

inline double apply_transform(const TransformKind& t, double v) {
    switch (t.type) {
        case TransformType::identity:
            return v;
        case TransformType::log:
            if (!(v > 0))
                throw transform_error("log transform needs positive input, got " + std::to_string(v));
            return std::log(v);
        case TransformType::power: {
            const bool integral = t.exponent == std::floor(t.exponent);
            if (!integral && !(v > 0))
                throw transform_error("power(" + std::to_string(t.exponent) +
                                      ") needs positive input, got " + std::to_string(v));
            return std::pow(v, t.exponent);
        }
    }
    throw transform_error("unknown transform");
}

// Coarse exponent grid for power transforms: [-1, 1] step 0.01, skipping the
// near-zero band |e| < 0.005. Refinement around a coarse optimum uses step 0.001.
inline std::vector<double> default_power_grid() {
    std::vector<double> g;
    for (int i = -100; i <= 100; ++i) {
        const double e = i * 0.01;
        if (std::fabs(e) < 0.005) continue;
        g.push_back(e);
    }
    return g;
}

inline std::vector<double> refine_power_grid(double center, double halfwidth = 0.01, double step = 0.001) {
    std::vector<double> g;
    const int k = static_cast<int>(std::lround(halfwidth / step));
    for (int i = -k; i <= k; ++i) {
        const double e = center + i * step;
        if (std::fabs(e) < 0.005) continue;
        g.push_back(e);
    }
    return g;
}

struct PowerProjectionFit {
    double exponent = 0;  // e in resp ~ a * x^e + b
    LinearFit fit;        // slope = a, intercept = b
};

// Grid search over the exponent of x^e with a linear fit of resp against x^e
// at each candidate; coarse pass over `grid`, then 0.001-step refinement
// around the winner. Minimizes projection-space rss.
inline PowerProjectionFit power_projection_fit(std::span<const double> xs, std::span<const double> resp,
                                               std::span<const double> grid) {
    if (grid.empty()) throw fit_error("power_projection_fit: empty exponent grid");
    std::optional<PowerProjectionFit> best;
    std::vector<double> tx(xs.size());
    auto consider = [&](double e) {
        for (std::size_t i = 0; i < xs.size(); ++i) tx[i] = std::pow(xs[i], e);
        LinearFit f;
        try {
            f = linear_fit(tx, resp);
        } catch (const fit_error&) {
            return;
        }
        if (!best || f.rss < best->fit.rss) best = PowerProjectionFit{e, std::move(f)};
    };
    for (double e : grid) consider(e);
    if (!best) throw fit_error("power_projection_fit: no feasible exponent");
    for (double e : refine_power_grid(best->exponent)) consider(e);
    return *best;
}

inline PowerProjectionFit power_projection_fit(std::span<const double> xs, std::span<const double> resp) {
    const auto grid = default_power_grid();
    return power_projection_fit(xs, resp, grid);
}

struct TransformSelection {
    TransformKind gy;
    TransformKind gx;
    LinearFit fit;
    double loss = 0;  // rss in projection space, equals fit.rss
};

namespace detail {

inline int transform_rank(const TransformKind& t) {
    switch (t.type) {
        case TransformType::identity: return 0;
        case TransformType::log: return 1;
        case TransformType::power: return 2;
    }
    return 3;
}

// Free parameters introduced by the transform choice: power carries a
// searched exponent, identity and log carry none.
inline int transform_params(const TransformKind& t) {
    return t.type == TransformType::power ? 1 : 0;
}

// Deterministic ordering among near-tied candidates: fewer free parameters,
// then kind order identity < log < power (response first), then exponent.
inline bool selection_preferred(const TransformSelection& a, const TransformSelection& b) {
    const double scale = std::max({std::fabs(a.loss), std::fabs(b.loss), 1e-300});
    if (std::fabs(a.loss - b.loss) > 1e-12 * scale) return a.loss < b.loss;
    const int pa = transform_params(a.gy) + transform_params(a.gx);
    const int pb = transform_params(b.gy) + transform_params(b.gx);
    if (pa != pb) return pa < pb;
    if (transform_rank(a.gy) != transform_rank(b.gy)) return transform_rank(a.gy) < transform_rank(b.gy);
    if (transform_rank(a.gx) != transform_rank(b.gx)) return transform_rank(a.gx) < transform_rank(b.gx);
    return a.gx.exponent < b.gx.exponent;
}

}  // namespace detail

// Exhaustive search over (g_y, g_x) pairs from `dict`; power transforms on
// the abscissa are expanded over `power_grid` (with 0.001 refinement around
// the best coarse exponent). Returns the pair minimizing projection-space
// rss; near-ties (1e-12 relative) break toward fewer free parameters.
inline TransformSelection select_transforms(std::span<const double> xs, std::span<const double> ys,
                                            std::span<const TransformKind> dict,
                                            std::span<const double> power_grid) {
    if (xs.size() != ys.size() || xs.size() < 2) throw fit_error("select_transforms: bad input sizes");
    if (power_grid.empty()) throw fit_error("select_transforms: empty power grid");

    std::optional<TransformSelection> best;
    std::vector<double> ty(ys.size()), tx(xs.size());

    auto try_pair = [&](const TransformKind& gy, const TransformKind& gx) {
        try {
            for (std::size_t i = 0; i < ys.size(); ++i) ty[i] = apply_transform(gy, ys[i]);
            for (std::size_t i = 0; i < xs.size(); ++i) tx[i] = apply_transform(gx, xs[i]);
            TransformSelection cand{gy, gx, linear_fit(tx, ty), 0};
            cand.loss = cand.fit.rss;
            if (!best || detail::selection_preferred(cand, *best)) best = std::move(cand);
        } catch (const transform_error&) {
        } catch (const fit_error&) {
        }
    };

    for (const auto& gy : dict) {
        for (const auto& gx : dict) {
            if (gx.type == TransformType::power) {
                std::optional<double> best_e;
                double best_rss = std::numeric_limits<double>::infinity();
                auto coarse = [&](double e) {
                    try {
                        const TransformKind pk = TransformKind::power(e);
                        for (std::size_t i = 0; i < ys.size(); ++i) ty[i] = apply_transform(gy, ys[i]);
                        for (std::size_t i = 0; i < xs.size(); ++i) tx[i] = apply_transform(pk, xs[i]);
                        const LinearFit f = linear_fit(tx, ty);
                        if (f.rss < best_rss) { best_rss = f.rss; best_e = e; }
                    } catch (const transform_error&) {
                    } catch (const fit_error&) {
                    }
                };
                for (double e : power_grid) coarse(e);
                if (best_e) {
                    for (double e : refine_power_grid(*best_e)) coarse(e);
                    try_pair(gy, TransformKind::power(*best_e));
                }
            } else {
                try_pair(gy, gx);
            }
        }
    }
    if (!best) throw fit_error("select_transforms: no feasible transform pair");
    return *best;
}

inline TransformSelection select_transforms(std::span<const double> xs, std::span<const double> ys) {
    const std::vector<TransformKind> dict = {TransformKind::identity(), TransformKind::log(),
                                             TransformKind::power(1.0)};
    const auto grid = default_power_grid();
    return select_transforms(xs, ys, dict, grid);
}

}  // namespace scalefit
