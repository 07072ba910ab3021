// Fit reporting: per-point predicted vs actual, aggregate error metrics,
// stage traces and provenance. Shared by the piecewise and multi-start paths.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "scalefit/core.hpp"

namespace scalefit {

struct PointError {
    double n = 0;
    double d = 0;
    double actual = 0;
    double predicted = 0;
    double rel_err = 0;  // |predicted - actual| / actual
};

struct StageOneRow {
    double n = 0;
    double a_n = 0;      // per-size data exponent
    double b_hat_n = 0;  // raw difference coefficient
    double b_n = 0;      // lambda-corrected coefficient
    double r2 = 1;       // log-log regression quality
};

struct RefinementStep {
    double alpha = 0;
    double beta = 0;
    double ell_r = 0;
};

struct RefinementTrace {
    std::vector<RefinementStep> iterations;
    bool converged = false;
    std::vector<std::string> notes;  // e.g. identifiability flags
};

struct FitReport {
    Family family = Family::farseer;
    std::string method;  // "piecewise" | "nonlinear"
    std::vector<PointError> points;
    double mean_rel_err = 0;
    double max_rel_err = 0;
    std::optional<double> ell_r;
    std::vector<StageOneRow> stage1;
    std::optional<RefinementTrace> refinement;
    std::vector<std::string> warnings;
    std::string config;  // provenance: optimizer / objective / seed choices
};

// Fills the per-point table and aggregates of `report` from a law evaluated
// against the grid's observations.
inline void fill_prediction_errors(FitReport& report, const LawParams& law, const LossGrid& grid) {
    report.points.clear();
    report.points.reserve(grid.size());
    double sum = 0, mx = 0;
    for (const auto& p : grid.points()) {
        PointError e;
        e.n = p.n;
        e.d = p.d;
        e.actual = p.loss;
        e.predicted = eval_law(law, p.n, p.d);
        e.rel_err = std::fabs(e.predicted - e.actual) / e.actual;
        sum += e.rel_err;
        mx = std::max(mx, e.rel_err);
        report.points.push_back(e);
    }
    report.mean_rel_err = report.points.empty() ? 0 : sum / static_cast<double>(report.points.size());
    report.max_rel_err = mx;
}

}  // namespace scalefit
