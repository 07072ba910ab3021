// Command-line surface: fit / predict / eval / robustness / optimal /
// diagnose / compare / synth. Every command writes delimited text outputs
// plus a JSON report. Exit codes: 0 success, 1 usage error, 2 data/fit error.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scalefit/analysis.hpp"
#include "scalefit/core.hpp"
#include "scalefit/io.hpp"
#include "scalefit/nonlinear.hpp"
#include "scalefit/piecewise.hpp"
#include "scalefit/synth.hpp"

namespace scalefit {

namespace cli_detail {

using nlohmann::json;

inline int env_threads() {
    const char* v = std::getenv("SCALEFIT_THREADS");
    if (!v) return 1;
    const int t = std::atoi(v);
    return t >= 1 ? t : 1;
}

inline std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot write report: " + path.string());
    out << j.dump(2) << '\n';
}

inline std::ofstream open_csv(const std::filesystem::path& path, const std::string& header) {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot write output: " + path.string());
    out << header << '\n';
    return out;
}

inline std::pair<double, double> parse_range(const std::string& s, const std::string& what) {
    const auto colon = s.find(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError(what, "expected LO:HI, got '" + s + "'");
    try {
        const double lo = detail::parse_double(s.substr(0, colon), what);
        const double hi = detail::parse_double(s.substr(colon + 1), what);
        if (!(lo > 0) || !(hi > lo)) throw parse_error("need 0 < LO < HI");
        return {lo, hi};
    } catch (const parse_error& e) {
        throw CLI::ValidationError(what, e.what());
    }
}

inline LawParams law_from_values(Family family, const std::vector<double>& v) {
    if (family == Family::farseer) {
        if (v.size() != 9)
            throw parse_error("farseer needs 9 parameters (a1,b1,alpha,a2,b2,beta,a3,b3,gamma), got " +
                              std::to_string(v.size()));
        FarseerParams p;
        p.a1 = v[0]; p.b1 = v[1]; p.alpha = v[2];
        p.a2 = v[3]; p.b2 = v[4]; p.beta = v[5];
        p.a3 = v[6]; p.b3 = v[7]; p.gamma = v[8];
        return LawParams::make(p);
    }
    if (v.size() != 5)
        throw parse_error("chinchilla needs 5 parameters (A,alpha,B,beta,E), got " + std::to_string(v.size()));
    return LawParams::make(ChinchillaParams{v[0], v[1], v[2], v[3], v[4]});
}

inline json law_to_json(const LawParams& law) {
    json j;
    j["family"] = family_name(law.family);
    for (const auto& [k, v] : law_param_list(law)) j["params"][k] = v;
    return j;
}

struct FitFlags {
    std::string grid_path;
    std::string family = "farseer";
    std::string method = "piecewise";
    std::string out;
    std::string report;
    std::uint64_t seed = 0;
    int starts = 256;
    std::string objective = "squared";
    double lambda = kDefaultLambda;
};

inline int cmd_fit(const FitFlags& f) {
    const Family family = f.family == "farseer" ? Family::farseer : Family::chinchilla;
    if (f.method == "piecewise" && family == Family::chinchilla) {
        std::cerr << "fit: --method piecewise applies to --family farseer only\n";
        return 1;
    }
    const LossGrid grid = load_grid(f.grid_path, f.lambda);

    LawFile law_file;
    law_file.provenance.grid_digest = hex64(grid_digest(grid));
    FitReport report;
    if (f.method == "piecewise") {
        PiecewiseFit fit = fit_farseer(grid);
        law_file.law = LawParams::make(fit.params);
        report = std::move(fit.report);
        law_file.provenance.method = "piecewise";
        law_file.provenance.config = report.config;
    } else {
        MultiStartConfig cfg;
        cfg.starts = f.starts;
        cfg.seed = f.seed;
        cfg.objective = f.objective == "squared-log" ? Objective::squared_log : Objective::squared;
        cfg.threads = env_threads();
        NonlinearFitResult res = family == Family::farseer ? fit_farseer_nonlinear(grid, cfg)
                                                           : fit_chinchilla_nonlinear(grid, cfg);
        law_file.law = res.params;
        report.family = family;
        report.method = "nonlinear";
        // Optimizer, objective space and stopping rule are artifact choices,
        // recorded here because no standard is pinned for them.
        report.config = "optimizer=nelder-mead-multistart;starts=" + std::to_string(cfg.starts) +
                        ";seed=" + std::to_string(cfg.seed) + ";objective=" + f.objective +
                        ";max_steps=" + std::to_string(cfg.max_steps) +
                        ";step_tolerance=" + detail::fmt_double(cfg.step_tolerance);
        report.ell_r = res.objective;
        fill_prediction_errors(report, res.params, grid);
        law_file.provenance.method = "nonlinear";
        law_file.provenance.config = report.config;
    }
    law_file.provenance.warnings = report.warnings;
    save_law(law_file, f.out);

    json rep;
    rep["command"] = "fit";
    rep["grid"] = f.grid_path;
    rep["grid_digest"] = law_file.provenance.grid_digest;
    rep["law"] = law_to_json(law_file.law);
    rep["method"] = f.method;
    rep["mean_rel_err"] = report.mean_rel_err;
    rep["max_rel_err"] = report.max_rel_err;
    if (report.ell_r) rep["objective"] = *report.ell_r;
    rep["warnings"] = report.warnings;
    if (report.refinement) {
        json tr = json::array();
        for (const auto& it : report.refinement->iterations)
            tr.push_back({{"alpha", it.alpha}, {"beta", it.beta}, {"ell_r", it.ell_r}});
        rep["refinement"] = {{"iterations", tr}, {"converged", report.refinement->converged},
                             {"notes", report.refinement->notes}};
    }
    write_json(rep, f.report.empty() ? f.out + ".report.json" : f.report);

    std::cout << "fitted " << f.family << " (" << f.method << ") on " << grid.size()
              << " points: mean rel err " << report.mean_rel_err << ", max " << report.max_rel_err << '\n';
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
}

inline int cmd_predict(const std::string& law_path, double n, double d, const std::string& report_path) {
    const LawFile law = load_law(law_path);
    const double loss = eval_law(law.law, n, d);
    std::cout << detail::fmt_double(loss) << '\n';
    if (!report_path.empty()) {
        json rep;
        rep["command"] = "predict";
        rep["law"] = law_to_json(law.law);
        rep["n"] = n;
        rep["d"] = d;
        rep["loss"] = loss;
        write_json(rep, report_path);
    }
    return 0;
}

inline int cmd_eval(const std::string& law_path, const std::string& grid_path, std::string out,
                    std::string report_path) {
    const LawFile law = load_law(law_path);
    const LossGrid grid = load_grid(grid_path);
    const EvalReport ev = evaluate_held_out(law.law, grid.points(), "all points of " + grid_path);
    if (out.empty()) out = grid_path + ".eval.csv";
    auto csv = open_csv(out, "n,d,actual,predicted,rel_err");
    for (const auto& p : ev.held_out)
        csv << detail::fmt_double(p.n) << ',' << detail::fmt_double(p.d) << ','
            << detail::fmt_double(p.actual) << ',' << detail::fmt_double(p.predicted) << ','
            << detail::fmt_double(p.rel_err) << '\n';
    json rep;
    rep["command"] = "eval";
    rep["law_file"] = law_path;
    rep["grid"] = grid_path;
    rep["points"] = ev.held_out.size();
    rep["mean_rel_err"] = ev.mean_rel_err;
    rep["max_rel_err"] = ev.max_rel_err;
    write_json(rep, report_path.empty() ? out + ".report.json" : report_path);
    std::cout << "mean rel err " << ev.mean_rel_err << ", max " << ev.max_rel_err << " over "
              << ev.held_out.size() << " points\n";
    return 0;
}

struct RobustnessFlags {
    std::string grid_path;
    double held_out_n = 0;
    std::vector<double> caps;
    std::string method = "piecewise";
    std::string family = "farseer";
    std::uint64_t seed = 0;
    int starts = 256;
    std::string out;
    std::string report;
};

inline int cmd_robustness(const RobustnessFlags& f) {
    const LossGrid grid = load_grid(f.grid_path);
    MultiStartConfig cfg;
    cfg.seed = f.seed;
    cfg.starts = f.starts;
    cfg.threads = env_threads();
    const FitMethod method = f.method == "piecewise" ? FitMethod::piecewise : FitMethod::nonlinear;
    const Family family = f.family == "farseer" ? Family::farseer : Family::chinchilla;
    if (method == FitMethod::piecewise && family == Family::chinchilla) {
        std::cerr << "robustness: --method piecewise applies to --family farseer only\n";
        return 1;
    }
    const RobustnessCurve curve = robustness_curve(grid, f.held_out_n, f.caps, method, family, cfg);
    const std::string out = f.out.empty() ? f.grid_path + ".robustness.csv" : f.out;
    auto csv = open_csv(out, "cap,fit_points,mean_rel_err,max_rel_err");
    for (const auto& e : curve.entries)
        csv << detail::fmt_double(e.cap) << ',' << e.fit_points << ','
            << detail::fmt_double(e.report.mean_rel_err) << ',' << detail::fmt_double(e.report.max_rel_err)
            << '\n';
    json rep;
    rep["command"] = "robustness";
    rep["grid"] = f.grid_path;
    rep["held_out_n"] = f.held_out_n;
    rep["method"] = f.method;
    rep["family"] = f.family;
    json entries = json::array();
    for (const auto& e : curve.entries)
        entries.push_back({{"cap", e.cap}, {"fit_points", e.fit_points},
                           {"mean_rel_err", e.report.mean_rel_err}, {"max_rel_err", e.report.max_rel_err}});
    rep["entries"] = entries;
    rep["warnings"] = curve.warnings;
    write_json(rep, f.report.empty() ? out + ".report.json" : f.report);
    for (const auto& w : curve.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "robustness curve with " << curve.entries.size() << " caps written to " << out << '\n';
    return 0;
}

struct OptimalFlags {
    std::string law_path;
    double c_min = 0, c_max = 0;
    int per_decade = 1;
    double flop_factor = kFlopFactorDefault;
    double n_lo = 1e6, n_hi = 1e14;
    std::string annotations;
    std::string out;
    std::string report;
};

inline int cmd_optimal(const OptimalFlags& f) {
    const LawFile law = load_law(f.law_path);
    if (!(f.c_min > 0) || !(f.c_max >= f.c_min)) {
        std::cerr << "optimal: need 0 < --c-min <= --c-max\n";
        return 1;
    }
    std::vector<double> budgets;
    for (int k = 0;; ++k) {
        const double c = f.c_min * std::pow(10.0, static_cast<double>(k) / f.per_decade);
        if (c > f.c_max * (1 + 1e-9)) break;
        budgets.push_back(c);
    }
    const AllocationBracket bracket{f.n_lo, f.n_hi};
    const auto sweep = allocation_sweep(law.law, budgets, bracket, f.flop_factor);
    const std::string out = f.out.empty() ? f.law_path + ".optimal.csv" : f.out;
    auto csv = open_csv(out, "c,n_star,d_star,ratio,loss_at_opt,boundary_warning");
    for (const auto& a : sweep)
        csv << detail::fmt_double(a.c) << ',' << detail::fmt_double(a.n_star) << ','
            << detail::fmt_double(a.d_star) << ',' << detail::fmt_double(a.ratio) << ','
            << detail::fmt_double(a.loss_at_opt) << ',' << (a.boundary_warning ? 1 : 0) << '\n';

    json rep;
    rep["command"] = "optimal";
    rep["law_file"] = f.law_path;
    rep["flop_factor"] = f.flop_factor;
    rep["bracket"] = {{"n_lo", f.n_lo}, {"n_hi", f.n_hi}};
    json pts = json::array();
    bool any_boundary = false;
    for (const auto& a : sweep) {
        pts.push_back({{"c", a.c}, {"n_star", a.n_star}, {"d_star", a.d_star}, {"ratio", a.ratio},
                       {"loss_at_opt", a.loss_at_opt}, {"boundary_warning", a.boundary_warning}});
        any_boundary |= a.boundary_warning;
    }
    rep["points"] = pts;
    // Optional overlay of real training configurations (n, d[, label]) for
    // ratio-vs-budget plots.
    if (!f.annotations.empty()) {
        std::ifstream ann(f.annotations);
        if (!ann) throw parse_error("cannot open annotations file: " + f.annotations);
        json rows = json::array();
        std::string line;
        int lineno = 0;
        while (std::getline(ann, line)) {
            ++lineno;
            const std::string t = detail::trim(line);
            if (t.empty() || lineno == 1) continue;  // header
            std::stringstream ss(t);
            std::string ncol, dcol, label;
            std::getline(ss, ncol, ',');
            std::getline(ss, dcol, ',');
            std::getline(ss, label);
            const double n = detail::parse_double(ncol, f.annotations + ":" + std::to_string(lineno));
            const double d = detail::parse_double(dcol, f.annotations + ":" + std::to_string(lineno));
            rows.push_back({{"n", n}, {"d", d}, {"c", f.flop_factor * n * d}, {"ratio", d / n},
                            {"label", label}});
        }
        rep["annotations"] = rows;
    }
    write_json(rep, f.report.empty() ? out + ".report.json" : f.report);
    if (any_boundary)
        std::cerr << "warning: optimum hit the search bracket boundary for at least one budget; "
                     "consider --n-lo/--n-hi\n";
    std::cout << "allocation sweep over " << sweep.size() << " budgets written to " << out << '\n';
    return 0;
}

inline int cmd_diagnose(const std::string& grid_path, const std::string& law_path, std::string prefix,
                        const std::string& report_path) {
    const LossGrid grid = load_grid(grid_path);
    if (prefix.empty()) prefix = grid_path;
    const auto perspectives = differential_perspectives(grid);
    auto csv = open_csv(prefix + ".perspectives.csv", "perspective,available,series_count,mean_r2");
    for (const auto& p : perspectives)
        csv << p.name << ',' << (p.available ? 1 : 0) << ',' << p.series_count << ','
            << detail::fmt_double(p.mean_r2) << '\n';

    json rep;
    rep["command"] = "diagnose";
    rep["grid"] = grid_path;
    json pj = json::array();
    for (const auto& p : perspectives)
        pj.push_back({{"perspective", p.name}, {"available", p.available},
                      {"series_count", p.series_count}, {"mean_r2", p.mean_r2}});
    rep["perspectives"] = pj;

    if (!law_path.empty()) {
        const LawFile law = load_law(law_path);
        if (law.law.family != Family::farseer)
            throw fit_error("diagnose: residual decomposition needs a farseer law");
        const FarseerParams& p = law.law.farseer;
        const StretchedExp ta{p.a1, p.b1, p.alpha};
        const StretchedExp tb{p.a2, p.b2, p.beta};
        const StageThreeResult s3 = stage3_fit_residual(grid, ta, tb);
        auto rcsv = open_csv(prefix + ".residuals.csv", "n,d,o_value,centered");
        for (std::size_t i = 0; i < s3.diagnostics.o_values.size(); ++i) {
            const auto& [n, d, o] = s3.diagnostics.o_values[i];
            const auto& [n2, d2, c] = s3.diagnostics.centered[i];
            rcsv << detail::fmt_double(n) << ',' << detail::fmt_double(d) << ',' << detail::fmt_double(o)
                 << ',' << detail::fmt_double(c) << '\n';
        }
        auto gcsv = open_csv(prefix + ".gvalues.csv", "n,g");
        for (const auto& [n, g] : s3.diagnostics.g_values)
            gcsv << detail::fmt_double(n) << ',' << detail::fmt_double(g) << '\n';
        rep["residual_files"] = {prefix + ".residuals.csv", prefix + ".gvalues.csv"};
        rep["theta_u"] = {{"a3", s3.theta_u.a}, {"b3", s3.theta_u.b}, {"gamma", s3.theta_u.p}};
    }
    write_json(rep, report_path.empty() ? prefix + ".diagnose.report.json" : report_path);
    std::cout << "diagnostics written with prefix " << prefix << '\n';
    return 0;
}

struct CompareFlags {
    std::string law_a, law_b;
    std::string n_range, d_range;
    int resolution = 50;
    std::string out;
    std::string report;
};

inline int cmd_compare(const CompareFlags& f) {
    const LawFile a = load_law(f.law_a);
    const LawFile b = load_law(f.law_b);
    const auto [n_lo, n_hi] = parse_range(f.n_range, "--n-range");
    const auto [d_lo, d_hi] = parse_range(f.d_range, "--d-range");
    const SurfaceDelta delta = surface_compare(a.law, b.law, n_lo, n_hi, d_lo, d_hi, f.resolution);
    const std::string prefix = f.out.empty() ? f.law_a + ".compare" : f.out;
    auto csv = open_csv(prefix + ".delta.csv", "n,d,delta");
    for (std::size_t i = 0; i < delta.n_values.size(); ++i)
        for (std::size_t j = 0; j < delta.d_values.size(); ++j)
            csv << detail::fmt_double(delta.n_values[i]) << ',' << detail::fmt_double(delta.d_values[j])
                << ',' << detail::fmt_double(delta.delta[i * delta.d_values.size() + j]) << '\n';
    auto ccsv = open_csv(prefix + ".crossings.csv", "n,d");
    for (const auto& [n, d] : delta.zero_crossings)
        ccsv << detail::fmt_double(n) << ',' << detail::fmt_double(d) << '\n';
    json rep;
    rep["command"] = "compare";
    rep["law_a"] = f.law_a;
    rep["law_b"] = f.law_b;
    rep["resolution"] = f.resolution;
    rep["has_crossings"] = delta.has_crossings;
    rep["crossing_count"] = delta.zero_crossings.size();
    write_json(rep, f.report.empty() ? prefix + ".report.json" : f.report);
    std::cout << (delta.has_crossings ? "sign-change contour present" : "no sign change") << "; lattice "
              << delta.n_values.size() << "x" << delta.d_values.size() << " written to " << prefix
              << ".delta.csv\n";
    return 0;
}

struct SynthFlags {
    std::string family = "farseer";
    std::vector<double> params;
    std::string law_path;
    double n_min = 2.01e8, n_max = 6.37e9, n_ratio = kDefaultLambda;
    double d_min = 1.0e9, d_max = 4.31e11, d_ratio = kDefaultLambda;
    double noise_sigma = 0, noise_decay = 0;
    std::uint64_t seed = 0;
    double lambda = kDefaultLambda;
    std::string out;
    std::string report;
};

inline int cmd_synth(const SynthFlags& f) {
    SurfaceSpec spec;
    if (!f.law_path.empty()) {
        spec.law = load_law(f.law_path).law;
    } else if (!f.params.empty()) {
        spec.law = law_from_values(f.family == "farseer" ? Family::farseer : Family::chinchilla, f.params);
    } else {
        spec.law = LawParams::make(reference_farseer_params());
    }
    spec.n_ladder = {f.n_min, f.n_max, f.n_ratio};
    spec.d_ladder = {f.d_min, f.d_max, f.d_ratio};
    spec.noise_sigma = f.noise_sigma;
    spec.noise_decay = f.noise_decay;
    spec.seed = f.seed;
    spec.lambda = f.lambda;
    const LossGrid grid = generate_surface(spec);
    save_grid(grid, f.out);
    json rep;
    rep["command"] = "synth";
    rep["law"] = law_to_json(spec.law);
    rep["points"] = grid.size();
    rep["noise_sigma"] = f.noise_sigma;
    rep["noise_decay"] = f.noise_decay;
    rep["seed"] = f.seed;
    rep["grid_digest"] = hex64(grid_digest(grid));
    rep["out"] = f.out;
    write_json(rep, f.report.empty() ? f.out + ".report.json" : f.report);
    std::cout << "wrote " << grid.size() << " points to " << f.out << '\n';
    return 0;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
    using namespace cli_detail;
    CLI::App app{"scaling-law fitting toolkit"};
    app.require_subcommand(1);

    FitFlags fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit a law to a grid file");
    fit_cmd->add_option("--grid", fit.grid_path, "grid CSV")->required();
    fit_cmd->add_option("--family", fit.family)->check(CLI::IsMember({"farseer", "chinchilla"}));
    fit_cmd->add_option("--method", fit.method)->check(CLI::IsMember({"piecewise", "nonlinear"}));
    fit_cmd->add_option("--out", fit.out, "law file to write")->required();
    fit_cmd->add_option("--seed", fit.seed);
    fit_cmd->add_option("--starts", fit.starts);
    fit_cmd->add_option("--objective", fit.objective)->check(CLI::IsMember({"squared", "squared-log"}));
    fit_cmd->add_option("--lambda", fit.lambda, "grid ratio for differencing");
    fit_cmd->add_option("--report", fit.report, "JSON report path");

    std::string predict_law;
    double predict_n = 0, predict_d = 0;
    std::string predict_report;
    auto* predict_cmd = app.add_subcommand("predict", "evaluate a saved law at (n, d)");
    predict_cmd->add_option("--law", predict_law)->required();
    predict_cmd->add_option("--n", predict_n)->required();
    predict_cmd->add_option("--d", predict_d)->required();
    predict_cmd->add_option("--report", predict_report);

    std::string eval_law_path, eval_grid, eval_out, eval_report;
    auto* eval_cmd = app.add_subcommand("eval", "per-point errors of a law on a grid");
    eval_cmd->add_option("--law", eval_law_path)->required();
    eval_cmd->add_option("--grid", eval_grid)->required();
    eval_cmd->add_option("--out", eval_out, "per-point CSV");
    eval_cmd->add_option("--report", eval_report);

    RobustnessFlags rob;
    auto* rob_cmd = app.add_subcommand("robustness", "error at a held-out size vs fitting cap");
    rob_cmd->add_option("--grid", rob.grid_path)->required();
    rob_cmd->add_option("--held-out-n", rob.held_out_n)->required();
    rob_cmd->add_option("--caps", rob.caps, "model-size caps")->required()->delimiter(',');
    rob_cmd->add_option("--method", rob.method)->check(CLI::IsMember({"piecewise", "nonlinear"}));
    rob_cmd->add_option("--family", rob.family)->check(CLI::IsMember({"farseer", "chinchilla"}));
    rob_cmd->add_option("--seed", rob.seed);
    rob_cmd->add_option("--starts", rob.starts);
    rob_cmd->add_option("--out", rob.out);
    rob_cmd->add_option("--report", rob.report);

    OptimalFlags opt;
    auto* opt_cmd = app.add_subcommand("optimal", "compute-optimal allocation sweep");
    opt_cmd->add_option("--law", opt.law_path)->required();
    opt_cmd->add_option("--c-min", opt.c_min)->required();
    opt_cmd->add_option("--c-max", opt.c_max)->required();
    opt_cmd->add_option("--per-decade", opt.per_decade)->check(CLI::PositiveNumber);
    opt_cmd->add_option("--flop-factor", opt.flop_factor);
    opt_cmd->add_option("--n-lo", opt.n_lo);
    opt_cmd->add_option("--n-hi", opt.n_hi);
    opt_cmd->add_option("--annotations", opt.annotations, "optional n,d[,label] CSV overlay");
    opt_cmd->add_option("--out", opt.out);
    opt_cmd->add_option("--report", opt.report);

    std::string diag_grid, diag_law, diag_out, diag_report;
    auto* diag_cmd = app.add_subcommand("diagnose", "differential perspectives and residual series");
    diag_cmd->add_option("--grid", diag_grid)->required();
    diag_cmd->add_option("--law", diag_law, "farseer law for residual decomposition");
    diag_cmd->add_option("--out", diag_out, "output prefix");
    diag_cmd->add_option("--report", diag_report);

    CompareFlags cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "normalized delta surface between two laws");
    cmp_cmd->add_option("--law-a", cmp.law_a)->required();
    cmp_cmd->add_option("--law-b", cmp.law_b)->required();
    cmp_cmd->add_option("--n-range", cmp.n_range, "LO:HI")->required();
    cmp_cmd->add_option("--d-range", cmp.d_range, "LO:HI")->required();
    cmp_cmd->add_option("--resolution", cmp.resolution);
    cmp_cmd->add_option("--out", cmp.out, "output prefix");
    cmp_cmd->add_option("--report", cmp.report);

    SynthFlags synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic grid");
    synth_cmd->add_option("--family", synth.family)->check(CLI::IsMember({"farseer", "chinchilla"}));
    synth_cmd->add_option("--params", synth.params, "comma-separated law parameters")->delimiter(',');
    synth_cmd->add_option("--law", synth.law_path, "take parameters from a law file");
    synth_cmd->add_option("--n-min", synth.n_min);
    synth_cmd->add_option("--n-max", synth.n_max);
    synth_cmd->add_option("--n-ratio", synth.n_ratio);
    synth_cmd->add_option("--d-min", synth.d_min);
    synth_cmd->add_option("--d-max", synth.d_max);
    synth_cmd->add_option("--d-ratio", synth.d_ratio);
    synth_cmd->add_option("--noise-sigma", synth.noise_sigma);
    synth_cmd->add_option("--noise-decay", synth.noise_decay, "per-n sigma decay power (0 = constant)");
    synth_cmd->add_option("--seed", synth.seed);
    synth_cmd->add_option("--lambda", synth.lambda);
    synth_cmd->add_option("--out", synth.out, "grid CSV to write")->required();
    synth_cmd->add_option("--report", synth.report);

    try {
        app.parse(argc, const_cast<char**>(argv));
        if (fit_cmd->parsed()) return cmd_fit(fit);
        if (predict_cmd->parsed()) return cmd_predict(predict_law, predict_n, predict_d, predict_report);
        if (eval_cmd->parsed()) return cmd_eval(eval_law_path, eval_grid, eval_out, eval_report);
        if (rob_cmd->parsed()) return cmd_robustness(rob);
        if (opt_cmd->parsed()) return cmd_optimal(opt);
        if (diag_cmd->parsed()) return cmd_diagnose(diag_grid, diag_law, diag_out, diag_report);
        if (cmp_cmd->parsed()) return cmd_compare(cmp);
        if (synth_cmd->parsed()) return cmd_synth(synth);
        std::cerr << app.help();
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace scalefit
