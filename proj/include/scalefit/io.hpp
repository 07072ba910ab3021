// File formats: the grid CSV (header "n,d,loss"), the versioned key/value
// law file with its provenance block, and the BPC conversion helper.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "scalefit/core.hpp"
#include "scalefit/report.hpp"

namespace scalefit {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& tok, const std::string& where) {
    const std::string t = trim(tok);
    if (t.empty()) throw parse_error(where + ": empty numeric field");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
        throw parse_error(where + ": malformed number '" + t + "'");
    return v;
}

// Shortest round-trip decimal form (17 significant digits).
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// FNV-1a over the bit patterns of the sorted (n, d, loss) rows plus lambda;
// identifies the exact grid a law was fitted on.
inline std::uint64_t grid_digest(const LossGrid& grid) {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&h](double v) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    feed(grid.lambda());
    for (const auto& p : grid.points()) {
        feed(p.n);
        feed(p.d);
        feed(p.loss);
    }
    return h;
}

// Loads a grid CSV: mandatory header "n,d,loss", one observation per line,
// numbers in plain or scientific notation, LF or CRLF endings. Violations
// carry line numbers.
inline LossGrid load_grid(const std::filesystem::path& path, double lambda = kDefaultLambda) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open grid file: " + path.string());
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw parse_error(path.string() + ": empty file");
    ++lineno;
    {
        std::string h = detail::trim(line);
        h.erase(std::remove_if(h.begin(), h.end(), [](char c) { return c == ' ' || c == '\t'; }), h.end());
        if (h != "n,d,loss")
            throw parse_error(path.string() + ":1: expected header 'n,d,loss', got '" + detail::trim(line) + "'");
    }
    std::vector<LossPoint> pts;
    std::map<std::pair<double, double>, int> seen;  // (n, d) -> first line
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        std::vector<std::string> cols;
        std::stringstream ss(t);
        std::string tok;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() != 3)
            throw parse_error(where + ": expected 3 columns, got " + std::to_string(cols.size()));
        LossPoint p;
        p.n = detail::parse_double(cols[0], where + " column n");
        p.d = detail::parse_double(cols[1], where + " column d");
        p.loss = detail::parse_double(cols[2], where + " column loss");
        if (!valid_point(p))
            throw parse_error(where + ": invalid observation (n, d, loss must be positive and finite)");
        auto [it, inserted] = seen.emplace(std::make_pair(p.n, p.d), lineno);
        if (!inserted)
            throw parse_error(where + ": duplicate (n, d) pair, first seen at line " +
                              std::to_string(it->second));
        pts.push_back(p);
    }
    try {
        return LossGrid(std::move(pts), lambda);
    } catch (const grid_error& e) {
        throw parse_error(path.string() + ": " + e.what());
    }
}

inline void save_grid(const LossGrid& grid, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot write grid file: " + path.string());
    out << "n,d,loss\n";
    for (const auto& p : grid.points())
        out << detail::fmt_double(p.n) << ',' << detail::fmt_double(p.d) << ','
            << detail::fmt_double(p.loss) << '\n';
}

inline constexpr const char* kToolVersion = "scalefit 0.1.0";
inline constexpr int kLawFileVersion = 1;

struct Provenance {
    std::string method;       // "piecewise" | "nonlinear" | "external"
    std::string grid_digest;  // hex digest of the fitted grid, empty if unknown
    std::string config;
    std::string tool_version = kToolVersion;
    std::vector<std::string> warnings;
};

struct LawFile {
    int version = kLawFileVersion;
    LawParams law;
    Provenance provenance;
};

inline std::vector<std::pair<std::string, double>> law_param_list(const LawParams& law) {
    if (law.family == Family::farseer) {
        const FarseerParams& p = law.farseer;
        return {{"a1", p.a1}, {"b1", p.b1}, {"alpha", p.alpha}, {"a2", p.a2},       {"b2", p.b2},
                {"beta", p.beta}, {"a3", p.a3}, {"b3", p.b3},   {"gamma", p.gamma}};
    }
    const ChinchillaParams& p = law.chinchilla;
    return {{"A", p.A}, {"alpha", p.alpha}, {"B", p.B}, {"beta", p.beta}, {"E", p.E}};
}

// Key/value text document; doubles are written with 17 significant digits so
// save/load round-trips bit-exactly.
inline void save_law(const LawFile& file, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw parse_error("cannot write law file: " + path.string());
    out << "version = " << file.version << '\n';
    out << "family = " << family_name(file.law.family) << '\n';
    for (const auto& [k, v] : law_param_list(file.law))
        out << "param." << k << " = " << detail::fmt_double(v) << '\n';
    out << "provenance.method = " << file.provenance.method << '\n';
    out << "provenance.grid_digest = " << file.provenance.grid_digest << '\n';
    out << "provenance.config = " << file.provenance.config << '\n';
    out << "provenance.tool_version = " << file.provenance.tool_version << '\n';
    for (std::size_t i = 0; i < file.provenance.warnings.size(); ++i)
        out << "provenance.warning." << i << " = " << file.provenance.warnings[i] << '\n';
}

inline LawFile load_law(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open law file: " + path.string());
    std::map<std::string, std::string> kv;
    std::vector<std::string> warnings;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw parse_error(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        if (key.rfind("provenance.warning.", 0) == 0) {
            warnings.push_back(val);
            continue;
        }
        kv[key] = val;
    }
    auto need = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw parse_error(path.string() + ": missing key '" + k + "'");
        return it->second;
    };
    LawFile file;
    file.version = static_cast<int>(detail::parse_double(need("version"), path.string() + " version"));
    if (file.version != kLawFileVersion)
        throw parse_error(path.string() + ": unsupported law file version " + std::to_string(file.version));
    const std::string fam = need("family");
    auto param = [&](const char* name) {
        return detail::parse_double(need(std::string("param.") + name), path.string() + " param." + name);
    };
    if (fam == "farseer") {
        FarseerParams p;
        p.a1 = param("a1"); p.b1 = param("b1"); p.alpha = param("alpha");
        p.a2 = param("a2"); p.b2 = param("b2"); p.beta = param("beta");
        p.a3 = param("a3"); p.b3 = param("b3"); p.gamma = param("gamma");
        if (p.alpha == 0 || p.beta == 0 || p.gamma == 0 || !std::isfinite(p.alpha) ||
            !std::isfinite(p.beta) || !std::isfinite(p.gamma))
            throw parse_error(path.string() + ": farseer exponents must be finite and nonzero");
        file.law = LawParams::make(p);
    } else if (fam == "chinchilla") {
        ChinchillaParams p;
        p.A = param("A"); p.alpha = param("alpha"); p.B = param("B"); p.beta = param("beta"); p.E = param("E");
        if (p.A < 0 || p.B < 0 || p.E < 0 || !(p.alpha > 0) || !(p.beta > 0))
            throw parse_error(path.string() + ": chinchilla parameters violate A,B,E >= 0 and alpha,beta > 0");
        file.law = LawParams::make(p);
    } else {
        throw parse_error(path.string() + ": unknown family '" + fam + "'");
    }
    file.provenance.method = kv.count("provenance.method") ? kv["provenance.method"] : "";
    file.provenance.grid_digest = kv.count("provenance.grid_digest") ? kv["provenance.grid_digest"] : "";
    file.provenance.config = kv.count("provenance.config") ? kv["provenance.config"] : "";
    file.provenance.tool_version = kv.count("provenance.tool_version") ? kv["provenance.tool_version"] : "";
    file.provenance.warnings = std::move(warnings);
    return file;
}

// Converts per-token cross-entropy to bits per character:
//   bpc = loss * log2(base) * tokens / chars
// `input_log_base` is the base of the logarithm the loss was measured in
// (natural log by default).
inline double bpc_from_loss(double loss_per_token, double tokens, double chars,
                            double input_log_base = std::numbers::e) {
    if (!(tokens > 0) || !(chars > 0)) throw evaluation_error("bpc_from_loss: tokens and chars must be positive");
    if (!std::isfinite(loss_per_token)) throw evaluation_error("bpc_from_loss: loss must be finite");
    if (!(input_log_base > 0) || input_log_base == 1.0)
        throw evaluation_error("bpc_from_loss: log base must be positive and != 1");
    return loss_per_token * (std::log(input_log_base) / std::log(2.0)) * tokens / chars;
}

}  // namespace scalefit
