// Measurement and parameter types for loss-surface fitting, plus evaluation
// of the two parametric law families.
//
// Conventions used throughout the library:
//   n    - model size as a non-embedding parameter count (opaque positive count)
//   d    - training tokens
//   loss - bits per character (BPC)
// All types are immutable values after construction and all functions are
// pure, so everything here is safe to call concurrently.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scalefit {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Overflow / domain failure while evaluating a law.
class evaluation_error : public error {
public:
    using error::error;
};

// Domain violation while applying a coordinate transform.
class transform_error : public error {
public:
    using error::error;
};

// Regression or pipeline failure (singular system, insufficient data,
// residual sign, no feasible transform, diverged fit).
class fit_error : public error {
public:
    using error::error;
};

// Grid invariant violation (construction or generation).
class grid_error : public error {
public:
    using error::error;
};

// File parsing / validation failure; message carries line information.
class parse_error : public error {
public:
    using error::error;
};

inline constexpr double kDefaultLambda = 1.4142135623730951;  // sqrt(2)

// Exponent arguments beyond this are treated as evaluation failures rather
// than silently saturating exp().
inline constexpr double kExpArgLimit = 700.0;

struct LossPoint {
    double n = 0;
    double d = 0;
    double loss = 0;
};

inline bool valid_point(const LossPoint& p) {
    return std::isfinite(p.n) && std::isfinite(p.d) && std::isfinite(p.loss) &&
           p.n > 0 && p.d > 0 && p.loss > 0;
}

// An empirical loss surface: (n, d, loss) observations organized by model
// size, with the geometric grid ratio lambda used for finite differencing.
//
// Construction enforces structural validity: finite positive values, no
// duplicate (n, d) pairs, lambda > 1. The piecewise pipeline additionally
// needs enough sizes per axis (>= 3 model sizes with >= 4 data sizes each);
// that is checked where fitting starts, so small grids remain usable for
// evaluation and end-to-end fitting.
class LossGrid {
public:
    explicit LossGrid(std::vector<LossPoint> points, double lambda = kDefaultLambda)
        : points_(std::move(points)), lambda_(lambda) {
        if (!(lambda_ > 1.0) || !std::isfinite(lambda_))
            throw grid_error("LossGrid: lambda must be finite and > 1, got " + std::to_string(lambda_));
        if (points_.empty()) throw grid_error("LossGrid: no points");
        for (const auto& p : points_) {
            if (!valid_point(p))
                throw grid_error("LossGrid: invalid point (n=" + std::to_string(p.n) +
                                 ", d=" + std::to_string(p.d) + ", loss=" + std::to_string(p.loss) + ")");
        }
        std::sort(points_.begin(), points_.end(), [](const LossPoint& a, const LossPoint& b) {
            if (a.n != b.n) return a.n < b.n;
            return a.d < b.d;
        });
        for (std::size_t i = 1; i < points_.size(); ++i) {
            if (points_[i].n == points_[i - 1].n && points_[i].d == points_[i - 1].d)
                throw grid_error("LossGrid: duplicate (n, d) pair at n=" + std::to_string(points_[i].n) +
                                 ", d=" + std::to_string(points_[i].d));
        }
    }

    const std::vector<LossPoint>& points() const { return points_; }
    double lambda() const { return lambda_; }
    std::size_t size() const { return points_.size(); }

    // Distinct model sizes, ascending.
    std::vector<double> model_sizes() const {
        std::vector<double> out;
        for (const auto& p : points_)
            if (out.empty() || out.back() != p.n) out.push_back(p.n);
        return out;
    }

    // Data sizes for one model size, ascending.
    std::vector<double> data_sizes(double n) const {
        std::vector<double> out;
        for (const auto& p : points_)
            if (p.n == n) out.push_back(p.d);
        return out;
    }

    const LossPoint* find(double n, double d) const {
        for (const auto& p : points_)
            if (p.n == n && p.d == d) return &p;
        return nullptr;
    }

private:
    std::vector<LossPoint> points_;
    double lambda_;
};

// The nine scalars of the stretched-exponential law
//   L(n, d) = exp(a3 n^gamma + b3) + exp(a2 n^beta + b2) * d^(-exp(a1 n^alpha + b1))
struct FarseerParams {
    double a1 = 0, b1 = 0, alpha = 0;  // exponent term A(n)
    double a2 = 0, b2 = 0, beta = 0;   // coefficient term B(n)
    double a3 = 0, b3 = 0, gamma = 0;  // residual term U(n)
};

// The five scalars of L(n, d) = A/n^alpha + B/d^beta + E.
struct ChinchillaParams {
    double A = 0, alpha = 0, B = 0, beta = 0, E = 0;
};

namespace detail {

inline double checked_exp(double arg, const char* term) {
    if (!std::isfinite(arg))
        throw evaluation_error(std::string("non-finite exponent argument in ") + term);
    if (arg > kExpArgLimit || arg < -kExpArgLimit)
        throw evaluation_error(std::string("exponent argument ") + std::to_string(arg) +
                               " out of range in " + term);
    return std::exp(arg);
}

}  // namespace detail

struct FarseerComponents {
    double a_of_n = 0;  // data-scaling exponent A(n)
    double b_of_n = 0;  // data-scaling coefficient B(n)
    double u_of_n = 0;  // model-dependent residual term
};

// The three stretched-exponential factors at a given model size.
inline FarseerComponents farseer_components(const FarseerParams& p, double n) {
    if (!(n > 0) || !std::isfinite(n)) throw evaluation_error("farseer_components: n must be positive and finite");
    FarseerComponents c;
    c.a_of_n = detail::checked_exp(p.a1 * std::pow(n, p.alpha) + p.b1, "exponent term A(n)");
    c.b_of_n = detail::checked_exp(p.a2 * std::pow(n, p.beta) + p.b2, "coefficient term B(n)");
    c.u_of_n = detail::checked_exp(p.a3 * std::pow(n, p.gamma) + p.b3, "residual term U(n)");
    return c;
}

inline double eval_farseer(const FarseerParams& p, double n, double d) {
    if (!(n > 0) || !(d > 0) || !std::isfinite(n) || !std::isfinite(d))
        throw evaluation_error("eval_farseer: n and d must be positive and finite");
    const FarseerComponents c = farseer_components(p, n);
    // Underflow of the data power term is the vanishing-term limit, not an
    // error; only growth past the clamp is.
    const double data_arg = -c.a_of_n * std::log(d);
    if (!std::isfinite(data_arg) || data_arg > kExpArgLimit)
        throw evaluation_error("exponent argument " + std::to_string(data_arg) +
                               " out of range in data power term d^(-A(n))");
    const double loss = c.u_of_n + c.b_of_n * std::exp(data_arg);
    if (!std::isfinite(loss))
        throw evaluation_error("eval_farseer: non-finite loss (coefficient term overflow)");
    return loss;
}

inline double eval_chinchilla(const ChinchillaParams& p, double n, double d) {
    if (!(n > 0) || !(d > 0) || !std::isfinite(n) || !std::isfinite(d))
        throw evaluation_error("eval_chinchilla: n and d must be positive and finite");
    const double loss = p.A / std::pow(n, p.alpha) + p.B / std::pow(d, p.beta) + p.E;
    if (!std::isfinite(loss)) throw evaluation_error("eval_chinchilla: non-finite loss");
    return loss;
}

enum class Family { farseer, chinchilla };

inline const char* family_name(Family f) { return f == Family::farseer ? "farseer" : "chinchilla"; }

struct LawParams {
    Family family = Family::farseer;
    FarseerParams farseer;
    ChinchillaParams chinchilla;

    static LawParams make(const FarseerParams& p) {
        LawParams l;
        l.family = Family::farseer;
        l.farseer = p;
        return l;
    }
    static LawParams make(const ChinchillaParams& p) {
        LawParams l;
        l.family = Family::chinchilla;
        l.chinchilla = p;
        return l;
    }
};

inline double eval_law(const LawParams& law, double n, double d) {
    return law.family == Family::farseer ? eval_farseer(law.farseer, n, d)
                                         : eval_chinchilla(law.chinchilla, n, d);
}

// Reference farseer coefficients: a known-good fitted law over
// n in [2e8, 6.4e9], d in [1e9, 5e11]. Used as the default synthetic
// generator and as the standard test surface.
inline FarseerParams reference_farseer_params() {
    FarseerParams p;
    p.a1 = -0.124;
    p.b1 = 0.424;
    p.alpha = 0.123;
    p.a2 = 88.01;
    p.b2 = -6.287;
    p.beta = -0.1;
    p.a3 = -0.021;
    p.b3 = -0.091;
    p.gamma = 0.169;
    return p;
}

}  // namespace scalefit
