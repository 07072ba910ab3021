// Synthetic loss-surface generation: geometric (n, d) ladders, law evaluation,
// seeded Gaussian noise with per-point RNG substreams.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scalefit/core.hpp"

namespace scalefit {

struct LadderSpec {
    double lo = 0;
    double hi = 0;
    double ratio = kDefaultLambda;
};

// Geometric ladder lo * ratio^k; the endpoint is included when it lands
// within 1% of hi (same tolerance the differencing uses for lambda*d pairing).
inline std::vector<double> make_ladder(const LadderSpec& s) {
    if (!(s.lo > 0) || !(s.hi >= s.lo) || !(s.ratio > 1.0))
        throw grid_error("ladder: need 0 < lo <= hi and ratio > 1");
    std::vector<double> out;
    for (double v = s.lo; v <= s.hi * 1.01; v *= s.ratio) out.push_back(v);
    return out;
}

struct SurfaceSpec {
    LawParams law;
    LadderSpec n_ladder;
    LadderSpec d_ladder;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    // Optional per-n noise schedule sigma_n = noise_sigma * (n / n_lo)^(-noise_decay);
    // 0 keeps sigma constant.
    double noise_decay = 0.0;
    double lambda = kDefaultLambda;  // grid ratio recorded on the produced LossGrid
};

namespace detail {

// splitmix64; used to derive independent per-point RNG streams from
// (seed, n-index, d-index) so parallel and serial generation agree.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    return mix64(mix64(seed ^ (i * 0x9e3779b97f4a7c15ull)) ^ (j * 0xc2b2ae3d27d4eb4full));
}

}  // namespace detail

inline LossGrid generate_surface(const SurfaceSpec& spec) {
    if (!(spec.noise_sigma >= 0) || !std::isfinite(spec.noise_sigma))
        throw grid_error("generate_surface: noise_sigma must be finite and >= 0");
    const auto ns = make_ladder(spec.n_ladder);
    const auto ds = make_ladder(spec.d_ladder);
    std::vector<LossPoint> pts;
    pts.reserve(ns.size() * ds.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double sigma_n =
            spec.noise_decay == 0.0
                ? spec.noise_sigma
                : spec.noise_sigma * std::pow(ns[i] / ns.front(), -spec.noise_decay);
        for (std::size_t j = 0; j < ds.size(); ++j) {
            double loss = eval_law(spec.law, ns[i], ds[j]);
            if (spec.noise_sigma > 0) {
                std::mt19937_64 eng(detail::substream_seed(spec.seed, i, j));
                std::normal_distribution<double> noise(0.0, sigma_n);
                loss += noise(eng);
            }
            if (!(loss > 0))
                throw grid_error("generate_surface: non-positive loss " + std::to_string(loss) +
                                 " at (n=" + std::to_string(ns[i]) + ", d=" + std::to_string(ds[j]) + ")");
            pts.push_back({ns[i], ds[j], loss});
        }
    }
    return LossGrid(std::move(pts), spec.lambda);
}

}  // namespace scalefit
