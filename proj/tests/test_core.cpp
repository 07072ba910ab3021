#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "scalefit/core.hpp"

using namespace scalefit;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("eval_farseer matches an independent evaluation of the reference law") {
    const FarseerParams p = reference_farseer_params();
    // frozen from a one-off script substitution into the closed form
    REQUIRE(eval_farseer(p, 6.37e9, 9.05e10) == Approx(0.44852480335154887).epsilon(1e-13));
}

TEST_CASE("farseer components at a small model size") {
    const FarseerParams p = reference_farseer_params();
    const FarseerComponents c = farseer_components(p, 2.01e8);
    REQUIRE(c.a_of_n == Approx(0.41548395814092998).epsilon(1e-13));
    REQUIRE(c.b_of_n == Approx(829.69363616356725).epsilon(1e-13));
    REQUIRE(c.u_of_n == Approx(0.53663004574130724).epsilon(1e-13));
    REQUIRE(c.a_of_n > 0);
    REQUIRE(c.b_of_n > 0);
    REQUIRE(c.u_of_n > 0);
}

TEST_CASE("zeroed exponent term gives A(n) = 1") {
    FarseerParams p = reference_farseer_params();
    p.a1 = 0;
    p.b1 = 0;
    for (double n : {1e6, 1e9, 1e12})
        REQUIRE(farseer_components(p, n).a_of_n == 1.0);
}

TEST_CASE("A(n) of the reference law decreases with n") {
    const FarseerParams p = reference_farseer_params();
    double prev = farseer_components(p, 1e8).a_of_n;
    for (double n = 2e8; n < 1e12; n *= 2) {
        const double cur = farseer_components(p, n).a_of_n;
        REQUIRE(cur < prev);
        prev = cur;
    }
}

TEST_CASE("eval_farseer recombines from its components") {
    const FarseerParams p = reference_farseer_params();
    for (double n : {2.01e8, 6.37e9, 2.51e10}) {
        for (double d : {1e9, 9.05e10, 4.31e11}) {
            const FarseerComponents c = farseer_components(p, n);
            const double recombined = c.u_of_n + c.b_of_n * std::pow(d, -c.a_of_n);
            REQUIRE(eval_farseer(p, n, d) == Approx(recombined).epsilon(1e-15));
        }
    }
}

TEST_CASE("farseer loss strictly decreases in d when the data terms are positive") {
    const FarseerParams p = reference_farseer_params();
    for (double n : {3e8, 1e9, 5e10}) {
        REQUIRE(eval_farseer(p, n, 2e10) < eval_farseer(p, n, 1e10));
        double d = 1e9;
        double prev = eval_farseer(p, n, d);
        for (int i = 0; i < 20; ++i) {
            d *= 1.7;
            const double cur = eval_farseer(p, n, d);
            REQUIRE(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("the data term vanishes as d grows") {
    const FarseerParams p = reference_farseer_params();
    const double u = farseer_components(p, 1e9).u_of_n;
    REQUIRE(eval_farseer(p, 1e9, 1e280) == Approx(u).epsilon(1e-9));
}

TEST_CASE("eval_chinchilla closed-form cases") {
    REQUIRE(eval_chinchilla({1, 1, 1, 1, 0}, 1, 1) == 2.0);
    REQUIRE(eval_chinchilla({2, 0.5, 3, 0.5, 1}, 4, 9) == Approx(3.0));
    const ChinchillaParams constant{0, 1, 0, 1, 0.73};
    for (double n : {1.0, 1e5, 1e12})
        for (double d : {1.0, 1e7, 1e13})
            REQUIRE(eval_chinchilla(constant, n, d) == Approx(0.73));
}

TEST_CASE("chinchilla loss approaches E as n and d grow") {
    const ChinchillaParams p{10, 0.4, 20, 0.3, 1.5};
    REQUIRE(eval_chinchilla(p, 1e40, 1e40) == Approx(1.5).epsilon(1e-10));
}

TEST_CASE("finite-difference loss slope along n is negative for the reference law") {
    const FarseerParams p = reference_farseer_params();
    const LawParams law = LawParams::make(p);
    for (int i = 0; i < 10; ++i) {
        const double n = 1e8 * std::pow(1e4, i / 9.0);
        for (int j = 0; j < 10; ++j) {
            const double d = 1e9 * std::pow(1e4, j / 9.0);
            const double h = 1e-4;
            const double slope = (eval_law(law, n * std::exp(h), d) - eval_law(law, n * std::exp(-h), d)) / (2 * h);
            REQUIRE(slope < 0);
        }
    }
}

TEST_CASE("exponent overflow reports the offending term") {
    FarseerParams p = reference_farseer_params();
    p.a3 = 1.0;
    p.gamma = 1.0;  // a3 * n at n=1e9 is way past the clamp
    REQUIRE_THROWS_MATCHES(eval_farseer(p, 1e9, 1e10), evaluation_error,
                           Catch::Matchers::MessageMatches(ContainsSubstring("residual term")));
    FarseerParams q = reference_farseer_params();
    q.a2 = 1.0;
    q.beta = 1.0;
    REQUIRE_THROWS_MATCHES(eval_farseer(q, 1e9, 1e10), evaluation_error,
                           Catch::Matchers::MessageMatches(ContainsSubstring("coefficient term")));
}

TEST_CASE("evaluation rejects non-positive inputs") {
    const FarseerParams p = reference_farseer_params();
    REQUIRE_THROWS_AS(eval_farseer(p, 0, 1e9), evaluation_error);
    REQUIRE_THROWS_AS(eval_farseer(p, 1e9, -1), evaluation_error);
    REQUIRE_THROWS_AS(eval_chinchilla({1, 1, 1, 1, 0}, 1e9, 0), evaluation_error);
}

TEST_CASE("LossGrid validates its invariants") {
    auto pts = [](int n_count, int d_count) {
        std::vector<LossPoint> v;
        for (int i = 0; i < n_count; ++i)
            for (int j = 0; j < d_count; ++j)
                v.push_back({1e8 * (i + 1), 1e9 * (j + 1), 1.0 + 0.01 * i + 0.001 * j});
        return v;
    };
    REQUIRE_NOTHROW(LossGrid(pts(2, 4)));
    REQUIRE_NOTHROW(LossGrid(pts(1, 3)));  // small grids stay usable for evaluation
    REQUIRE_THROWS_AS(LossGrid({}), grid_error);
    REQUIRE_THROWS_AS(LossGrid(pts(2, 4), 1.0), grid_error);  // lambda must exceed 1

    auto dup = pts(2, 4);
    dup.push_back(dup.front());
    REQUIRE_THROWS_MATCHES(LossGrid(dup), grid_error,
                           Catch::Matchers::MessageMatches(ContainsSubstring("duplicate")));

    auto bad = pts(2, 4);
    bad[0].loss = -0.5;
    REQUIRE_THROWS_AS(LossGrid(bad), grid_error);
    auto inf = pts(2, 4);
    inf[1].d = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(LossGrid(inf), grid_error);
}

TEST_CASE("LossGrid organizes points by model size") {
    std::vector<LossPoint> v;
    for (double n : {2e8, 1e8})
        for (double d : {4e9, 1e9, 2e9, 8e9})
            v.push_back({n, d, 1.0 + 1e9 / d});
    const LossGrid g(v);
    const auto ns = g.model_sizes();
    REQUIRE(ns == std::vector<double>{1e8, 2e8});
    const auto ds = g.data_sizes(1e8);
    REQUIRE(ds == std::vector<double>{1e9, 2e9, 4e9, 8e9});
    REQUIRE(g.find(2e8, 4e9) != nullptr);
    REQUIRE(g.find(2e8, 3e9) == nullptr);
}
