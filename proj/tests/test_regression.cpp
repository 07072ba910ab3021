#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "scalefit/regression.hpp"

using namespace scalefit;
using Catch::Approx;

TEST_CASE("linear_fit recovers exact lines") {
    const std::vector<double> xs{0, 1, 2}, ys{1, 3, 5};
    const LinearFit f = linear_fit(xs, ys);
    REQUIRE(f.slope == Approx(2.0));
    REQUIRE(f.intercept == Approx(1.0));
    REQUIRE(f.rss == Approx(0.0).margin(1e-24));
    REQUIRE(f.r2 == Approx(1.0));
}

TEST_CASE("linear_fit on a constant response") {
    const std::vector<double> xs{0, 1}, ys{4.2, 4.2};
    const LinearFit f = linear_fit(xs, ys);
    REQUIRE(f.slope == Approx(0.0).margin(1e-15));
    REQUIRE(f.intercept == Approx(4.2));
}

TEST_CASE("linear_fit hand-solved normal equations") {
    const std::vector<double> xs{0, 1, 2}, ys{0, 1, 1};
    const LinearFit f = linear_fit(xs, ys);
    REQUIRE(f.slope == Approx(0.5).epsilon(1e-14));
    REQUIRE(f.intercept == Approx(1.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("linear_fit rejects degenerate abscissae") {
    const std::vector<double> xs{3, 3, 3}, ys{1, 2, 3};
    REQUIRE_THROWS_AS(linear_fit(xs, ys), fit_error);
    REQUIRE_THROWS_AS(linear_fit(std::vector<double>{1}, std::vector<double>{1}), fit_error);
}

TEST_CASE("residuals of an intercept fit sum to zero") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> xs, ys;
        double scale = 0;
        for (int i = 0; i < 12; ++i) {
            xs.push_back(u(eng));
            ys.push_back(u(eng));
            scale = std::max(scale, std::fabs(ys.back()));
        }
        if (xs.front() == xs.back()) continue;
        const LinearFit f = linear_fit(xs, ys);
        double sum = 0;
        for (double r : f.residuals) sum += r;
        REQUIRE(std::fabs(sum) <= 1e-9 * std::max(1.0, scale));
        REQUIRE(f.rss >= 0);
        REQUIRE(f.r2 <= 1.0);
    }
}

TEST_CASE("linear_fit rss is the minimum over a dense local grid") {
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> u(0.1, 4.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> xs, ys;
        const int m = 3 + static_cast<int>(eng() % 8);  // <= 10 points
        for (int i = 0; i < m; ++i) {
            xs.push_back(i + u(eng));
            ys.push_back(2 * u(eng) - 1 + 0.5 * xs.back());
        }
        const LinearFit f = linear_fit(xs, ys);
        auto rss_at = [&](double a, double b) {
            double s = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double r = ys[i] - (a * xs[i] + b);
                s += r * r;
            }
            return s;
        };
        const double sa = std::fabs(f.slope) > 1e-9 ? std::fabs(f.slope) : 1.0;
        const double sb = std::fabs(f.intercept) > 1e-9 ? std::fabs(f.intercept) : 1.0;
        for (int i = -10; i <= 10; ++i)
            for (int j = -10; j <= 10; ++j)
                REQUIRE(f.rss <= rss_at(f.slope + sa * 0.01 * i, f.intercept + sb * 0.01 * j) + 1e-12);
    }
}

TEST_CASE("apply_transform basics and domain errors") {
    REQUIRE(apply_transform(TransformKind::identity(), 3.5) == 3.5);
    REQUIRE(apply_transform(TransformKind::power(2), 3.0) == Approx(9.0));
    REQUIRE(apply_transform(TransformKind::log(), std::exp(1.0)) == Approx(1.0));
    REQUIRE_THROWS_AS(apply_transform(TransformKind::log(), -1.0), transform_error);
    REQUIRE_THROWS_AS(apply_transform(TransformKind::power(0.5), -4.0), transform_error);
    REQUIRE(apply_transform(TransformKind::power(2), -3.0) == Approx(9.0));  // integral exponent is fine
    REQUIRE_THROWS_AS(TransformKind::power(0.0), transform_error);
}

TEST_CASE("select_transforms keeps already-linear data in identity space") {
    std::vector<double> xs, ys;
    for (int i = 1; i <= 8; ++i) {
        xs.push_back(i);
        ys.push_back(2.0 * i + 1.0);
    }
    const TransformSelection s = select_transforms(xs, ys);
    REQUIRE(s.gy.type == TransformType::identity);
    REQUIRE(s.gx.type == TransformType::identity);
    REQUIRE(s.loss == Approx(0.0).margin(1e-18));
    REQUIRE(s.loss == s.fit.rss);
}

TEST_CASE("select_transforms log-linearizes exponentials") {
    std::vector<double> xs, ys;
    for (int i = 1; i <= 8; ++i) {
        xs.push_back(0.5 * i);
        ys.push_back(std::exp(0.5 * i));
    }
    const TransformSelection s = select_transforms(xs, ys);
    REQUIRE(s.gy.type == TransformType::log);
    REQUIRE(s.gx.type == TransformType::identity);
    REQUIRE(s.loss == Approx(0.0).margin(1e-18));
}

TEST_CASE("select_transforms recovers a generating power exponent") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 12; ++i) {
        const double x = 1e2 * std::pow(1e4, i / 11.0);  // 1e2 .. 1e6 log-spaced
        xs.push_back(x);
        ys.push_back(std::exp(0.5 * std::pow(x, 0.3) + 1.0));
    }
    const TransformSelection s = select_transforms(xs, ys);
    REQUIRE(s.gy.type == TransformType::log);
    REQUIRE(s.gx.type == TransformType::power);
    REQUIRE(s.gx.exponent == Approx(0.3).margin(0.01));
}

TEST_CASE("noiseless power-law data regresses with r2 = 1") {
    std::vector<double> lx, ly;
    for (int i = 1; i <= 10; ++i) {
        lx.push_back(std::log(1e3 * i));
        ly.push_back(std::log(7.0) - 0.42 * std::log(1e3 * i));
    }
    const LinearFit f = linear_fit(lx, ly);
    REQUIRE(f.r2 >= 1.0 - 1e-12);
}

TEST_CASE("select_transforms with an identity-only dictionary degenerates to linear_fit") {
    std::vector<double> xs, ys;
    for (int i = 1; i <= 9; ++i) {
        xs.push_back(i);
        ys.push_back(3.0 * i - 2.0 + (i % 3) * 0.1);
    }
    const std::vector<TransformKind> dict{TransformKind::identity()};
    const std::vector<double> grid{0.5};
    const TransformSelection s = select_transforms(xs, ys, dict, grid);
    const LinearFit direct = linear_fit(xs, ys);
    REQUIRE(s.fit.slope == direct.slope);
    REQUIRE(s.fit.intercept == direct.intercept);
    REQUIRE(s.fit.rss == direct.rss);
}

TEST_CASE("log-power generated data strictly prefers the log response over identity") {
    // coefficient-scale stretched exponential: values >> 1
    std::vector<double> xs, ys;
    for (int i = 0; i < 11; ++i) {
        const double x = 2.01e8 * std::pow(32.0, i / 10.0);
        xs.push_back(x);
        ys.push_back(std::exp(88.01 * std::pow(x, -0.1) - 6.287));
    }
    auto rss_for = [&](const TransformKind& gy) {
        std::vector<double> ty(ys.size());
        for (std::size_t i = 0; i < ys.size(); ++i) ty[i] = apply_transform(gy, ys[i]);
        const PowerProjectionFit f = power_projection_fit(xs, ty);
        return f.fit.rss;
    };
    REQUIRE(rss_for(TransformKind::log()) < rss_for(TransformKind::identity()));
    const TransformSelection s = select_transforms(xs, ys);
    REQUIRE(s.gy.type == TransformType::log);
    REQUIRE(s.gx.type == TransformType::power);
}

TEST_CASE("select_transforms reports infeasibility") {
    // negative responses kill log; non-integer powers need positive x
    const std::vector<double> xs{-1, -2, -3}, ys{-1, -2, -3};
    const std::vector<TransformKind> dict{TransformKind::log()};
    const std::vector<double> grid{0.5};
    REQUIRE_THROWS_AS(select_transforms(xs, ys, dict, grid), fit_error);
}
