#include "oracles.hpp"

#include "pads/fusion.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pads;

TEST(ProductFuse, EqualVariancesAverage) {
    const std::vector<Gaussian2> g{{{0, 0}, {4, 4}}, {{2, 6}, {4, 4}}};
    const auto f = product_fuse(g);
    EXPECT_DOUBLE_EQ(f.mu.east, 1.0);
    EXPECT_DOUBLE_EQ(f.mu.north, 3.0);
    EXPECT_DOUBLE_EQ(f.sigma.x(), std::sqrt(2.0));
    EXPECT_EQ(f.sources, 2);
}

TEST(ProductFuse, SharpSourceDominates) {
    const std::vector<Gaussian2> g{{{0, 0}, {1e-4, 1e-4}}, {{100, 100}, {1e4, 1e4}}};
    const auto f = product_fuse(g);
    EXPECT_NEAR(f.mu.east, 0.0, 1e-5);
}

TEST(ProductFuse, MatchesNumericalIntegration) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        std::vector<Gaussian2> g;
        std::vector<double> m, v;
        for (int j = 0; j < 2 + i % 3; ++j) {
            g.push_back({{50 * (u(rng) - 0.5), 0}, {0.5 + 30 * u(rng), 1}});
            m.push_back(g.back().mean.east);
            v.push_back(g.back().var.x());
        }
        const auto f = product_fuse(g);
        const auto o = oracle::integrate_gaussian_product(m, v);
        EXPECT_NEAR(f.mu.east, o.mean, 1e-5);
        EXPECT_NEAR(f.sigma.x() * f.sigma.x(), o.var, 1e-5);
    }
}

TEST(ProductFuse, Errors) {
    EXPECT_THROW(product_fuse({}), Error);
    const std::vector<Gaussian2> bad{{{0, 0}, {0, 1}}};
    EXPECT_THROW(product_fuse(bad), Error);
}

TEST(FusionWeights, KappaZeroIsUniform) {
    std::vector<ConfidenceInterval> iv(4);
    for (int i = 0; i < 4; ++i) iv[static_cast<std::size_t>(i)].t = i;
    const auto w = fusion_weights(iv, 3.0, 0.0);
    for (double x : w) EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(FusionWeights, UnderflowFallsBackToLatest) {
    std::vector<ConfidenceInterval> iv(3);
    iv[0].t = 0;
    iv[1].t = 1;
    iv[2].t = 2;
    const auto w = fusion_weights(iv, 1000.0, 10.0);
    EXPECT_EQ(w[2], 1.0);
    EXPECT_EQ(w[0] + w[1], 0.0);
}

TEST(TemporalFuse, ClosedFormAndSampling) {
    std::vector<ConfidenceInterval> iv(3);
    for (int i = 0; i < 3; ++i) {
        iv[static_cast<std::size_t>(i)].t = i;
        iv[static_cast<std::size_t>(i)].mean = {static_cast<double>(i), -static_cast<double>(i)};
        iv[static_cast<std::size_t>(i)].var = {1.0 + i, 2.0};
    }
    const std::vector<double> w{0.2, 0.3, 0.5};
    const auto g = temporal_fuse(iv, w);
    ASSERT_TRUE(g);
    EXPECT_NEAR(g->mean.east, 0.3 + 1.0, 1e-12);
    EXPECT_NEAR(g->var.x(), 0.04 * 1 + 0.09 * 2 + 0.25 * 3, 1e-12);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> n01(0.0, 1.0);
    const int N = 200000;
    double s = 0, s2 = 0;
    for (int d = 0; d < N; ++d) {
        double x = 0;
        for (int i = 0; i < 3; ++i) x += w[static_cast<std::size_t>(i)] * (i + std::sqrt(1.0 + i) * n01(rng));
        s += x;
        s2 += x * x;
    }
    const double mean = s / N, var = (s2 - N * mean * mean) / (N - 1);
    EXPECT_LE(std::abs(mean - g->mean.east), 3.0 * std::sqrt(g->var.x() / N));
    EXPECT_LE(std::abs(var - g->var.x()), 3.0 * g->var.x() * std::sqrt(2.0 / (N - 1)));
}

TEST(TemporalFuse, EmptyAndMismatch) {
    EXPECT_FALSE(temporal_fuse({}, {}));
    std::vector<ConfidenceInterval> iv(2);
    const std::vector<double> w{1.0};
    EXPECT_THROW(temporal_fuse(iv, w), Error);
}

TEST(Feature, Layout) {
    FusedStatistic fs;
    fs.mu = {10, 20};
    fs.sigma = {1.5, 2.5};
    const auto f = feature_vector(fs, {7, 25});
    EXPECT_EQ(f, (Feature{1.5, 2.5, 3.0, -5.0}));
}
