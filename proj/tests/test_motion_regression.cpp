#include "oracles.hpp"

#include "pads/motion_regression.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace pads;

namespace {

std::vector<PositionSample> track(int w, double ve, double vn, double t0 = 0.0) {
    std::vector<PositionSample> s;
    for (int i = 0; i < w; ++i) {
        const double t = t0 + i;
        s.push_back({t, 0, {ve * i + 0.1 * i * i, vn * i}});
    }
    return s;
}

} // namespace

TEST(LocKernel, Values) {
    EXPECT_DOUBLE_EQ(loc_kernel(0.0, 2.0), 1.0);
    EXPECT_DOUBLE_EQ(loc_kernel(3.0, 0.0), 1.0);
    EXPECT_NEAR(loc_kernel(2.0, 0.5), std::exp(-2.0), 1e-15);
}

TEST(Regression, RecoversExactQuadratic) {
    RegressionConfig cfg;
    const auto s = track(8, 3.0, -2.0);
    const auto c = fit(s, {}, cfg, s.back().t);
    for (const auto& p : s) {
        const auto q = evaluate(c, p.t);
        EXPECT_NEAR(q.east, p.pos.east, 1e-8);
        EXPECT_NEAR(q.north, p.pos.north, 1e-8);
    }
}

TEST(Regression, KappaZeroIsOrdinaryLeastSquares) {
    RegressionConfig cfg;
    cfg.kappa = 0.0;
    cfg.degree = 1;
    std::vector<PositionSample> s{{0, 0, {0, 0}}, {1, 0, {1, 0}}, {2, 0, {4, 0}}};
    const auto c = fit(s, {}, cfg, 2.0);
    // OLS line through (0,0),(1,1),(2,4): slope 2, intercept -1/3.
    EXPECT_NEAR(evaluate(c, 0.0).east, -1.0 / 3.0, 1e-12);
    EXPECT_NEAR(evaluate(c, 2.0).east, 11.0 / 3.0, 1e-12);
}

TEST(Regression, BindingBoxHoldsTheFit) {
    RegressionConfig cfg;
    const auto s = track(6, 1.0, 1.0);
    MotionConstraint m;
    m.t = s.back().t;
    m.center = {s.back().pos.east + 10.0, s.back().pos.north};
    m.eps = {0.5, 0.5};
    const std::vector<MotionConstraint> cons{m};
    const auto c = fit(s, cons, cfg, s.back().t);
    const auto p = evaluate(c, m.t);
    EXPECT_NEAR(p.east, m.center.east - 0.5, 1e-8);
    EXPECT_NEAR(p.north, s.back().pos.north, 1e-6);
}

TEST(Regression, InfeasibleBoxesRaise) {
    RegressionConfig cfg;
    cfg.degree = 1;
    cfg.relax_once = false;
    const auto s = track(5, 1.0, 0.0);
    // Two boxes at the same time that do not overlap.
    MotionConstraint a, b;
    a.t = b.t = 4.0;
    a.center = {0, 0};
    b.center = {10, 0};
    a.eps = b.eps = {1, 1};
    const std::vector<MotionConstraint> cons{a, b};
    try {
        fit(s, cons, cfg, 4.0);
        FAIL() << "expected infeasible";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::infeasible);
    }
}

TEST(Regression, TooFewSamples) {
    RegressionConfig cfg;
    EXPECT_THROW(fit(track(3, 1, 1), {}, cfg, 2.0), Error);
}

TEST(Regression, DegenerateWhenKernelSuppressesTheWindow) {
    RegressionConfig cfg;
    cfg.kappa = 50.0;
    auto s = track(6, 1, 1);
    try {
        fit(s, {}, cfg, s.back().t);
        FAIL() << "expected degenerate";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate);
    }
}

TEST(Regression, MatchesProjectedGradientOracle) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 40; ++i) {
        const auto in = oracle::random_regression_instance(rng);
        const auto c = fit(in.samples, in.constraints, in.cfg, in.t);
        const double f = objective(c, in.samples, in.cfg.kappa, in.t);
        const double fo = oracle::regression_oracle_objective(in, rng);
        EXPECT_LE(std::abs(f - fo), 1e-6 * std::max(1.0, fo)) << "instance " << i;
        for (const auto& k : in.constraints) {
            const auto p = evaluate(c, k.t);
            EXPECT_LE(std::abs(p.east - k.center.east), k.eps(0) + 1e-8);
            EXPECT_LE(std::abs(p.north - k.center.north), k.eps(1) + 1e-8);
        }
    }
}

TEST(Regression, NormalMatrixIsPsdAndMatchesObjectiveCurvature) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto in = oracle::random_regression_instance(rng);
        const int n = in.cfg.degree;
        const auto H = normal_matrix(in.samples, n, in.cfg.kappa, in.t, in.t);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()));
        // Second difference along a coordinate direction equals the diagonal entry.
        PolyCoeffs c;
        c.n = n;
        c.t_ref = in.t;
        c.W = Eigen::MatrixXd::Zero(2, n + 1);
        const double f0 = objective(c, in.samples, in.cfg.kappa, in.t);
        c.W(0, 0) = 1.0;
        const double f1 = objective(c, in.samples, in.cfg.kappa, in.t);
        c.W(0, 0) = -1.0;
        const double fm = objective(c, in.samples, in.cfg.kappa, in.t);
        EXPECT_NEAR(f1 - 2.0 * f0 + fm, H(0, 0), 1e-8 * std::max(1.0, f0));
    }
}

TEST(DeadReckon, UniformAndAccelerated) {
    MotionSample m;
    m.rpy = Orientation::make(0, 0, std::numbers::pi / 2); // facing north
    m.v = {10, 0, 0};
    m.a = {2, 0, 0};
    const auto p = dead_reckon({1, 1}, m, 2.0);
    EXPECT_NEAR(p.east, 1.0, 1e-12);
    EXPECT_NEAR(p.north, 1.0 + 20.0 + 4.0, 1e-12);
    m.v_available = false;
    m.a_available = false;
    const auto q = dead_reckon({0, 0}, m, 1.0, {3, 4, 0});
    EXPECT_DOUBLE_EQ(q.east, 3.0);
    EXPECT_DOUBLE_EQ(q.north, 4.0);
    EXPECT_THROW(dead_reckon({0, 0}, m, 0.0), Error);
}

TEST(RegressionConfig, EpsilonFormula) {
    RegressionConfig cfg;
    cfg.sigma_v = 0.2;
    cfg.sigma_a = 0.4;
    cfg.eps_margin = 1.0;
    EXPECT_DOUBLE_EQ(cfg.epsilon(2.0).x(), 0.4 + 0.8 + 1.0);
    cfg.degree = 4;
    EXPECT_THROW(cfg.validate(), Error);
}
