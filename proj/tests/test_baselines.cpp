#include "pads/baselines.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pads;

TEST(Sop, CentroidOfEqualPowerIsMean) {
    StationObservation o;
    o.stations = {{0, 0}, {10, 0}, {0, 10}, {10, 10}};
    o.rss_dbm = {-60, -60, -60, -60};
    const auto c = sop_centroid(o);
    EXPECT_NEAR(c.east, 5.0, 1e-12);
    EXPECT_NEAR(c.north, 5.0, 1e-12);
}

TEST(Sop, TenDbIsTenTimesTheWeight) {
    StationObservation o;
    o.stations = {{0, 0}, {11, 0}};
    o.rss_dbm = {-50, -60};
    EXPECT_NEAR(sop_centroid(o).east, 1.0, 1e-12);
    EXPECT_EQ(sop_detect(5.0, 4.0), Hypothesis::h1);
    EXPECT_THROW(sop_centroid(StationObservation{}), Error);
}

TEST(Kf, StationaryTruthConverges) {
    KfConfig cfg;
    cfg.accel_std = 1e-3;
    cfg.meas_std = 1.0;
    FilterState s;
    s.x << 5, -5, 1, 1;
    KfStep st;
    for (int k = 0; k < 200; ++k) {
        st = kf_step(s, std::nullopt, LocalPoint{0, 0}, 1.0, cfg);
        s = st.state;
    }
    EXPECT_NEAR(s.x(0), 0.0, 1e-2);
    EXPECT_NEAR(s.x(2), 0.0, 1e-3);
    EXPECT_LT(st.innovation.norm(), 1e-2);
}

TEST(Kf, JumpShowsInInnovation) {
    KfConfig cfg;
    cfg.accel_std = 0.01;
    cfg.meas_std = 1.0;
    FilterState s;
    for (int k = 0; k < 100; ++k) s = kf_step(s, std::nullopt, LocalPoint{0, 0}, 1.0, cfg).state;
    // Predicted position ~0, so the innovation is the jump itself.
    const auto st = kf_step(s, std::nullopt, LocalPoint{100, 0}, 1.0, cfg);
    EXPECT_NEAR(st.innovation.x(), 100.0, 0.5);
    EXPECT_EQ(kf_detect(st.innovation, 50.0), Hypothesis::h1);
    EXPECT_THROW(kf_step(s, std::nullopt, std::nullopt, 0.0, cfg), Error);
}

TEST(Kf, PredictOnlyWithoutFix) {
    KfConfig cfg;
    FilterState s;
    s.x << 0, 0, 2, 0;
    const auto st = kf_step(s, std::nullopt, std::nullopt, 0.5, cfg);
    EXPECT_FALSE(st.updated);
    EXPECT_DOUBLE_EQ(st.state.x(0), 1.0);
}

TEST(Pf, TracksStationaryTarget) {
    PfConfig cfg;
    std::mt19937_64 rng(3);
    auto ps = pf_init({0, 0}, cfg, rng);
    for (int k = 0; k < 30; ++k) pf_step(ps, std::nullopt, LocalPoint{3, -2}, 1.0, cfg, rng);
    const auto e = ps.estimate();
    EXPECT_NEAR(e.x(), 3.0, 1.0);
    EXPECT_NEAR(e.y(), -2.0, 1.0);
    double w = 0;
    for (double x : ps.weight) w += x;
    EXPECT_NEAR(w, 1.0, 1e-9);
}

TEST(Pf, SystematicResamplingKeepsHeavyParticle) {
    ParticleSet ps;
    ps.pos = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    ps.weight = {0.0, 1.0, 0.0, 0.0};
    std::mt19937_64 rng(1);
    systematic_resample(ps, rng);
    for (const auto& p : ps.pos) EXPECT_EQ(p, Eigen::Vector2d(1, 1));
    for (double w : ps.weight) EXPECT_DOUBLE_EQ(w, 0.25);
    PfConfig small;
    small.particles = 10;
    EXPECT_THROW(pf_init({0, 0}, small, rng), Error);
}

TEST(Glrt, CombineAndChiSquare) {
    const std::vector<LocalPoint> others{{3, 4}};
    const std::vector<Eigen::Matrix2d> covs{Eigen::Matrix2d::Identity()};
    EXPECT_NEAR(glrt_combine({0, 0}, others, covs), -12.5, 1e-12);
    EXPECT_NEAR(chi2_cdf_even(3.0, 2), 1.0 - std::exp(-1.5), 1e-12);
    EXPECT_NEAR(chi2_cdf_even(3.0, 4), 1.0 - std::exp(-1.5) * 2.5, 1e-12);
    EXPECT_EQ(chi2_cdf_even(-1.0, 2), 0.0);
    EXPECT_THROW(chi2_cdf_even(1.0, 3), Error);
}
