#include "pads/trace_model.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace pads;

namespace {

EpochData epoch(double t, int M, double e = 0.0) {
    EpochData d;
    d.t = t;
    d.positions.assign(static_cast<std::size_t>(M + 1), LocalPoint{e, -e});
    return d;
}

} // namespace

TEST(WindowBuffer, KeepsLastW) {
    WindowBuffer buf(3, 1);
    for (int k = 0; k < 5; ++k) buf.push_epoch(epoch(k, 1, k), Hypothesis::h0);
    ASSERT_EQ(buf.size(), 3u);
    const auto v = buf.window_view(kGnss);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_DOUBLE_EQ(v.front().t, 2.0);
    EXPECT_DOUBLE_EQ(v.back().pos.east, 4.0);
}

TEST(WindowBuffer, ScreensGnssAfterAlarm) {
    WindowBuffer buf(4, 2);
    buf.push_epoch(epoch(0, 2), Hypothesis::h0);
    buf.push_epoch(epoch(1, 2), Hypothesis::h1);
    EXPECT_EQ(buf.window_view(kGnss).size(), 1u);
    EXPECT_EQ(buf.window_view(1).size(), 2u);
    EXPECT_TRUE(buf.entries().back().screened);
}

TEST(WindowBuffer, RejectsNonIncreasingTime) {
    WindowBuffer buf(4, 0);
    buf.push_epoch(epoch(1, 0), Hypothesis::h0);
    EXPECT_THROW(buf.push_epoch(epoch(1, 0), Hypothesis::h0), Error);
    EXPECT_THROW(buf.push_epoch(epoch(0.5, 0), Hypothesis::h0), Error);
}

TEST(WindowBuffer, UnknownSource) {
    WindowBuffer buf(4, 1);
    EXPECT_THROW(buf.window_view(2), Error);
    EXPECT_THROW(WindowBuffer(0, 1), Error);
}

TEST(AggregateMotion, YawAveragedOnTheCircle) {
    MotionSample a, b;
    a.rpy = Orientation::make(0, 0, std::numbers::pi - 0.1);
    b.rpy = Orientation::make(0, 0, -std::numbers::pi + 0.1);
    a.v = {2, 0, 0};
    b.v = {4, 0, 0};
    b.a_available = false;
    a.a = {1, 0, 0};
    const auto m = aggregate_motion({a, b}, 3.0);
    ASSERT_TRUE(m);
    EXPECT_NEAR(std::abs(m->rpy.yaw), std::numbers::pi, 1e-12);
    EXPECT_DOUBLE_EQ(m->v.x(), 3.0);
    EXPECT_DOUBLE_EQ(m->a.x(), 1.0); // only the sample that reports it
    EXPECT_FALSE(aggregate_motion({}, 0.0));
}

TEST(AssembleEpochs, MatchesSamplesToEpochs) {
    Trace tr;
    tr.M = 1;
    tr.samples.resize(2);
    for (int k = 0; k < 4; ++k) {
        tr.truth.push_back({static_cast<double>(k), {static_cast<double>(k), 0}});
        tr.labels.push_back({static_cast<double>(k), k == 3});
    }
    tr.samples[0] = {{0.0, 0, {0, 0}}, {1.0, 0, {1, 0}}, {3.0, 0, {30, 0}}};
    tr.samples[1] = {{1.2, 1, {5, 5}}};
    for (int i = 0; i < 40; ++i) {
        MotionSample s;
        s.t = -0.5 + 0.1 * i;
        s.v = {1.0 * (i / 10), 0, 0};
        tr.motion.push_back(s);
    }
    const auto ep = assemble_epochs(tr);
    ASSERT_EQ(ep.size(), 4u);
    EXPECT_TRUE(ep[0].positions[0]);
    EXPECT_FALSE(ep[2].positions[0]);
    EXPECT_TRUE(ep[1].positions[1]);
    EXPECT_FALSE(ep[0].positions[1]);
    EXPECT_TRUE(ep[3].attacked);
    ASSERT_TRUE(ep[2].motion);
    EXPECT_NEAR(ep[2].motion->v.x(), 2.0, 1e-12);
}
