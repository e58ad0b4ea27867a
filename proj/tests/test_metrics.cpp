#include "pads/metrics.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace pads;

namespace {

Outcome o(double t, bool truth, bool decision, double score = 0.0) {
    Outcome x;
    x.t = t;
    x.truth = truth;
    x.decision = decision;
    x.score = score;
    return x;
}

} // namespace

TEST(Rates, Counts) {
    const std::vector<Outcome> v{o(0, false, false), o(1, false, true), o(2, true, true), o(3, true, false),
                                 o(4, true, true)};
    const auto r = rates(v);
    EXPECT_DOUBLE_EQ(r.tpr, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.fpr, 0.5);
    const std::vector<Outcome> benign{o(0, false, false)};
    EXPECT_THROW(rates(benign), Error);
}

TEST(Delay, FirstAlarmAfterOnset) {
    const std::vector<Outcome> v{o(0, false, true), o(5, true, false), o(6, true, false), o(8, true, true)};
    EXPECT_DOUBLE_EQ(detection_delay(v), 3.0);
    const std::vector<Outcome> missed{o(0, false, true), o(5, true, false)};
    EXPECT_EQ(detection_delay(missed), kNeverDetected);
    const std::vector<Outcome> none{o(0, false, true)};
    EXPECT_THROW(detection_delay(none), Error);
    const std::vector<double> d{1.0, 3.0, kNeverDetected};
    const auto s = summarize_delays(d);
    EXPECT_DOUBLE_EQ(s.mean, 2.0);
    EXPECT_EQ(s.misses, 1u);
}

TEST(Roc, PerfectDetectorReachesTopLeft) {
    std::vector<Outcome> v;
    for (int k = 0; k < 20; ++k) v.push_back(o(k, k >= 10, false, k >= 10 ? 5.0 : 1.0));
    const std::vector<std::vector<Outcome>> traces{v};
    const std::vector<double> grid{-std::numeric_limits<double>::infinity(), 0.0, 3.0, 10.0};
    const auto roc = roc_sweep(traces, grid);
    ASSERT_EQ(roc.size(), 4u);
    EXPECT_DOUBLE_EQ(roc[0].tpr, 1.0);
    EXPECT_DOUBLE_EQ(roc[0].fpr, 1.0);
    EXPECT_DOUBLE_EQ(roc[2].tpr, 1.0);
    EXPECT_DOUBLE_EQ(roc[2].fpr, 0.0);
    EXPECT_DOUBLE_EQ(roc[2].delay_mean, 0.0);
    EXPECT_DOUBLE_EQ(roc[3].tpr, 0.0);
    EXPECT_EQ(roc[3].misses, 1u);
}

TEST(Roc, MonotoneAndNearDiagonalForRandomScores) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Outcome> v;
    for (int k = 0; k < 10000; ++k) v.push_back(o(k, u(rng) < 0.5, false, u(rng)));
    const std::vector<std::vector<Outcome>> traces{v};
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
    const auto roc = roc_sweep(traces, grid);
    for (std::size_t i = 1; i < roc.size(); ++i) {
        EXPECT_LE(roc[i].tpr, roc[i - 1].tpr);
        EXPECT_LE(roc[i].fpr, roc[i - 1].fpr);
    }
    for (const auto& p : roc) {
        // Binomial band on each rate with ~5000 epochs per class.
        const double band = 3.0 * std::sqrt(2.0 * 0.25 / 5000.0);
        EXPECT_LE(std::abs(p.tpr - p.fpr), band) << "gamma " << p.gamma;
    }
    const std::vector<double> unsorted{1.0, 0.0};
    EXPECT_THROW(roc_sweep(traces, unsorted), Error);
}

TEST(Grid, Parse) {
    const auto g = parse_gamma_grid("0:1:5");
    ASSERT_EQ(g.size(), 5u);
    EXPECT_DOUBLE_EQ(g[1], 0.25);
    EXPECT_DOUBLE_EQ(g.back(), 1.0);
    EXPECT_EQ(parse_gamma_grid("-2:-2:1").size(), 1u);
    for (const char* bad : {"1:0:3", "0:1", "0:1:0", "a:b:c", "0:1:3x"}) EXPECT_THROW(parse_gamma_grid(bad), Error) << bad;
}

TEST(Threshold, HitsTargetRate) {
    std::vector<double> s;
    for (int i = 1; i <= 10; ++i) s.push_back(i);
    const double g = threshold_for_fpr(s, 0.2);
    int alarms = 0;
    for (double x : s) alarms += x >= g;
    EXPECT_EQ(alarms, 2);
    EXPECT_EQ(threshold_for_fpr(s, 1.0), -std::numeric_limits<double>::infinity());
    EXPECT_THROW(threshold_for_fpr({}, 0.1), Error);
}

TEST(ErrorStatistics, LinearInterpolationPercentiles) {
    EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 0.2), 1.6);
    EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 0.5), 2.5);
    const auto s = error_stats({1, 2, 3, 4, 5});
    EXPECT_DOUBLE_EQ(s.mean, 3.0);
    EXPECT_DOUBLE_EQ(s.best20, 1.8);
    EXPECT_DOUBLE_EQ(s.worst20, 4.2);
    EXPECT_THROW(error_stats({1, 2}), Error);
}

TEST(ErrorStatistics, PerfectRecoveryIsZero) {
    std::vector<Outcome> v;
    for (int k = 0; k < 10; ++k) {
        auto x = o(k, true, true);
        x.recovered = x.truth_pos = {1.0 * k, 2.0};
        v.push_back(x);
    }
    const auto s = recovered_error_stats(v);
    EXPECT_EQ(s.mean, 0.0);
    EXPECT_EQ(s.worst20, 0.0);
}

TEST(OutcomesCsv, RoundTripIsExact) {
    std::vector<Outcome> v;
    for (int k = 0; k < 5; ++k) {
        auto x = o(0.1 * k, k % 2, k % 3 == 0, std::sqrt(2.0) * k);
        x.recovered = {1.0 / 3.0 * k, -k * 1e-7};
        x.truth_pos = {1e6 + k, 2.5};
        v.push_back(x);
    }
    std::stringstream ss;
    write_outcomes(ss, v);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "t,truth,decision,score,rec_e,rec_n,true_e,true_n");
    const auto back = read_outcomes(ss);
    ASSERT_EQ(back.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(back[i].t, v[i].t);
        EXPECT_EQ(back[i].score, v[i].score);
        EXPECT_EQ(back[i].recovered, v[i].recovered);
        EXPECT_EQ(back[i].truth, v[i].truth);
    }
}

TEST(OutcomesCsv, SchemaErrors) {
    std::istringstream bad_header("t,truth\n");
    EXPECT_THROW(read_outcomes(bad_header), Error);
    std::istringstream short_row(std::string(kOutcomesHeader) + "\n1,0,0\n");
    EXPECT_THROW(read_outcomes(short_row), Error);
    std::istringstream bad_flag(std::string(kOutcomesHeader) + "\n1,2,0,0,0,0,0,0\n");
    EXPECT_THROW(read_outcomes(bad_flag), Error);
}
