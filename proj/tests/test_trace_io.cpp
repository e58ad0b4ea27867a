#include "pads/simulator.hpp"
#include "pads/trace_io.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace pads;

namespace {

SimConfig small_config() {
    SimConfig c;
    c.epochs = 60;
    c.imu.rate_hz = 5.0;
    c.attack.start = 30;
    c.attack.profiling = 5;
    return c;
}

} // namespace

TEST(TraceIo, MetaFirstAndRoundTrip) {
    const auto tr = simulate(small_config());
    const auto text = trace_to_string(tr);
    EXPECT_EQ(text.rfind("{\"M\":2,\"k\":\"meta\"", 0), 0u) << text.substr(0, 60);
    std::istringstream is(text);
    const auto back = read_trace(is);
    EXPECT_EQ(back.M, tr.M);
    ASSERT_EQ(back.truth.size(), tr.truth.size());
    ASSERT_EQ(back.samples.size(), tr.samples.size());
    for (std::size_t m = 0; m < tr.samples.size(); ++m) EXPECT_EQ(back.samples[m].size(), tr.samples[m].size());
    EXPECT_EQ(back.motion.size(), tr.motion.size());
    for (std::size_t k = 0; k < tr.truth.size(); ++k) {
        EXPECT_NEAR(back.truth[k].pos.east, tr.truth[k].pos.east, 1e-6);
        EXPECT_EQ(back.labels[k].attacked, tr.labels[k].attacked);
    }
    // Writing what was read gives the same text again.
    EXPECT_EQ(trace_to_string(back), text);
}

TEST(TraceIo, ToleratesUnknownKeysAndKinds) {
    std::istringstream is(R"({"k":"meta","M":0,"ref_lat":10,"ref_lon":20,"extra":1}
{"k":"weather","t":0,"temp":3}
{"k":"truth","t":0,"lat":10,"lon":20,"note":"x"}
{"k":"pos","t":0,"m":0,"lat":10,"lon":20}
)");
    const auto tr = read_trace(is);
    EXPECT_EQ(tr.truth.size(), 1u);
    EXPECT_EQ(tr.samples[0].size(), 1u);
}

TEST(TraceIo, DataErrors) {
    auto code = [](const std::string& s) {
        std::istringstream is(s);
        try {
            read_trace(is);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::invalid_input;
    };
    EXPECT_EQ(code("{\"k\":\"truth\",\"t\":0,\"lat\":1,\"lon\":1}\n"), ErrorCode::data);
    EXPECT_EQ(code(""), ErrorCode::data);
    EXPECT_EQ(code("{\"k\":\"meta\",\"M\":0,\"ref_lat\":1,\"ref_lon\":1}\n{\"k\":\"pos\",\"t\":0,\"m\":3,\"lat\":1,\"lon\":1}\n"),
              ErrorCode::data);
    EXPECT_EQ(code("{\"k\":\"meta\",\"M\":0,\"ref_lat\":1,\"ref_lon\":1}\nnot json\n"), ErrorCode::data);
}
