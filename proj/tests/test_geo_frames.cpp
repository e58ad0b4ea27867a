#include "pads/geo_frames.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace pads;

TEST(GeoFrames, ReferenceMapsToOrigin) {
    const GeoPoint ref{59.91, 10.75};
    const auto p = to_local(ref, ref);
    EXPECT_DOUBLE_EQ(p.east, 0.0);
    EXPECT_DOUBLE_EQ(p.north, 0.0);
}

TEST(GeoFrames, MilliDegreeOfLatitude) {
    // R * pi / 180 * 1e-3 with R = 6371 km.
    const GeoPoint ref{45.0, 7.0};
    const auto p = to_local({45.001, 7.0}, ref);
    EXPECT_NEAR(p.north, 111.19492664455873, 1e-9);
    EXPECT_NEAR(p.east, 0.0, 1e-12);
}

TEST(GeoFrames, LongitudeShrinksWithLatitude) {
    const GeoPoint ref{60.0, 0.0};
    const auto p = to_local({60.0, 0.001}, ref);
    EXPECT_NEAR(p.east, 111.19492664455873 * 0.5, 1e-9);
}

TEST(GeoFrames, RoundTrip) {
    const GeoPoint ref{-33.9, 151.2};
    for (double e : {-2500.0, -3.0, 0.0, 17.5, 4000.0}) {
        for (double n : {-1800.0, 0.25, 900.0}) {
            const auto back = to_local(from_local({e, n}, ref), ref);
            EXPECT_NEAR(back.east, e, 1e-6);
            EXPECT_NEAR(back.north, n, 1e-6);
        }
    }
}

TEST(GeoFrames, DatelineWraps) {
    const GeoPoint ref{0.0, 179.9995};
    const auto p = to_local({0.0, -179.9995}, ref);
    EXPECT_NEAR(p.east, 111.19492664455873, 1e-6);
}

TEST(GeoFrames, RejectsInvalidCoordinates) {
    EXPECT_THROW(to_local({91.0, 0.0}, {0.0, 0.0}), Error);
    EXPECT_THROW(to_local({0.0, 0.0}, {0.0, 200.0}), Error);
    EXPECT_THROW(to_local({3.0, 0.0}, {0.0, 0.0}), Error);
}

TEST(GeoFrames, YawQuarterTurnPointsNorth) {
    const auto h = body_to_horizontal(Orientation::make(0, 0, std::numbers::pi / 2), {1.0, 0.0, 0.0});
    EXPECT_NEAR(h.x(), 0.0, 1e-12);
    EXPECT_NEAR(h.y(), 1.0, 1e-12);
}

TEST(GeoFrames, PitchTiltsForwardMotionOutOfPlane) {
    // Pitch by 60 degrees about the body y axis leaves half the forward speed horizontal.
    const auto h = body_to_horizontal(Orientation::make(0, std::numbers::pi / 3, 0), {2.0, 0.0, 0.0});
    EXPECT_NEAR(h.x(), 1.0, 1e-12);
    EXPECT_NEAR(h.y(), 0.0, 1e-12);
}

TEST(GeoFrames, NormalizeAngle) {
    EXPECT_NEAR(normalize_angle(3.0 * std::numbers::pi), std::numbers::pi, 1e-12);
    EXPECT_NEAR(normalize_angle(-std::numbers::pi), std::numbers::pi, 1e-12);
    EXPECT_NEAR(normalize_angle(0.5), 0.5, 0.0);
}
