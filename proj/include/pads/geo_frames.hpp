#pragma once

// Coordinate frames: WGS84 geodetic <-> local planar east/north meters, and
// body-frame -> world (ENU) rotation from roll/pitch/yaw.

#include "pads/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

namespace pads {

inline constexpr double kEarthRadius = 6371000.0;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

struct GeoPoint {
    double lat = 0.0; ///< degrees
    double lon = 0.0; ///< degrees
};

/// Planar position in meters relative to a reference GeoPoint.
struct LocalPoint {
    double east = 0.0;
    double north = 0.0;

    Eigen::Vector2d vec() const { return {east, north}; }
    static LocalPoint from(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }

    double norm() const { return std::hypot(east, north); }

    LocalPoint& operator+=(const LocalPoint& o) {
        east += o.east;
        north += o.north;
        return *this;
    }
    LocalPoint& operator-=(const LocalPoint& o) {
        east -= o.east;
        north -= o.north;
        return *this;
    }
    friend LocalPoint operator+(LocalPoint a, const LocalPoint& b) { return a += b; }
    friend LocalPoint operator-(LocalPoint a, const LocalPoint& b) { return a -= b; }
    friend LocalPoint operator*(double s, const LocalPoint& p) { return {s * p.east, s * p.north}; }
    friend bool operator==(const LocalPoint&, const LocalPoint&) = default;
};

inline double distance(const LocalPoint& a, const LocalPoint& b) { return (a - b).norm(); }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

/// Roll/pitch/yaw in radians. Yaw is measured counter-clockwise from east
/// about the up axis, so a body x-axis with yaw = pi/2 points north.
struct Orientation {
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;

    static Orientation make(double roll, double pitch, double yaw) {
        return {roll, pitch, normalize_angle(yaw)};
    }
};

inline void validate(const GeoPoint& p) {
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 || p.lat > 90.0 ||
        p.lon < -180.0 || p.lon > 180.0) {
        fail(ErrorCode::invalid_input,
             "geo point out of range (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) + ")");
    }
}

/// Equirectangular projection around `ref`. Valid at vehicle scale; points
/// must lie within one degree of latitude of the reference.
inline LocalPoint to_local(const GeoPoint& p, const GeoPoint& ref) {
    validate(p);
    validate(ref);
    if (std::abs(p.lat - ref.lat) >= 1.0) {
        fail(ErrorCode::invalid_input, "point too far from reference for local projection");
    }
    const double dlon = std::remainder(p.lon - ref.lon, 360.0);
    return {dlon * kDegToRad * std::cos(ref.lat * kDegToRad) * kEarthRadius,
            (p.lat - ref.lat) * kDegToRad * kEarthRadius};
}

inline GeoPoint from_local(const LocalPoint& p, const GeoPoint& ref) {
    validate(ref);
    if (!std::isfinite(p.east) || !std::isfinite(p.north)) {
        fail(ErrorCode::invalid_input, "non-finite local point");
    }
    const double coslat = std::cos(ref.lat * kDegToRad);
    if (coslat < 1e-12) fail(ErrorCode::invalid_input, "reference at a pole");
    GeoPoint g{ref.lat + p.north / (kEarthRadius * kDegToRad),
               ref.lon + p.east / (kEarthRadius * kDegToRad * coslat)};
    if (g.lon > 180.0) g.lon -= 360.0;
    if (g.lon < -180.0) g.lon += 360.0;
    validate(g);
    return g;
}

/// Elementary rotations (right-handed, active).
inline Eigen::Matrix3d rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, c, -s, 0, s, c;
    return r;
}

inline Eigen::Matrix3d rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << c, 0, s, 0, 1, 0, -s, 0, c;
    return r;
}

inline Eigen::Matrix3d rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return r;
}

/// Body -> world rotation, intrinsic Z-Y-X: R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Eigen::Matrix3d rotation(const Orientation& o) {
    return rot_z(o.yaw) * rot_y(o.pitch) * rot_x(o.roll);
}

/// Rotates a body-frame vector into the world frame and drops the up component.
inline Eigen::Vector2d body_to_horizontal(const Orientation& o, const Eigen::Vector3d& body) {
    return (rotation(o) * body).head<2>();
}

} // namespace pads
