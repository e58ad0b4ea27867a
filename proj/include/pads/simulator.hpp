#pragma once

// Scenario generator: a filleted waypoint route driven by a piecewise-linear
// speed profile, 100 Hz body-frame motion samples, network positions (direct
// noise or RSS ranging + WNLS), and GNSS spoofing attacks with ground-truth
// labels. Everything is a pure function of (config, seed).

#include "pads/config.hpp"
#include "pads/errors.hpp"
#include "pads/geo_frames.hpp"
#include "pads/log.hpp"
#include "pads/trace_model.hpp"

#include <Eigen/Dense>

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pads {

// --- configuration -----------------------------------------------------------------

struct SpeedKnot {
    double t = 0.0; ///< s
    double v = 0.0; ///< m/s
};

struct NetworkConfig {
    double noise_std = 9.0;       ///< direct mode, per axis, m
    double unavailability = 0.2;  ///< per-epoch dropout probability
    int period = 1;               ///< epochs between fixes
    double tx_dbm = 20.0;         ///< rss mode
    double station_spacing = 300; ///< rss mode auto layout, m
    std::vector<LocalPoint> stations; ///< rss mode; empty = auto grid
};

struct ImuConfig {
    double rate_hz = 100.0;
    double vel_noise = 0.05;     ///< m/s per sample
    double vel_bias_std = 0.02;  ///< m/s, drawn once per trace
    double accel_noise = 0.05;   ///< m/s^2 per sample
    double accel_bias_std = 0.01;
    double yaw_noise = 0.005;    ///< rad per sample
    double tilt_noise = 0.002;   ///< rad per sample (roll, pitch)
    bool velocity_available = true;
    bool accel_available = true;
};

enum class NetMode { direct, rss_wnls };
enum class AttackKind { none, constant_offset, exponential_deviation, position_jump, spoof_path };

struct AttackSpec {
    AttackKind kind = AttackKind::exponential_deviation;
    int start = 500;              ///< epoch index
    double direction_deg = 30.0;  ///< offset direction, counter-clockwise from east
    double offset = 20.0;         ///< constant_offset / position_jump magnitude, m
    double d0 = 2.0;              ///< exponential initial deviation, m
    double growth = 1.05;         ///< exponential factor per epoch
    double cap = 200.0;           ///< exponential maximum deviation, m
    int profiling = 30;           ///< epochs of constant small deviation before the growth
    double profile_offset = 3.0;  ///< m
    std::vector<std::array<double, 3>> path; ///< spoof_path knots (t since start, east, north offset)

    void validate(int epochs) const {
        if (kind == AttackKind::none) return;
        if (start < 0 || start >= epochs) fail(ErrorCode::config, "field 'attack.start': must lie in [0, epochs)");
        if (kind == AttackKind::exponential_deviation && (!(growth > 0.0) || !(d0 >= 0.0) || !(cap >= 0.0))) {
            fail(ErrorCode::config, "field 'attack': exponential needs growth > 0, d0 >= 0, cap >= 0");
        }
        if (profiling < 0) fail(ErrorCode::config, "field 'attack.profiling': must be >= 0");
        if (kind == AttackKind::spoof_path) {
            if (path.empty()) fail(ErrorCode::config, "field 'attack.path': spoof_path needs knots");
            for (std::size_t i = 1; i < path.size(); ++i) {
                if (!(path[i][0] > path[i - 1][0])) fail(ErrorCode::config, "field 'attack.path': knot times must increase");
            }
        }
    }
};

struct SimConfig {
    int epochs = 800;
    double dt = 1.0;
    GeoPoint ref{59.91, 10.75};
    std::vector<LocalPoint> waypoints{{0, 0}, {800, 0}, {950, 350}, {500, 650}, {-50, 450}};
    bool loop = true;
    double fillet_radius = 60.0;
    std::vector<SpeedKnot> speed{{0, 0},    {15, 14},  {90, 20},  {120, 24}, {200, 24}, {230, 12},
                                 {300, 12}, {330, 22}, {420, 22}, {450, 8},  {480, 8},  {510, 18},
                                 {600, 18}, {630, 25}, {700, 25}, {730, 15}, {800, 15}};
    double gnss_noise_std = 2.5;
    double gnss_unavailability = 0.0;
    NetMode mode = NetMode::direct;
    std::vector<NetworkConfig> networks{NetworkConfig{33.0, 0.2, 1, 20.0, 400.0, {}},
                                        NetworkConfig{9.0, 0.2, 1, 15.0, 150.0, {}}};
    double path_loss_exponent = 2.0;
    double path_loss_ref_db = 40.0; ///< loss at 1 m
    double rss_noise_std = 3.0;     ///< dB
    int wnls_stations = 7;
    ImuConfig imu;
    AttackSpec attack;
    double delta_d = 10.0; ///< label threshold, m
    std::uint64_t seed = 1;

    int M() const { return static_cast<int>(networks.size()); }

    void validate() const {
        if (epochs < 2) fail(ErrorCode::config, "field 'epochs': must be >= 2");
        if (!(dt > 0.0)) fail(ErrorCode::config, "field 'dt': must be > 0");
        validate_geo(ref);
        if (waypoints.size() < 2) fail(ErrorCode::config, "field 'waypoints': need at least 2");
        if (!(fillet_radius >= 0.0)) fail(ErrorCode::config, "field 'fillet_radius': must be >= 0");
        if (speed.empty()) fail(ErrorCode::config, "field 'speed': need at least one knot");
        for (std::size_t i = 0; i < speed.size(); ++i) {
            if (!(speed[i].v >= 0.0)) fail(ErrorCode::config, "field 'speed[" + std::to_string(i) + "].v': must be >= 0");
            if (i > 0 && !(speed[i].t > speed[i - 1].t)) {
                fail(ErrorCode::config, "field 'speed[" + std::to_string(i) + "].t': negative or zero segment time");
            }
        }
        if (!(gnss_noise_std >= 0.0)) fail(ErrorCode::config, "field 'gnss_noise_std': must be >= 0");
        if (!(gnss_unavailability >= 0.0 && gnss_unavailability < 1.0)) {
            fail(ErrorCode::config, "field 'gnss_unavailability': must be in [0,1)");
        }
        for (std::size_t m = 0; m < networks.size(); ++m) {
            const auto& n = networks[m];
            const std::string f = "networks[" + std::to_string(m) + "]";
            if (!(n.noise_std >= 0.0)) fail(ErrorCode::config, "field '" + f + ".noise_std': must be >= 0");
            if (!(n.unavailability >= 0.0 && n.unavailability < 1.0)) {
                fail(ErrorCode::config, "field '" + f + ".unavailability': must be in [0,1)");
            }
            if (n.period < 1) fail(ErrorCode::config, "field '" + f + ".period': must be >= 1");
            if (mode == NetMode::rss_wnls && !n.stations.empty() && n.stations.size() < 3) {
                fail(ErrorCode::config, "field '" + f + ".stations': rss_wnls needs >= 3 stations");
            }
            if (!(n.station_spacing > 0.0)) fail(ErrorCode::config, "field '" + f + ".station_spacing': must be > 0");
        }
        if (!(imu.rate_hz > 0.0)) fail(ErrorCode::config, "field 'imu.rate_hz': must be > 0");
        if (wnls_stations < 3) fail(ErrorCode::config, "field 'wnls_stations': must be >= 3");
        if (!(rss_noise_std >= 0.0)) fail(ErrorCode::config, "field 'rss_noise_std': must be >= 0");
        if (!(path_loss_exponent > 0.0)) fail(ErrorCode::config, "field 'path_loss_exponent': must be > 0");
        if (!(delta_d >= 0.0)) fail(ErrorCode::config, "field 'delta_d': must be >= 0");
        attack.validate(epochs);
    }

private:
    static void validate_geo(const GeoPoint& g) {
        try {
            pads::validate(g);
        } catch (const Error&) {
            fail(ErrorCode::config, "field 'ref': invalid coordinates");
        }
    }
};

// --- serialization of the config ---------------------------------------------------------

inline const char* to_string(AttackKind k) {
    switch (k) {
    case AttackKind::none: return "none";
    case AttackKind::constant_offset: return "constant_offset";
    case AttackKind::exponential_deviation: return "exponential_deviation";
    case AttackKind::position_jump: return "position_jump";
    case AttackKind::spoof_path: return "spoof_path";
    }
    return "?";
}

inline nlohmann::json to_json(const SimConfig& c) {
    using nlohmann::json;
    auto pts = [](const std::vector<LocalPoint>& v) {
        json a = json::array();
        for (const auto& p : v) a.push_back({p.east, p.north});
        return a;
    };
    json j;
    j["epochs"] = c.epochs;
    j["dt"] = c.dt;
    j["ref"] = {c.ref.lat, c.ref.lon};
    j["waypoints"] = pts(c.waypoints);
    j["loop"] = c.loop;
    j["fillet_radius"] = c.fillet_radius;
    j["speed"] = json::array();
    for (const auto& k : c.speed) j["speed"].push_back({k.t, k.v});
    j["gnss_noise_std"] = c.gnss_noise_std;
    j["gnss_unavailability"] = c.gnss_unavailability;
    j["mode"] = c.mode == NetMode::direct ? "direct" : "rss_wnls";
    j["networks"] = json::array();
    for (const auto& n : c.networks) {
        j["networks"].push_back({{"noise_std", n.noise_std},
                                 {"unavailability", n.unavailability},
                                 {"period", n.period},
                                 {"tx_dbm", n.tx_dbm},
                                 {"station_spacing", n.station_spacing},
                                 {"stations", pts(n.stations)}});
    }
    j["path_loss_exponent"] = c.path_loss_exponent;
    j["path_loss_ref_db"] = c.path_loss_ref_db;
    j["rss_noise_std"] = c.rss_noise_std;
    j["wnls_stations"] = c.wnls_stations;
    j["imu"] = {{"rate_hz", c.imu.rate_hz},
                {"vel_noise", c.imu.vel_noise},
                {"vel_bias_std", c.imu.vel_bias_std},
                {"accel_noise", c.imu.accel_noise},
                {"accel_bias_std", c.imu.accel_bias_std},
                {"yaw_noise", c.imu.yaw_noise},
                {"tilt_noise", c.imu.tilt_noise},
                {"velocity_available", c.imu.velocity_available},
                {"accel_available", c.imu.accel_available}};
    j["attack"] = {{"kind", to_string(c.attack.kind)},
                   {"start", c.attack.start},
                   {"direction_deg", c.attack.direction_deg},
                   {"offset", c.attack.offset},
                   {"d0", c.attack.d0},
                   {"growth", c.attack.growth},
                   {"cap", c.attack.cap},
                   {"profiling", c.attack.profiling},
                   {"profile_offset", c.attack.profile_offset},
                   {"path", c.attack.path}};
    j["delta_d"] = c.delta_d;
    j["seed"] = c.seed;
    return j;
}

namespace detail {

inline std::vector<LocalPoint> read_points(const nlohmann::json& v, const std::string& where) {
    const auto raw = config::ObjectReader::convert<std::vector<std::vector<double>>>(v, where);
    std::vector<LocalPoint> out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].size() != 2) fail(ErrorCode::config, "field '" + where + "[" + std::to_string(i) + "]': expected [east, north]");
        out.push_back({raw[i][0], raw[i][1]});
    }
    return out;
}

} // namespace detail

/// Overlays the fields present in `j` onto `base`.
inline SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig base = {}) {
    using config::ObjectReader;
    ObjectReader r(j, "");
    SimConfig c = std::move(base);
    r.read("epochs", c.epochs);
    r.read("dt", c.dt);
    if (r.has("ref")) {
        const auto v = ObjectReader::convert<std::vector<double>>(r.raw("ref"), "ref");
        if (v.size() != 2) fail(ErrorCode::config, "field 'ref': expected [lat, lon]");
        c.ref = {v[0], v[1]};
    }
    if (r.has("waypoints")) c.waypoints = detail::read_points(r.raw("waypoints"), "waypoints");
    r.read("loop", c.loop);
    r.read("fillet_radius", c.fillet_radius);
    if (r.has("speed")) {
        const auto v = ObjectReader::convert<std::vector<std::vector<double>>>(r.raw("speed"), "speed");
        c.speed.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i].size() != 2) fail(ErrorCode::config, "field 'speed[" + std::to_string(i) + "]': expected [t, v]");
            c.speed.push_back({v[i][0], v[i][1]});
        }
    }
    r.read("gnss_noise_std", c.gnss_noise_std);
    r.read("gnss_unavailability", c.gnss_unavailability);
    if (r.has("mode")) {
        std::string mode;
        r.read("mode", mode);
        if (mode == "direct") c.mode = NetMode::direct;
        else if (mode == "rss_wnls") c.mode = NetMode::rss_wnls;
        else fail(ErrorCode::config, "field 'mode': expected \"direct\" or \"rss_wnls\"");
    }
    if (r.has("networks")) {
        const auto& arr = r.raw("networks");
        if (!arr.is_array()) fail(ErrorCode::config, "field 'networks': expected an array");
        c.networks.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string f = "networks[" + std::to_string(i) + "]";
            ObjectReader nr(arr[i], f);
            NetworkConfig n;
            nr.read("noise_std", n.noise_std);
            nr.read("unavailability", n.unavailability);
            nr.read("period", n.period);
            nr.read("tx_dbm", n.tx_dbm);
            nr.read("station_spacing", n.station_spacing);
            if (nr.has("stations")) n.stations = detail::read_points(nr.raw("stations"), nr.field("stations"));
            nr.finish();
            c.networks.push_back(n);
        }
    }
    r.read("path_loss_exponent", c.path_loss_exponent);
    r.read("path_loss_ref_db", c.path_loss_ref_db);
    r.read("rss_noise_std", c.rss_noise_std);
    r.read("wnls_stations", c.wnls_stations);
    if (r.has("imu")) {
        auto ir = r.child("imu");
        ir.read("rate_hz", c.imu.rate_hz);
        ir.read("vel_noise", c.imu.vel_noise);
        ir.read("vel_bias_std", c.imu.vel_bias_std);
        ir.read("accel_noise", c.imu.accel_noise);
        ir.read("accel_bias_std", c.imu.accel_bias_std);
        ir.read("yaw_noise", c.imu.yaw_noise);
        ir.read("tilt_noise", c.imu.tilt_noise);
        ir.read("velocity_available", c.imu.velocity_available);
        ir.read("accel_available", c.imu.accel_available);
        ir.finish();
    }
    if (r.has("attack")) {
        auto ar = r.child("attack");
        if (ar.has("kind")) {
            std::string kind;
            ar.read("kind", kind);
            bool ok = false;
            for (auto k : {AttackKind::none, AttackKind::constant_offset, AttackKind::exponential_deviation,
                           AttackKind::position_jump, AttackKind::spoof_path}) {
                if (kind == to_string(k)) {
                    c.attack.kind = k;
                    ok = true;
                }
            }
            if (!ok) fail(ErrorCode::config, "field 'attack.kind': unknown attack kind '" + kind + "'");
        }
        ar.read("start", c.attack.start);
        ar.read("direction_deg", c.attack.direction_deg);
        ar.read("offset", c.attack.offset);
        ar.read("d0", c.attack.d0);
        ar.read("growth", c.attack.growth);
        ar.read("cap", c.attack.cap);
        ar.read("profiling", c.attack.profiling);
        ar.read("profile_offset", c.attack.profile_offset);
        if (ar.has("path")) {
            const auto v = ObjectReader::convert<std::vector<std::vector<double>>>(ar.raw("path"), "attack.path");
            c.attack.path.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (v[i].size() != 3) fail(ErrorCode::config, "field 'attack.path[" + std::to_string(i) + "]': expected [t, east, north]");
                c.attack.path.push_back({v[i][0], v[i][1], v[i][2]});
            }
        }
        ar.finish();
    }
    r.read("delta_d", c.delta_d);
    r.read("seed", c.seed);
    r.finish();
    c.validate();
    return c;
}

// --- trajectory ----------------------------------------------------------------------------

/// Straight lines joined by circular fillets (C1 continuous).
class Path {
public:
    struct Segment {
        double s0 = 0.0;
        double length = 0.0;
        Eigen::Vector2d a;     ///< line start or arc center
        Eigen::Vector2d dir;   ///< line direction (unit)
        double radius = 0.0;   ///< 0 for lines
        double phi0 = 0.0;     ///< arc start angle about the center
        double turn = 0.0;     ///< +1 left, -1 right
    };

    struct Pose {
        Eigen::Vector2d pos;
        Eigen::Vector2d tangent;
        double curvature = 0.0; ///< signed, 1/m
    };

    Path(std::vector<LocalPoint> pts, double radius, bool loop, double min_length) {
        if (pts.size() < 2) fail(ErrorCode::config, "path needs at least 2 waypoints");
        std::vector<Eigen::Vector2d> wp;
        for (const auto& p : pts) wp.push_back(p.vec());
        if (loop) {
            // Repeat the closed polygon until it is long enough.
            double perim = 0.0;
            for (std::size_t i = 0; i < wp.size(); ++i) perim += (wp[(i + 1) % wp.size()] - wp[i]).norm();
            if (!(perim > 0.0)) fail(ErrorCode::config, "degenerate looped route");
            const auto laps = static_cast<std::size_t>(std::ceil(min_length / perim)) + 1;
            std::vector<Eigen::Vector2d> rep;
            for (std::size_t l = 0; l < laps; ++l) rep.insert(rep.end(), wp.begin(), wp.end());
            rep.push_back(wp.front());
            wp = std::move(rep);
        }
        std::vector<Eigen::Vector2d> clean{wp.front()};
        for (std::size_t i = 1; i < wp.size(); ++i) {
            if ((wp[i] - clean.back()).norm() > 1e-9) clean.push_back(wp[i]);
        }
        if (clean.size() < 2) fail(ErrorCode::config, "waypoints coincide");
        build(clean, radius);
    }

    double length() const { return segs_.empty() ? 0.0 : segs_.back().s0 + segs_.back().length; }
    const std::vector<Segment>& segments() const { return segs_; }

    Pose at(double s) const {
        s = std::clamp(s, 0.0, length());
        auto it = std::upper_bound(segs_.begin(), segs_.end(), s, [](double x, const Segment& g) { return x < g.s0; });
        const Segment& g = *(it == segs_.begin() ? it : std::prev(it));
        const double u = s - g.s0;
        Pose p;
        if (g.radius == 0.0) {
            p.pos = g.a + u * g.dir;
            p.tangent = g.dir;
            return p;
        }
        const double phi = g.phi0 + g.turn * u / g.radius;
        const Eigen::Vector2d radial(std::cos(phi), std::sin(phi));
        p.pos = g.a + g.radius * radial;
        p.tangent = g.turn * Eigen::Vector2d(-radial.y(), radial.x());
        p.curvature = g.turn / g.radius;
        return p;
    }

private:
    void add_line(const Eigen::Vector2d& from, const Eigen::Vector2d& to) {
        const double len = (to - from).norm();
        if (len <= 1e-12) return;
        Segment g;
        g.s0 = length();
        g.length = len;
        g.a = from;
        g.dir = (to - from) / len;
        segs_.push_back(g);
    }

    void build(const std::vector<Eigen::Vector2d>& wp, double radius) {
        Eigen::Vector2d cursor = wp.front();
        for (std::size_t i = 1; i + 1 < wp.size(); ++i) {
            const Eigen::Vector2d d1 = (wp[i] - wp[i - 1]).normalized();
            const Eigen::Vector2d d2 = (wp[i + 1] - wp[i]).normalized();
            const double cross = d1.x() * d2.y() - d1.y() * d2.x();
            const double theta = std::atan2(std::abs(cross), d1.dot(d2));
            if (theta > std::numbers::pi - 1e-3) fail(ErrorCode::config, "route reverses direction at a waypoint");
            if (radius <= 0.0 || theta < 1e-9) {
                add_line(cursor, wp[i]);
                cursor = wp[i];
                continue;
            }
            const double half_a = 0.5 * (wp[i] - wp[i - 1]).norm();
            const double half_b = 0.5 * (wp[i + 1] - wp[i]).norm();
            double tan_len = radius * std::tan(0.5 * theta);
            tan_len = std::min({tan_len, half_a, half_b});
            const double r = tan_len / std::tan(0.5 * theta);
            const Eigen::Vector2d p1 = wp[i] - d1 * tan_len;
            add_line(cursor, p1);
            const double turn = cross > 0.0 ? 1.0 : -1.0;
            const Eigen::Vector2d normal = turn * Eigen::Vector2d(-d1.y(), d1.x());
            Segment g;
            g.s0 = length();
            g.length = r * theta;
            g.a = p1 + r * normal;
            g.radius = r;
            g.turn = turn;
            const Eigen::Vector2d rad0 = p1 - g.a;
            g.phi0 = std::atan2(rad0.y(), rad0.x());
            segs_.push_back(g);
            cursor = wp[i] + d2 * tan_len;
        }
        add_line(cursor, wp.back());
        if (segs_.empty()) fail(ErrorCode::config, "empty route");
    }

    std::vector<Segment> segs_;
};

/// Piecewise-linear speed in time; distance is its exact integral.
class SpeedProfile {
public:
    explicit SpeedProfile(std::vector<SpeedKnot> knots) : k_(std::move(knots)) {
        if (k_.empty()) fail(ErrorCode::config, "speed profile needs knots");
        for (std::size_t i = 1; i < k_.size(); ++i) {
            if (!(k_[i].t > k_[i - 1].t)) fail(ErrorCode::config, "speed profile has a negative segment time");
        }
        for (const auto& k : k_) {
            if (!(k.v >= 0.0)) fail(ErrorCode::config, "speed profile has a negative speed");
        }
        cum_.assign(k_.size(), 0.0);
        for (std::size_t i = 1; i < k_.size(); ++i) {
            cum_[i] = cum_[i - 1] + 0.5 * (k_[i].v + k_[i - 1].v) * (k_[i].t - k_[i - 1].t);
        }
    }

    double speed(double t) const { return eval(t).first; }
    double accel(double t) const { return eval(t).second; }

    double distance(double t) const {
        if (t <= k_.front().t) return k_.front().v * (t - k_.front().t);
        if (t >= k_.back().t) return cum_.back() + k_.back().v * (t - k_.back().t);
        const auto i = segment(t);
        const double tau = t - k_[i].t;
        const double slope = (k_[i + 1].v - k_[i].v) / (k_[i + 1].t - k_[i].t);
        return cum_[i] + k_[i].v * tau + 0.5 * slope * tau * tau;
    }

private:
    std::size_t segment(double t) const {
        auto it = std::upper_bound(k_.begin(), k_.end(), t, [](double x, const SpeedKnot& k) { return x < k.t; });
        return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - k_.begin()) - 1));
    }

    std::pair<double, double> eval(double t) const {
        if (t <= k_.front().t) return {k_.front().v, 0.0};
        if (t >= k_.back().t) return {k_.back().v, 0.0};
        const auto i = segment(t);
        const double slope = (k_[i + 1].v - k_[i].v) / (k_[i + 1].t - k_[i].t);
        return {k_[i].v + slope * (t - k_[i].t), slope};
    }

    std::vector<SpeedKnot> k_;
    std::vector<double> cum_;
};

struct KinState {
    double t = 0.0;
    LocalPoint pos;
    Eigen::Vector2d vel = Eigen::Vector2d::Zero();
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    double heading = 0.0; ///< yaw, counter-clockwise from east
};

class Trajectory {
public:
    Trajectory(const SimConfig& cfg)
        : profile_(cfg.speed),
          path_(cfg.waypoints, cfg.fillet_radius, cfg.loop, profile_.distance(cfg.epochs * cfg.dt + 1.0)) {}

    KinState state(double t) const {
        KinState k;
        k.t = t;
        const double s = profile_.distance(t);
        const auto pose = path_.at(s);
        k.pos = LocalPoint::from(pose.pos);
        k.heading = std::atan2(pose.tangent.y(), pose.tangent.x());
        if (s >= path_.length()) return k; // parked at the end of the route
        const double v = profile_.speed(t);
        const double a = profile_.accel(t);
        k.vel = v * pose.tangent;
        const Eigen::Vector2d normal(-pose.tangent.y(), pose.tangent.x());
        k.acc = a * pose.tangent + v * v * pose.curvature * normal;
        return k;
    }

    const Path& path() const { return path_; }

private:
    SpeedProfile profile_;
    Path path_;
};

// --- randomness --------------------------------------------------------------------------

/// Independent generator per purpose, derived from the scenario seed.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
    return std::mt19937_64(seq);
}

enum StreamTag : std::uint32_t { kStreamImu = 1, kStreamGnss = 2, kStreamNet = 3, kStreamRss = 4 };

// --- sensors ------------------------------------------------------------------------------------

inline std::vector<TruthSample> generate_truth(const Trajectory& traj, const SimConfig& cfg) {
    std::vector<TruthSample> out(static_cast<std::size_t>(cfg.epochs));
    for (int k = 0; k < cfg.epochs; ++k) out[static_cast<std::size_t>(k)] = {k * cfg.dt, traj.state(k * cfg.dt).pos};
    return out;
}

/// Raw-rate body-frame motion over [0, last epoch + dt/2).
inline std::vector<MotionSample> synthesize_sensors(const Trajectory& traj, const SimConfig& cfg) {
    auto rng = make_stream(cfg.seed, kStreamImu);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto& ic = cfg.imu;
    Eigen::Vector3d vbias, abias;
    for (int i = 0; i < 3; ++i) vbias(i) = ic.vel_bias_std * gauss(rng);
    for (int i = 0; i < 3; ++i) abias(i) = ic.accel_bias_std * gauss(rng);
    vbias.z() = abias.z() = 0.0;

    const double end = (cfg.epochs - 1) * cfg.dt + 0.5 * cfg.dt;
    const auto count = static_cast<std::size_t>(std::ceil(end * ic.rate_hz - 1e-9));
    std::vector<MotionSample> out;
    out.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        const double t = static_cast<double>(j) / ic.rate_hz;
        const auto k = traj.state(t);
        const Orientation truth_o = Orientation::make(0.0, 0.0, k.heading);
        const Eigen::Matrix3d Rt = rotation(truth_o).transpose();
        MotionSample s;
        s.t = t;
        s.v_available = ic.velocity_available;
        s.a_available = ic.accel_available;
        Eigen::Vector3d nv, na;
        for (int i = 0; i < 3; ++i) nv(i) = gauss(rng);
        for (int i = 0; i < 3; ++i) na(i) = gauss(rng);
        nv.z() = na.z() = 0.0;
        s.v = Rt * Eigen::Vector3d(k.vel.x(), k.vel.y(), 0.0) + vbias + ic.vel_noise * nv;
        s.a = Rt * Eigen::Vector3d(k.acc.x(), k.acc.y(), 0.0) + abias + ic.accel_noise * na;
        const double roll = ic.tilt_noise * gauss(rng);
        const double pitch = ic.tilt_noise * gauss(rng);
        const double yaw = k.heading + ic.yaw_noise * gauss(rng);
        s.rpy = Orientation::make(roll, pitch, yaw);
        if (!s.v_available) s.v.setZero();
        if (!s.a_available) s.a.setZero();
        out.push_back(s);
    }
    return out;
}

/// Power-law path loss model shared by the generator and the WNLS solver.
struct PathLoss {
    double exponent = 2.0;
    double ref_db = 40.0;

    double rss(double tx_dbm, double d) const { return tx_dbm - ref_db - 10.0 * exponent * std::log10(std::max(d, 1.0)); }
    double range(double tx_dbm, double rss_dbm) const { return std::pow(10.0, (tx_dbm - ref_db - rss_dbm) / (10.0 * exponent)); }
};

/// Weighted nonlinear least squares on ranges, weights 1/d^2 (log-normal
/// shadowing gives errors proportional to range). Gauss-Newton from the
/// range-weighted centroid; nullopt if it fails to converge in `max_iter`.
inline std::optional<LocalPoint> wnls_position(const std::vector<LocalPoint>& stations, const std::vector<double>& ranges,
                                               int max_iter = 50) {
    if (stations.size() < 3 || stations.size() != ranges.size()) return std::nullopt;
    Eigen::Vector2d p = Eigen::Vector2d::Zero();
    double ws = 0.0;
    for (std::size_t j = 0; j < stations.size(); ++j) {
        const double w = 1.0 / std::max(ranges[j], 1.0);
        p += w * stations[j].vec();
        ws += w;
    }
    p /= ws;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (std::size_t j = 0; j < stations.size(); ++j) {
            Eigen::Vector2d diff = p - stations[j].vec();
            double d = diff.norm();
            if (d < 1e-6) {
                diff = Eigen::Vector2d(1e-6, 0.0);
                d = 1e-6;
            }
            const Eigen::Vector2d J = diff / d;
            const double w = 1.0 / std::max(ranges[j] * ranges[j], 1.0);
            H += w * J * J.transpose();
            g += w * J * (d - ranges[j]);
        }
        const Eigen::Vector2d step = H.ldlt().solve(-g);
        if (!step.allFinite()) return std::nullopt;
        p += step;
        if (step.norm() < 1e-7) return LocalPoint::from(p);
    }
    return std::nullopt;
}

/// Regular station grid covering the route's bounding box plus one spacing.
inline std::vector<LocalPoint> auto_stations(const Path& path, double spacing, double offset) {
    Eigen::Vector2d lo = path.at(0.0).pos, hi = lo;
    for (double s = 0.0; s <= path.length(); s += 10.0) {
        const auto p = path.at(s).pos;
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    lo.array() -= spacing;
    hi.array() += spacing;
    std::vector<LocalPoint> out;
    for (double e = lo.x() + offset; e <= hi.x(); e += spacing) {
        for (double n = lo.y() + offset; n <= hi.y(); n += spacing) out.push_back({e, n});
    }
    return out;
}

struct NetworkStreams {
    std::vector<std::vector<PositionSample>> samples; ///< index m-1
    std::vector<Station> stations;
    std::vector<RssSample> rss;
};

inline NetworkStreams synthesize_network_positions(const std::vector<TruthSample>& truth, const Trajectory& traj,
                                                   const SimConfig& cfg) {
    NetworkStreams out;
    const int M = cfg.M();
    out.samples.resize(static_cast<std::size_t>(M));
    auto rng = make_stream(cfg.seed, kStreamNet);
    auto rss_rng = make_stream(cfg.seed, kStreamRss);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const PathLoss pl{cfg.path_loss_exponent, cfg.path_loss_ref_db};

    std::vector<std::vector<LocalPoint>> layout(static_cast<std::size_t>(M));
    if (cfg.mode == NetMode::rss_wnls) {
        for (int m = 0; m < M; ++m) {
            const auto& n = cfg.networks[static_cast<std::size_t>(m)];
            auto& st = layout[static_cast<std::size_t>(m)];
            st = n.stations.empty() ? auto_stations(traj.path(), n.station_spacing, 0.37 * n.station_spacing * m) : n.stations;
            for (std::size_t j = 0; j < st.size(); ++j) {
                out.stations.push_back({(m + 1) * 1000 + static_cast<int>(j), st[j], n.tx_dbm});
            }
        }
    }

    std::size_t dropped = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const auto& tr = truth[k];
        for (int m = 0; m < M; ++m) {
            const auto& n = cfg.networks[static_cast<std::size_t>(m)];
            // Draws happen unconditionally so that streams stay aligned across configs.
            const double u = unif(rng);
            const double ge = gauss(rng);
            const double gn = gauss(rng);
            const bool scheduled = static_cast<int>(k) % n.period == 0;
            if (cfg.mode == NetMode::direct) {
                if (scheduled && u >= n.unavailability) {
                    out.samples[static_cast<std::size_t>(m)].push_back(
                        {tr.t, m + 1, {tr.pos.east + n.noise_std * ge, tr.pos.north + n.noise_std * gn}});
                }
                continue;
            }
            const auto& st = layout[static_cast<std::size_t>(m)];
            std::vector<std::pair<double, std::size_t>> by_dist;
            for (std::size_t j = 0; j < st.size(); ++j) by_dist.push_back({distance(st[j], tr.pos), j});
            const auto keep = std::min<std::size_t>(static_cast<std::size_t>(cfg.wnls_stations), by_dist.size());
            std::partial_sort(by_dist.begin(), by_dist.begin() + static_cast<std::ptrdiff_t>(keep), by_dist.end());
            std::vector<LocalPoint> used;
            std::vector<double> ranges;
            for (std::size_t q = 0; q < keep; ++q) {
                const auto j = by_dist[q].second;
                const double dbm = pl.rss(n.tx_dbm, by_dist[q].first) + cfg.rss_noise_std * gauss(rss_rng);
                out.rss.push_back({tr.t, (m + 1) * 1000 + static_cast<int>(j), dbm});
                used.push_back(st[j]);
                ranges.push_back(pl.range(n.tx_dbm, dbm));
            }
            if (!scheduled || u < n.unavailability) continue;
            if (auto p = wnls_position(used, ranges)) {
                out.samples[static_cast<std::size_t>(m)].push_back({tr.t, m + 1, *p});
            } else {
                ++dropped;
            }
        }
    }
    if (dropped > 0) log::info("WNLS did not converge for " + std::to_string(dropped) + " fixes (dropped)");
    return out;
}

// --- attacks ------------------------------------------------------------------------------

/// Spoofing displacement applied to the GNSS fix at epoch k (zero before start).
inline Eigen::Vector2d attack_offset(const AttackSpec& a, int k, double dt) {
    if (a.kind == AttackKind::none || k < a.start) return Eigen::Vector2d::Zero();
    const double ang = a.direction_deg * kDegToRad;
    const Eigen::Vector2d dir(std::cos(ang), std::sin(ang));
    const int rel = k - a.start;
    switch (a.kind) {
    case AttackKind::none: return Eigen::Vector2d::Zero();
    case AttackKind::constant_offset:
    case AttackKind::position_jump: return a.offset * dir;
    case AttackKind::exponential_deviation: {
        if (rel < a.profiling) return a.profile_offset * dir;
        const double mag = a.d0 * std::pow(a.growth, rel - a.profiling);
        return std::min(mag, a.cap) * dir;
    }
    case AttackKind::spoof_path: {
        const double t = rel * dt;
        const auto& p = a.path;
        if (t <= p.front()[0]) return {p.front()[1], p.front()[2]};
        if (t >= p.back()[0]) return {p.back()[1], p.back()[2]};
        std::size_t i = 1;
        while (p[i][0] < t) ++i;
        const double f = (t - p[i - 1][0]) / (p[i][0] - p[i - 1][0]);
        return {p[i - 1][1] + f * (p[i][1] - p[i - 1][1]), p[i - 1][2] + f * (p[i][2] - p[i - 1][2])};
    }
    }
    return Eigen::Vector2d::Zero();
}

/// Displaces the GNSS stream only and relabels every epoch:
/// attacked = attack active and |emitted GNSS - truth| > delta_d.
inline void inject_attack(Trace& trace, const AttackSpec& spec, double delta_d, double dt) {
    trace.labels.assign(trace.truth.size(), {});
    for (std::size_t k = 0; k < trace.truth.size(); ++k) trace.labels[k] = {trace.truth[k].t, false};
    if (trace.samples.empty()) return;
    const double t0 = trace.truth.empty() ? 0.0 : trace.truth.front().t;
    for (auto& s : trace.samples[kGnss]) {
        const auto k = static_cast<int>(std::llround((s.t - t0) / dt));
        if (k < 0 || k >= static_cast<int>(trace.truth.size())) continue;
        const Eigen::Vector2d off = attack_offset(spec, k, dt);
        s.pos = LocalPoint::from(s.pos.vec() + off);
        const bool active = spec.kind != AttackKind::none && k >= spec.start;
        trace.labels[static_cast<std::size_t>(k)].attacked =
            active && distance(s.pos, trace.truth[static_cast<std::size_t>(k)].pos) > delta_d;
    }
}

inline Trace simulate(const SimConfig& cfg) {
    cfg.validate();
    const Trajectory traj(cfg);
    Trace trace;
    trace.ref = cfg.ref;
    trace.M = cfg.M();
    trace.truth = generate_truth(traj, cfg);
    trace.samples.assign(static_cast<std::size_t>(trace.M + 1), {});

    auto grng = make_stream(cfg.seed, kStreamGnss);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (const auto& tr : trace.truth) {
        const double u = unif(grng);
        const double ge = gauss(grng);
        const double gn = gauss(grng);
        if (u < cfg.gnss_unavailability) continue;
        trace.samples[kGnss].push_back(
            {tr.t, kGnss, {tr.pos.east + cfg.gnss_noise_std * ge, tr.pos.north + cfg.gnss_noise_std * gn}});
    }
    auto net = synthesize_network_positions(trace.truth, traj, cfg);
    for (int m = 0; m < trace.M; ++m) trace.samples[static_cast<std::size_t>(m + 1)] = std::move(net.samples[static_cast<std::size_t>(m)]);
    trace.stations = std::move(net.stations);
    trace.rss = std::move(net.rss);
    trace.motion = synthesize_sensors(traj, cfg);
    inject_attack(trace, cfg.attack, cfg.delta_d, cfg.dt);

    return trace;
}

} // namespace pads
