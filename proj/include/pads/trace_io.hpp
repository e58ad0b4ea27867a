#pragma once

// JSON Lines trace format. One record per line, "meta" first:
//   {"k":"meta","M":int,"ref_lat":f,"ref_lon":f}
//   {"k":"truth","t":f,"lat":f,"lon":f}
//   {"k":"pos","t":f,"m":int,"lat":f,"lon":f}
//   {"k":"imu","t":f,"v":[f,f,f]|null,"a":[f,f,f]|null,"rpy":[f,f,f]}
//   {"k":"label","t":f,"attacked":bool}
// Traces carrying RSS data add
//   {"k":"station","id":int,"lat":f,"lon":f,"tx_dbm":f}
//   {"k":"rss","t":f,"id":int,"dbm":f}
// Unknown keys and unknown record kinds are ignored on read.

#include "pads/errors.hpp"
#include "pads/trace_model.hpp"

#include "json.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace pads {

namespace detail {

inline nlohmann::json vec3_json(const Eigen::Vector3d& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

inline Eigen::Vector3d json_vec3(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace detail

inline void write_trace(std::ostream& os, const Trace& trace) {
    using nlohmann::json;
    auto line = [&](const json& j) { os << j.dump() << '\n'; };
    line(json{{"k", "meta"}, {"M", trace.M}, {"ref_lat", trace.ref.lat}, {"ref_lon", trace.ref.lon}});
    for (const auto& s : trace.stations) {
        const auto g = from_local(s.pos, trace.ref);
        line(json{{"k", "station"}, {"id", s.id}, {"lat", g.lat}, {"lon", g.lon}, {"tx_dbm", s.tx_dbm}});
    }
    for (const auto& s : trace.truth) {
        const auto g = from_local(s.pos, trace.ref);
        line(json{{"k", "truth"}, {"t", s.t}, {"lat", g.lat}, {"lon", g.lon}});
    }
    for (const auto& src : trace.samples) {
        for (const auto& s : src) {
            const auto g = from_local(s.pos, trace.ref);
            line(json{{"k", "pos"}, {"t", s.t}, {"m", s.source}, {"lat", g.lat}, {"lon", g.lon}});
        }
    }
    for (const auto& s : trace.motion) {
        json j{{"k", "imu"}, {"t", s.t}};
        j["v"] = s.v_available ? detail::vec3_json(s.v) : json(nullptr);
        j["a"] = s.a_available ? detail::vec3_json(s.a) : json(nullptr);
        j["rpy"] = json::array({s.rpy.roll, s.rpy.pitch, s.rpy.yaw});
        line(j);
    }
    for (const auto& r : trace.rss) line(json{{"k", "rss"}, {"t", r.t}, {"id", r.station}, {"dbm", r.dbm}});
    for (const auto& l : trace.labels) line(json{{"k", "label"}, {"t", l.t}, {"attacked", l.attacked}});
}

inline Trace read_trace(std::istream& is) {
    Trace trace;
    bool have_meta = false;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(is, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(text);
            const auto kind = j.at("k").get<std::string>();
            if (kind == "meta") {
                if (have_meta) throw std::runtime_error("duplicate meta record");
                trace.M = j.at("M").get<int>();
                if (trace.M < 0) throw std::runtime_error("negative M");
                trace.ref = {j.at("ref_lat").get<double>(), j.at("ref_lon").get<double>()};
                validate(trace.ref);
                trace.samples.assign(static_cast<std::size_t>(trace.M + 1), {});
                have_meta = true;
                continue;
            }
            if (!have_meta) throw std::runtime_error("record before meta");
            auto local = [&] { return to_local({j.at("lat").get<double>(), j.at("lon").get<double>()}, trace.ref); };
            if (kind == "truth") {
                trace.truth.push_back({j.at("t").get<double>(), local()});
            } else if (kind == "pos") {
                const int m = j.at("m").get<int>();
                if (m < 0 || m > trace.M) throw std::runtime_error("source id out of range");
                trace.samples[static_cast<std::size_t>(m)].push_back({j.at("t").get<double>(), m, local()});
            } else if (kind == "imu") {
                MotionSample s;
                s.t = j.at("t").get<double>();
                const auto& v = j.at("v");
                const auto& a = j.at("a");
                s.v_available = !v.is_null();
                s.a_available = !a.is_null();
                if (s.v_available) s.v = detail::json_vec3(v);
                if (s.a_available) s.a = detail::json_vec3(a);
                const auto rpy = detail::json_vec3(j.at("rpy"));
                s.rpy = Orientation::make(rpy.x(), rpy.y(), rpy.z());
                trace.motion.push_back(s);
            } else if (kind == "label") {
                trace.labels.push_back({j.at("t").get<double>(), j.at("attacked").get<bool>()});
            } else if (kind == "station") {
                trace.stations.push_back({j.at("id").get<int>(), local(), j.at("tx_dbm").get<double>()});
            } else if (kind == "rss") {
                trace.rss.push_back({j.at("t").get<double>(), j.at("id").get<int>(), j.at("dbm").get<double>()});
            }
        } catch (const Error& e) {
            fail(ErrorCode::data, "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::exception& e) {
            fail(ErrorCode::data, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_meta) fail(ErrorCode::data, "trace has no meta record");
    auto by_time = [](const auto& a, const auto& b) { return a.t < b.t; };
    std::stable_sort(trace.truth.begin(), trace.truth.end(), by_time);
    std::stable_sort(trace.labels.begin(), trace.labels.end(), by_time);
    std::stable_sort(trace.motion.begin(), trace.motion.end(), by_time);
    for (auto& src : trace.samples) std::stable_sort(src.begin(), src.end(), by_time);
    return trace;
}

inline Trace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::data, "cannot open trace file " + path);
    return read_trace(in);
}

inline std::string trace_to_string(const Trace& trace) {
    std::ostringstream os;
    write_trace(os, trace);
    return os.str();
}

} // namespace pads
