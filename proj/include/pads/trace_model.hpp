#pragma once

// Multi-source trace data model and the rolling window buffer with
// attack-feedback screening of the GNSS source.

#include "pads/errors.hpp"
#include "pads/geo_frames.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace pads {

enum class Hypothesis { h0, h1 };

/// Source index 0 is GNSS, 1..M are network positioning sources.
using SourceId = int;
inline constexpr SourceId kGnss = 0;

struct PositionSample {
    double t = 0.0;
    SourceId source = kGnss;
    LocalPoint pos;
};

struct MotionSample {
    double t = 0.0;
    Eigen::Vector3d v = Eigen::Vector3d::Zero(); ///< body frame, m/s
    Eigen::Vector3d a = Eigen::Vector3d::Zero(); ///< body frame, m/s^2
    Orientation rpy;
    bool v_available = true;
    bool a_available = true;
};

struct TruthSample {
    double t = 0.0;
    LocalPoint pos;
};

struct LabelSample {
    double t = 0.0;
    bool attacked = false;
};

/// Base station / access point, only present in traces generated with RSS data.
struct Station {
    int id = 0;
    LocalPoint pos;
    double tx_dbm = 20.0;
};

struct RssSample {
    double t = 0.0;
    int station = 0;
    double dbm = 0.0;
};

struct Trace {
    GeoPoint ref;
    int M = 0;                                       ///< network sources
    std::vector<TruthSample> truth;                  ///< one per epoch
    std::vector<std::vector<PositionSample>> samples; ///< indexed by source, size M+1
    std::vector<MotionSample> motion;                ///< raw rate
    std::vector<LabelSample> labels;                 ///< aligned to truth
    std::vector<Station> stations;
    std::vector<RssSample> rss;

    std::size_t epochs() const { return truth.size(); }
    bool has_stations() const { return !stations.empty() && !rss.empty(); }
};

/// Everything observed at one GNSS epoch, with motion pre-aggregated.
struct EpochData {
    double t = 0.0;
    std::vector<std::optional<LocalPoint>> positions; ///< size M+1, index = source
    std::optional<MotionSample> motion;
    LocalPoint truth;
    bool attacked = false;

    int sources() const { return static_cast<int>(positions.size()); }
};

/// Averages raw motion samples into one per-epoch sample. Yaw is averaged on
/// the circle; velocity/acceleration only over samples that report them.
inline std::optional<MotionSample> aggregate_motion(const std::vector<MotionSample>& raw, double t_epoch) {
    if (raw.empty()) return std::nullopt;
    MotionSample out;
    out.t = t_epoch;
    Eigen::Vector3d vsum = Eigen::Vector3d::Zero(), asum = Eigen::Vector3d::Zero();
    int nv = 0, na = 0;
    double roll = 0.0, pitch = 0.0, ys = 0.0, yc = 0.0;
    for (const auto& s : raw) {
        if (s.v_available) {
            vsum += s.v;
            ++nv;
        }
        if (s.a_available) {
            asum += s.a;
            ++na;
        }
        roll += s.rpy.roll;
        pitch += s.rpy.pitch;
        ys += std::sin(s.rpy.yaw);
        yc += std::cos(s.rpy.yaw);
    }
    const double n = static_cast<double>(raw.size());
    out.v_available = nv > 0;
    out.a_available = na > 0;
    if (nv > 0) out.v = vsum / nv;
    if (na > 0) out.a = asum / na;
    out.rpy = Orientation::make(roll / n, pitch / n, std::atan2(ys, yc));
    return out;
}

/// Groups a trace into GNSS-cadence epochs keyed by the truth timestamps.
/// Position samples are matched within half an epoch; motion is averaged over
/// [t - dt/2, t + dt/2).
inline std::vector<EpochData> assemble_epochs(const Trace& trace) {
    const std::size_t n = trace.truth.size();
    std::vector<EpochData> out(n);
    if (n == 0) return out;
    const double dt = n > 1 ? trace.truth[1].t - trace.truth[0].t : 1.0;
    const double half = 0.5 * dt;

    for (std::size_t k = 0; k < n; ++k) {
        out[k].t = trace.truth[k].t;
        out[k].truth = trace.truth[k].pos;
        out[k].positions.assign(static_cast<std::size_t>(trace.M + 1), std::nullopt);
    }
    if (trace.labels.size() == n) {
        for (std::size_t k = 0; k < n; ++k) out[k].attacked = trace.labels[k].attacked;
    } else {
        for (const auto& l : trace.labels) {
            auto it = std::lower_bound(out.begin(), out.end(), l.t - half,
                                       [](const EpochData& e, double t) { return e.t < t; });
            if (it != out.end() && std::abs(it->t - l.t) <= half) it->attacked = l.attacked;
        }
    }

    auto epoch_index = [&](double t) -> std::optional<std::size_t> {
        auto it = std::lower_bound(out.begin(), out.end(), t - half,
                                   [](const EpochData& e, double x) { return e.t < x; });
        if (it == out.end() || std::abs(it->t - t) > half) return std::nullopt;
        return static_cast<std::size_t>(it - out.begin());
    };

    for (int m = 0; m <= trace.M && m < static_cast<int>(trace.samples.size()); ++m) {
        for (const auto& s : trace.samples[static_cast<std::size_t>(m)]) {
            if (auto k = epoch_index(s.t)) out[*k].positions[static_cast<std::size_t>(m)] = s.pos;
        }
    }

    std::vector<std::vector<MotionSample>> buckets(n);
    for (const auto& s : trace.motion) {
        const double rel = (s.t - out.front().t + half) / dt;
        if (rel < 0.0) continue;
        const auto k = static_cast<std::size_t>(std::floor(rel));
        if (k < n) buckets[k].push_back(s);
    }
    for (std::size_t k = 0; k < n; ++k) out[k].motion = aggregate_motion(buckets[k], out[k].t);
    return out;
}

/// Rolling window S over the last `w` epochs. Epochs pushed after an H1
/// decision carry no GNSS sample.
class WindowBuffer {
public:
    struct Entry {
        double t = 0.0;
        std::vector<std::optional<LocalPoint>> positions;
        std::optional<MotionSample> motion;
        bool screened = false;
    };

    WindowBuffer(int w, int M) : w_(w), M_(M) {
        if (w < 1) fail(ErrorCode::invalid_input, "window length must be >= 1");
        if (M < 0) fail(ErrorCode::invalid_input, "negative source count");
    }

    int capacity() const { return w_; }
    int sources() const { return M_ + 1; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::deque<Entry>& entries() const { return entries_; }
    std::optional<double> head_time() const {
        if (entries_.empty()) return std::nullopt;
        return entries_.back().t;
    }

    void push_epoch(const EpochData& epoch, Hypothesis last_decision) {
        if (!entries_.empty() && !(epoch.t > entries_.back().t)) {
            fail(ErrorCode::ordering, "epoch at t=" + std::to_string(epoch.t) +
                                          " is not after buffer head t=" + std::to_string(entries_.back().t));
        }
        Entry e;
        e.t = epoch.t;
        e.positions.assign(static_cast<std::size_t>(M_ + 1), std::nullopt);
        const auto n = std::min<std::size_t>(epoch.positions.size(), e.positions.size());
        for (std::size_t m = 0; m < n; ++m) e.positions[m] = epoch.positions[m];
        e.motion = epoch.motion;
        if (last_decision == Hypothesis::h1) {
            e.positions[kGnss].reset();
            e.screened = true;
        }
        entries_.push_back(std::move(e));
        while (entries_.size() > static_cast<std::size_t>(w_)) entries_.pop_front();
    }

    /// Samples of source m inside the window, oldest first.
    std::vector<PositionSample> window_view(SourceId m) const {
        if (m < 0 || m > M_) fail(ErrorCode::invalid_source, "unknown source id " + std::to_string(m));
        std::vector<PositionSample> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) {
            if (const auto& p = e.positions[static_cast<std::size_t>(m)]) out.push_back({e.t, m, *p});
        }
        return out;
    }

    /// Motion sample stored for the epoch at time t, if any.
    const MotionSample* motion_at(double t) const {
        for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
            if (it->t == t) return it->motion ? &*it->motion : nullptr;
            if (it->t < t) break;
        }
        return nullptr;
    }

private:
    int w_;
    int M_;
    std::deque<Entry> entries_;
};

} // namespace pads
