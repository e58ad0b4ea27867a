#pragma once

// Per-epoch outcomes, detection rates, delay, ROC sweeps and error
// percentiles, plus the outcomes CSV format.

#include "pads/errors.hpp"
#include "pads/geo_frames.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pads {

struct Outcome {
    double t = 0.0;
    bool truth = false;    ///< ground truth H1
    bool decision = false; ///< detector said H1
    double score = 0.0;
    LocalPoint recovered;
    LocalPoint truth_pos;
};

struct Rates {
    double tpr = 0.0;
    double fpr = 0.0;
    std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
};

inline Rates count_rates(std::span<const Outcome> outcomes) {
    Rates r;
    for (const auto& o : outcomes) {
        if (o.truth) (o.decision ? r.tp : r.fn)++;
        else (o.decision ? r.fp : r.tn)++;
    }
    r.tpr = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    r.fpr = r.fp + r.tn > 0 ? static_cast<double>(r.fp) / static_cast<double>(r.fp + r.tn) : 0.0;
    return r;
}

/// Per-epoch R_TP and R_FP; both classes must be present.
inline Rates rates(std::span<const Outcome> outcomes) {
    const Rates r = count_rates(outcomes);
    if (r.tp + r.fn == 0) fail(ErrorCode::undefined_rate, "no attacked epochs");
    if (r.fp + r.tn == 0) fail(ErrorCode::undefined_rate, "no benign epochs");
    return r;
}

inline constexpr double kNeverDetected = std::numeric_limits<double>::infinity();

/// First alarm at or after the first ground-truth H1 epoch, minus that epoch's
/// time. kNeverDetected when no alarm is raised during the attack.
inline double detection_delay(std::span<const Outcome> outcomes) {
    auto first = std::find_if(outcomes.begin(), outcomes.end(), [](const Outcome& o) { return o.truth; });
    if (first == outcomes.end()) fail(ErrorCode::undefined_rate, "no attack in outcomes");
    for (auto it = first; it != outcomes.end(); ++it) {
        if (it->decision) return it->t - first->t;
    }
    return kNeverDetected;
}

struct DelaySummary {
    double mean = kNeverDetected; ///< over detected traces
    std::size_t detected = 0;
    std::size_t misses = 0;
};

inline DelaySummary summarize_delays(std::span<const double> delays) {
    DelaySummary s;
    double sum = 0.0;
    for (double d : delays) {
        if (std::isfinite(d)) {
            sum += d;
            ++s.detected;
        } else {
            ++s.misses;
        }
    }
    if (s.detected > 0) s.mean = sum / static_cast<double>(s.detected);
    return s;
}

struct RocPoint {
    double gamma = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    double delay_mean = kNeverDetected;
    std::size_t misses = 0;
};

/// Re-thresholds recorded scores (decision = score >= gamma) for each gamma;
/// rates are pooled over all traces, delays averaged over traces.
inline std::vector<RocPoint> roc_sweep(std::span<const std::vector<Outcome>> traces, std::span<const double> grid) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] < grid[i - 1]) fail(ErrorCode::invalid_input, "gamma grid must be sorted");
    }
    std::vector<RocPoint> out;
    out.reserve(grid.size());
    std::vector<Outcome> tmp;
    for (double g : grid) {
        RocPoint p;
        p.gamma = g;
        std::size_t tp = 0, pos = 0, fp = 0, neg = 0;
        std::vector<double> delays;
        for (const auto& tr : traces) {
            tmp.assign(tr.begin(), tr.end());
            bool attacked = false;
            for (auto& o : tmp) {
                o.decision = o.score >= g;
                attacked |= o.truth;
                if (o.truth) {
                    ++pos;
                    tp += o.decision;
                } else {
                    ++neg;
                    fp += o.decision;
                }
            }
            if (attacked) delays.push_back(detection_delay(tmp));
        }
        p.tpr = pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0;
        p.fpr = neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0;
        const auto d = summarize_delays(delays);
        p.delay_mean = d.mean;
        p.misses = d.misses;
        out.push_back(p);
    }
    return out;
}

inline std::vector<double> parse_gamma_grid(const std::string& spec) {
    double lo = 0.0, hi = 0.0;
    long steps = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(spec);
    if (!(is >> lo >> c1 >> hi >> c2 >> steps) || c1 != ':' || c2 != ':' || !is.eof() || steps < 1 || hi < lo) {
        fail(ErrorCode::config, "gamma grid must be lo:hi:steps with lo <= hi and steps >= 1");
    }
    std::vector<double> g(static_cast<std::size_t>(steps));
    for (long i = 0; i < steps; ++i) {
        g[static_cast<std::size_t>(i)] = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
    return g;
}

/// Smallest threshold whose alarm rate on `benign` does not exceed `target`
/// (decision rule score >= gamma).
inline double threshold_for_fpr(std::vector<double> benign, double target) {
    if (benign.empty()) fail(ErrorCode::undefined_rate, "no benign scores for calibration");
    std::sort(benign.begin(), benign.end(), std::greater<>());
    const auto allowed = static_cast<std::size_t>(std::floor(target * static_cast<double>(benign.size()) + 1e-9));
    if (allowed >= benign.size()) return -std::numeric_limits<double>::infinity();
    return std::nextafter(benign[allowed], std::numeric_limits<double>::infinity());
}

struct ErrorStats {
    double mean = 0.0;
    double median = 0.0;
    double best20 = 0.0;  ///< 20th percentile
    double worst20 = 0.0; ///< 80th percentile
    double max = 0.0;
    std::size_t count = 0;
};

/// Linear-interpolation percentile (position q * (n - 1) in the sorted data).
inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) fail(ErrorCode::invalid_input, "percentile of empty data");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline ErrorStats error_stats(const std::vector<double>& errors, std::size_t min_count = 5) {
    if (errors.size() < min_count) {
        fail(ErrorCode::undefined_rate, "need at least " + std::to_string(min_count) + " errors for statistics");
    }
    ErrorStats s;
    s.count = errors.size();
    double sum = 0.0;
    for (double e : errors) sum += e;
    s.mean = sum / static_cast<double>(errors.size());
    s.median = percentile(errors, 0.5);
    s.best20 = percentile(errors, 0.2);
    s.worst20 = percentile(errors, 0.8);
    s.max = *std::max_element(errors.begin(), errors.end());
    return s;
}

/// |recovered - truth| over attacked epochs.
inline ErrorStats recovered_error_stats(std::span<const Outcome> outcomes) {
    std::vector<double> e;
    for (const auto& o : outcomes) {
        if (o.truth) e.push_back(distance(o.recovered, o.truth_pos));
    }
    return error_stats(e);
}

// --- CSV ---------------------------------------------------------------------------

inline constexpr const char* kOutcomesHeader = "t,truth,decision,score,rec_e,rec_n,true_e,true_n";

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_outcomes(std::ostream& os, std::span<const Outcome> outcomes) {
    os << kOutcomesHeader << '\n';
    for (const auto& o : outcomes) {
        os << format_double(o.t) << ',' << (o.truth ? 1 : 0) << ',' << (o.decision ? 1 : 0) << ','
           << format_double(o.score) << ',' << format_double(o.recovered.east) << ','
           << format_double(o.recovered.north) << ',' << format_double(o.truth_pos.east) << ','
           << format_double(o.truth_pos.north) << '\n';
    }
}

inline std::vector<Outcome> read_outcomes(std::istream& is, const std::string& name = "outcomes") {
    std::string line;
    if (!std::getline(is, line)) fail(ErrorCode::data, name + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kOutcomesHeader) fail(ErrorCode::data, name + ": unexpected header '" + line + "'");
    std::vector<Outcome> out;
    std::size_t no = 1;
    while (std::getline(is, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 8) fail(ErrorCode::data, name + ":" + std::to_string(no) + ": expected 8 fields");
        try {
            auto flag = [&](const std::string& s) {
                if (s != "0" && s != "1") throw std::invalid_argument("flag must be 0 or 1");
                return s == "1";
            };
            Outcome o;
            o.t = std::stod(f[0]);
            o.truth = flag(f[1]);
            o.decision = flag(f[2]);
            o.score = std::stod(f[3]);
            o.recovered = {std::stod(f[4]), std::stod(f[5])};
            o.truth_pos = {std::stod(f[6]), std::stod(f[7])};
            out.push_back(o);
        } catch (const std::exception& e) {
            fail(ErrorCode::data, name + ":" + std::to_string(no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace pads
