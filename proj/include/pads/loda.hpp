#pragma once

// Loda: an ensemble of one-dimensional histograms over random projections.
// score(z) = -(1/k) sum_i log P_i[v_i . z], where P_i is the smoothed mass of
// the histogram bin that the projection falls into.

#include "pads/errors.hpp"
#include "pads/fusion.hpp"
#include "pads/log.hpp"
#include "pads/trace_model.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pads {

inline constexpr int kLodaFeatureDim = 4;
inline constexpr int kLodaFormatVersion = 1;

struct Histogram {
    std::vector<double> edges; ///< size bins+1, strictly increasing (single bin may be degenerate)
    std::vector<double> prob;  ///< smoothed bin masses, sum to 1

    /// Bin index for x, or -1 outside [edges.front(), edges.back()].
    int bin(double x) const {
        if (prob.empty()) return -1;
        if (prob.size() == 1) {
            const double lo = edges.front(), hi = edges.back();
            const double tol = 1e-12 * (1.0 + std::abs(lo));
            return (x >= lo - tol && x <= hi + tol) ? 0 : -1;
        }
        if (x < edges.front() || x > edges.back()) return -1;
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        auto idx = static_cast<int>(it - edges.begin()) - 1;
        return std::clamp(idx, 0, static_cast<int>(prob.size()) - 1);
    }
};

struct LodaModel {
    int k = 0;
    std::uint64_t seed = 0;
    std::size_t trained_on = 0;
    std::array<double, kLodaFeatureDim> center{};
    std::array<double, kLodaFeatureDim> scale{1.0, 1.0, 1.0, 1.0};
    std::vector<std::array<double, kLodaFeatureDim>> projections;
    std::vector<Histogram> histograms;
    double floor_prob = 1e-3; ///< probability assigned outside a histogram's support

    bool trained() const { return k > 0 && projections.size() == static_cast<std::size_t>(k) && histograms.size() == projections.size(); }

    double project(int i, const Feature& z) const {
        const auto& v = projections[static_cast<std::size_t>(i)];
        double s = 0.0;
        for (int d = 0; d < kLodaFeatureDim; ++d) s += v[static_cast<std::size_t>(d)] * (z[static_cast<std::size_t>(d)] - center[static_cast<std::size_t>(d)]) / scale[static_cast<std::size_t>(d)];
        return s;
    }
};

struct LodaConfig {
    int k = 100;
    std::uint64_t seed = 1;
    std::size_t min_samples = 50;
    int resample_attempts = 10;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& s, double q) {
    if (s.size() == 1) return s.front();
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

/// Freedman-Diaconis histogram with add-one smoothing.
inline Histogram build_histogram(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double lo = values.front(), hi = values.back();
    const auto n = values.size();
    Histogram h;
    std::size_t bins = 1;
    const double range = hi - lo;
    if (range > 0.0) {
        const double iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
        double width = 2.0 * iqr / std::cbrt(static_cast<double>(n));
        if (!(width > 0.0)) width = range / std::sqrt(static_cast<double>(n));
        const auto cap = static_cast<std::size_t>(std::ceil(2.0 * std::sqrt(static_cast<double>(n))));
        bins = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(range / width)), 1, cap);
    }
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + range * static_cast<double>(b) / static_cast<double>(bins);
    h.edges.back() = hi;
    h.prob.assign(bins, 0.0);
    std::vector<double> counts(bins, 0.0);
    for (double x : values) counts[static_cast<std::size_t>(std::max(0, h.bin(x)))] += 1.0;
    const double denom = static_cast<double>(n) + static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) h.prob[b] = (counts[b] + 1.0) / denom;
    return h;
}

} // namespace detail

/// Trains on benign feature vectors. Features are standardised per dimension
/// with the training mean and deviation before projection.
inline LodaModel train(std::span<const Feature> benign, const LodaConfig& cfg = {}) {
    if (cfg.k < 1) fail(ErrorCode::config, "Loda needs k >= 1");
    if (benign.size() < cfg.min_samples) {
        fail(ErrorCode::under_trained, "Loda needs at least " + std::to_string(cfg.min_samples) +
                                           " benign samples, got " + std::to_string(benign.size()));
    }
    LodaModel model;
    model.k = cfg.k;
    model.seed = cfg.seed;
    model.trained_on = benign.size();
    model.floor_prob = 1.0 / (10.0 * static_cast<double>(benign.size()));

    const double n = static_cast<double>(benign.size());
    for (int d = 0; d < kLodaFeatureDim; ++d) {
        const auto du = static_cast<std::size_t>(d);
        double mean = 0.0;
        for (const auto& f : benign) mean += f[du];
        mean /= n;
        double var = 0.0;
        for (const auto& f : benign) var += (f[du] - mean) * (f[du] - mean);
        var /= n;
        model.center[du] = mean;
        model.scale[du] = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> proj(benign.size());
    for (int i = 0; i < cfg.k; ++i) {
        std::array<double, kLodaFeatureDim> v{};
        for (int attempt = 0;; ++attempt) {
            for (auto& x : v) x = normal(rng);
            model.projections.push_back(v);
            for (std::size_t s = 0; s < benign.size(); ++s) proj[s] = model.project(i, benign[s]);
            model.projections.pop_back();
            const auto [mn, mx] = std::minmax_element(proj.begin(), proj.end());
            if (*mx > *mn || attempt + 1 >= cfg.resample_attempts) break;
            log::info("zero-variance Loda projection " + std::to_string(i) + " resampled");
        }
        model.projections.push_back(v);
        model.histograms.push_back(detail::build_histogram(proj));
    }
    return model;
}

inline double score(const LodaModel& model, const Feature& z) {
    if (!model.trained()) fail(ErrorCode::under_trained, "Loda model is not trained");
    double s = 0.0;
    for (int i = 0; i < model.k; ++i) {
        const auto& h = model.histograms[static_cast<std::size_t>(i)];
        const int b = h.bin(model.project(i, z));
        const double p = b < 0 ? model.floor_prob : h.prob[static_cast<std::size_t>(b)];
        s -= std::log(p);
    }
    return s / model.k;
}

inline Hypothesis decide(double f, double gamma) { return f >= gamma ? Hypothesis::h1 : Hypothesis::h0; }

inline nlohmann::json to_json(const LodaModel& m) {
    nlohmann::json j;
    j["format"] = "pads-loda";
    j["version"] = kLodaFormatVersion;
    j["k"] = m.k;
    j["seed"] = m.seed;
    j["trained_on"] = m.trained_on;
    j["floor_prob"] = m.floor_prob;
    j["center"] = m.center;
    j["scale"] = m.scale;
    j["projections"] = m.projections;
    auto& hs = j["histograms"] = nlohmann::json::array();
    for (const auto& h : m.histograms) hs.push_back({{"edges", h.edges}, {"prob", h.prob}});
    return j;
}

inline LodaModel loda_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "pads-loda") fail(ErrorCode::data, "not a Loda model");
        const int version = j.at("version").get<int>();
        if (version != kLodaFormatVersion) fail(ErrorCode::data, "unsupported Loda model version " + std::to_string(version));
        LodaModel m;
        m.k = j.at("k").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.trained_on = j.at("trained_on").get<std::size_t>();
        m.floor_prob = j.at("floor_prob").get<double>();
        m.center = j.at("center").get<std::array<double, kLodaFeatureDim>>();
        m.scale = j.at("scale").get<std::array<double, kLodaFeatureDim>>();
        m.projections = j.at("projections").get<std::vector<std::array<double, kLodaFeatureDim>>>();
        for (const auto& h : j.at("histograms")) {
            m.histograms.push_back({h.at("edges").get<std::vector<double>>(), h.at("prob").get<std::vector<double>>()});
        }
        if (!m.trained()) fail(ErrorCode::data, "Loda model arrays inconsistent with k");
        for (const auto& h : m.histograms) {
            if (h.prob.empty() || h.edges.size() != h.prob.size() + 1) fail(ErrorCode::data, "malformed histogram");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::data, std::string("malformed Loda model: ") + e.what());
    }
}

} // namespace pads
