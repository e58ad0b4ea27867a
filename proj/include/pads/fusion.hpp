#pragma once

// Temporal fusion of one source's recent intervals, product-of-Gaussians
// fusion across sources, and the detector feature vector.

#include "pads/errors.hpp"
#include "pads/geo_frames.hpp"
#include "pads/gp_uncertainty.hpp"
#include "pads/motion_regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace pads {

struct Gaussian2 {
    LocalPoint mean;
    Eigen::Vector2d var = Eigen::Vector2d::Ones();
};

/// K(m, t') = K_loc(t' - t) normalised over the supplied interval times.
inline std::vector<double> fusion_weights(std::span<const ConfidenceInterval> intervals, double t, double kappa) {
    std::vector<double> w(intervals.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        w[i] = loc_kernel(intervals[i].t - t, kappa);
        sum += w[i];
    }
    if (!(sum > 0.0)) {
        // Every weight underflowed: fall back to the most recent interval.
        std::fill(w.begin(), w.end(), 0.0);
        std::size_t last = 0;
        for (std::size_t i = 1; i < intervals.size(); ++i) {
            if (intervals[i].t > intervals[last].t) last = i;
        }
        w[last] = 1.0;
        return w;
    }
    for (auto& x : w) x /= sum;
    return w;
}

/// Weighted sum of independent Gaussians: mean = sum K p_hat, var = sum K^2 sigma^2.
/// Returns nullopt for an empty interval set (the source is skipped).
inline std::optional<Gaussian2> temporal_fuse(std::span<const ConfidenceInterval> intervals,
                                              std::span<const double> weights) {
    if (intervals.empty()) return std::nullopt;
    if (weights.size() != intervals.size()) fail(ErrorCode::invalid_input, "fusion weights/intervals length mismatch");
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Vector2d var = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        mean += weights[i] * intervals[i].mean.vec();
        var += weights[i] * weights[i] * intervals[i].var;
    }
    return Gaussian2{LocalPoint::from(mean), var};
}

struct FusedStatistic {
    LocalPoint mu;
    Eigen::Vector2d sigma = Eigen::Vector2d::Ones(); ///< per-axis deviation, meters
    int sources = 0;
};

/// Per-axis precision-weighted product; the normalising constant is never formed.
inline FusedStatistic product_fuse(std::span<const Gaussian2> parts) {
    if (parts.empty()) fail(ErrorCode::no_information, "no source available for fusion");
    Eigen::Vector2d prec = Eigen::Vector2d::Zero();
    Eigen::Vector2d num = Eigen::Vector2d::Zero();
    for (const auto& g : parts) {
        if (!(g.var.minCoeff() > 0.0)) fail(ErrorCode::invalid_input, "fusion input variance must be positive");
        const Eigen::Vector2d p = g.var.cwiseInverse();
        prec += p;
        num += p.cwiseProduct(g.mean.vec());
    }
    FusedStatistic fs;
    const Eigen::Vector2d var = prec.cwiseInverse();
    fs.mu = LocalPoint::from(var.cwiseProduct(num));
    fs.sigma = var.cwiseSqrt();
    fs.sources = static_cast<int>(parts.size());
    return fs;
}

using Feature = std::array<double, 4>;

inline Feature feature_vector(const FusedStatistic& fs, const LocalPoint& p0) {
    return {fs.sigma.x(), fs.sigma.y(), fs.mu.east - p0.east, fs.mu.north - p0.north};
}

} // namespace pads
