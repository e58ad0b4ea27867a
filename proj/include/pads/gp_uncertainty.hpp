#pragma once

// Residual modelling with a zero-mean Gaussian process. The residual at the
// target time is estimated as x_hat = sum_i lambda_i x(t_i) with sum lambda = 1
// and lambda minimising Var[x_hat - x]; the optimum solves
//
//   [ K   1 ] [lambda]   [k*]
//   [ 1^T 0 ] [  mu  ] = [ 1]
//
// and the attained variance is the ordinary kriging variance
//   K(t,t) - 2 lambda^T k* + lambda^T K lambda.

#include "pads/errors.hpp"
#include "pads/geo_frames.hpp"
#include "pads/log.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace pads {

enum class KernelKind { squared_exponential, linear, polynomial };

inline const char* to_string(KernelKind k) {
    switch (k) {
    case KernelKind::squared_exponential: return "squared_exponential";
    case KernelKind::linear: return "linear";
    case KernelKind::polynomial: return "polynomial";
    }
    return "?";
}

/// Covariance between residuals at time offsets a and b (seconds, relative
/// to the prediction target for the non-stationary kinds).
struct GpKernel {
    KernelKind kind = KernelKind::squared_exponential;
    double length_scale = 5.0; ///< s
    double signal_var = 1.0;   ///< m^2
    double nugget = 0.0;       ///< m^2, added when a == b is the same observation

    void validate() const {
        if (!(length_scale > 0.0) || !(signal_var > 0.0) || !(nugget >= 0.0)) {
            fail(ErrorCode::invalid_input, "kernel needs length_scale > 0, signal_var > 0, nugget >= 0");
        }
    }

    double operator()(double a, double b) const {
        switch (kind) {
        case KernelKind::squared_exponential: {
            const double d = (a - b) / length_scale;
            return signal_var * std::exp(-0.5 * d * d);
        }
        case KernelKind::linear: return signal_var * (1.0 + a * b / (length_scale * length_scale));
        case KernelKind::polynomial: {
            const double s = 1.0 + a * b / (length_scale * length_scale);
            return signal_var * s * s;
        }
        }
        return 0.0;
    }
};

struct GpWeights {
    Eigen::VectorXd lambda;
    double multiplier = 0.0;
    double err_var = 0.0; ///< in the kernel's units
};

/// Variance of sum_i lambda_i x(t_i) - x(t) under the kernel.
inline double kriging_variance(std::span<const double> times, const GpKernel& k, double target,
                               const Eigen::VectorXd& lambda) {
    const auto n = static_cast<Eigen::Index>(times.size());
    double v = k(0.0, 0.0) + k.nugget;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ti = times[static_cast<std::size_t>(i)] - target;
        v -= 2.0 * lambda(i) * k(ti, 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double tj = times[static_cast<std::size_t>(j)] - target;
            v += lambda(i) * lambda(j) * (k(ti, tj) + (i == j ? k.nugget : 0.0));
        }
    }
    return v;
}

inline GpWeights gp_weights(std::span<const double> times, const GpKernel& kernel, double target) {
    kernel.validate();
    const auto n = static_cast<Eigen::Index>(times.size());
    if (n == 0) fail(ErrorCode::invalid_input, "kriging needs at least one past residual");

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Eigen::VectorXd rhs(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ti = times[static_cast<std::size_t>(i)] - target;
        for (Eigen::Index j = 0; j < n; ++j) {
            A(i, j) = kernel(ti, times[static_cast<std::size_t>(j)] - target);
        }
        A(i, i) += kernel.nugget;
        A(i, n) = 1.0;
        A(n, i) = 1.0;
        rhs(i) = kernel(ti, 0.0);
    }
    rhs(n) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(1e-13);
    if (lu.rank() < n + 1) fail(ErrorCode::degenerate, "singular kriging system (duplicate times without nugget?)");
    const Eigen::VectorXd sol = lu.solve(rhs);

    GpWeights out;
    out.lambda = sol.head(n);
    out.multiplier = sol(n);
    out.err_var = kriging_variance(times, kernel, target, out.lambda);
    if (out.err_var < 0.0) {
        if (out.err_var < -1e-9 * (kernel.signal_var + kernel.nugget)) {
            log::warn("negative kriging variance " + std::to_string(out.err_var) + " clamped to 0");
        }
        out.err_var = 0.0;
    }
    return out;
}

struct Residual {
    double t = 0.0;
    Eigen::Vector2d x = Eigen::Vector2d::Zero(); ///< p_hat - p, meters
};

inline Eigen::Vector2d estimate_residual(std::span<const Residual> series, const Eigen::VectorXd& lambda) {
    if (static_cast<Eigen::Index>(series.size()) != lambda.size()) {
        fail(ErrorCode::invalid_input, "residual series and weight vector differ in length");
    }
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < series.size(); ++i) x += lambda(static_cast<Eigen::Index>(i)) * series[i].x;
    return x;
}

/// Gaussian N(mean, diag(var)) for one source at one epoch.
struct ConfidenceInterval {
    double t = 0.0;
    LocalPoint mean;
    Eigen::Vector2d var = Eigen::Vector2d::Ones(); ///< m^2 per axis

    Eigen::Matrix2d cov() const { return var.asDiagonal(); }
};

inline constexpr double kDefaultVarFloor = 0.01;

inline ConfidenceInterval confidence_interval(const LocalPoint& p_hat, const Eigen::Vector2d& err_var,
                                              double var_min = kDefaultVarFloor, double t = 0.0) {
    if (!(err_var.minCoeff() >= 0.0)) fail(ErrorCode::invalid_input, "negative error variance");
    ConfidenceInterval ci;
    ci.t = t;
    ci.mean = p_hat;
    ci.var = err_var.cwiseMax(var_min);
    return ci;
}

struct GpConfig {
    KernelKind kind = KernelKind::squared_exponential;
    double length_scale = 0.0;  ///< seconds; 0 selects w/3
    double nugget_rel = 1.0;    ///< white-noise share of the residual variance, relative to the correlated part
    double var_min = kDefaultVarFloor;

    double resolved_length(int w) const { return length_scale > 0.0 ? length_scale : std::max(1.0, w / 3.0); }
};

/// Interval for one source: kriging weights from the residual times. The
/// sample variance of the residuals is split into a correlated part and a
/// white-noise (nugget) part in the ratio 1 : nugget_rel.
inline ConfidenceInterval interval_from_residuals(std::span<const Residual> residuals, const LocalPoint& p_hat,
                                                  double target, int w, const GpConfig& cfg) {
    if (residuals.empty()) fail(ErrorCode::invalid_input, "no residuals for interval");
    std::vector<double> times;
    times.reserve(residuals.size());
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& r : residuals) {
        times.push_back(r.t);
        mean += r.x;
    }
    const double n = static_cast<double>(residuals.size());
    mean /= n;
    Eigen::Vector2d s2 = Eigen::Vector2d::Zero();
    for (const auto& r : residuals) s2 += (r.x - mean).cwiseAbs2();
    if (residuals.size() > 1) s2 /= (n - 1.0);

    GpKernel k;
    k.kind = cfg.kind;
    k.length_scale = cfg.resolved_length(w);
    k.signal_var = 1.0;
    k.nugget = cfg.nugget_rel;
    const auto g = gp_weights(times, k, target);
    return confidence_interval(p_hat, g.err_var / (1.0 + cfg.nugget_rel) * s2, cfg.var_min, target);
}

} // namespace pads
