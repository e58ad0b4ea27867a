#pragma once

// Motion-assisted local polynomial regression.
//
// For one source the smoothed track is p_hat(t) = W [1, tau, ..., tau^n]^T with
// tau = t - t_ref. W minimises the kernel-weighted squared error
//
//   f(W) = sum_i K_loc(t_i - t) |W b(t_i) - p_i|^2,   K_loc(x) = exp(-kappa x^2)
//
// subject to per-axis boxes |W b(t_j) - p_tilde_j| <= eps_j around positions
// propagated from onboard motion data. The kernel never mixes axes, so the
// problem splits into two independent 1-D constrained least-squares fits.

#include "pads/errors.hpp"
#include "pads/geo_frames.hpp"
#include "pads/log.hpp"
#include "pads/qp.hpp"
#include "pads/trace_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pads {

inline double loc_kernel(double offset, double kappa) { return std::exp(-kappa * offset * offset); }

struct RegressionConfig {
    int degree = 2;
    double kappa = 1.0;      ///< kernel parameter, 1/s^2
    double sigma_v = 0.1;    ///< velocity noise scale, m/s
    double sigma_a = 0.1;    ///< acceleration noise scale, m/s^2
    double eps_margin = 1.0; ///< constant part of the tolerance, m
    bool relax_once = true;  ///< retry an infeasible fit once with doubled tolerances

    /// Default per-axis tolerance for a position propagated over `dt` seconds.
    Eigen::Vector2d epsilon(double dt) const {
        const double e = sigma_v * dt + 0.5 * sigma_a * dt * dt + eps_margin;
        return {e, e};
    }

    void validate() const {
        if (degree < 1 || degree > 3) fail(ErrorCode::config, "polynomial degree must be in [1,3]");
        if (!(kappa >= 0.0)) fail(ErrorCode::config, "kappa must be >= 0");
        if (!(sigma_v >= 0.0) || !(sigma_a >= 0.0) || !(eps_margin > 0.0)) {
            fail(ErrorCode::config, "tolerance parameters must be positive");
        }
    }
};

/// |p_hat(t) - center| <= eps, per axis.
struct MotionConstraint {
    double t = 0.0;
    LocalPoint center;
    Eigen::Vector2d eps = Eigen::Vector2d::Constant(1.0);
};

struct PolyCoeffs {
    Eigen::Matrix<double, 2, Eigen::Dynamic> W; ///< row 0 east, row 1 north
    int n = 0;
    double t_ref = 0.0;
};

inline Eigen::VectorXd poly_basis(int n, double tau) {
    Eigen::VectorXd b(n + 1);
    double p = 1.0;
    for (int k = 0; k <= n; ++k) {
        b(k) = p;
        p *= tau;
    }
    return b;
}

inline LocalPoint evaluate(const PolyCoeffs& c, double t) {
    return LocalPoint::from(c.W * poly_basis(c.n, t - c.t_ref));
}

/// f_P(W) for samples relative to target time t.
inline double objective(const PolyCoeffs& c, std::span<const PositionSample> samples, double kappa, double t) {
    double f = 0.0;
    for (const auto& s : samples) {
        const Eigen::Vector2d r = c.W * poly_basis(c.n, s.t - c.t_ref) - s.pos.vec();
        f += loc_kernel(s.t - t, kappa) * r.squaredNorm();
    }
    return f;
}

/// Hessian of f_P with respect to vec(W) (east coefficients first), i.e.
/// 2 sum_i K_i (b_i b_i^T) (x) I_2 in axis-major ordering.
inline Eigen::MatrixXd normal_matrix(std::span<const PositionSample> samples, int n, double kappa, double t,
                                     double t_ref) {
    const int p = n + 1;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(p, p);
    for (const auto& s : samples) {
        const Eigen::VectorXd b = poly_basis(n, s.t - t_ref);
        B += loc_kernel(s.t - t, kappa) * b * b.transpose();
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * p, 2 * p);
    H.topLeftCorner(p, p) = 2.0 * B;
    H.bottomRightCorner(p, p) = 2.0 * B;
    return H;
}

/// Propagates `prev` over dt with body-frame motion:
///   p + R v dt + 1/2 R a dt^2   (horizontal part).
/// Without a velocity reading the world-frame `fallback_v` is used instead;
/// without an acceleration reading the motion is taken as uniform.
inline LocalPoint dead_reckon(const LocalPoint& prev, const MotionSample& motion, double dt,
                              const Eigen::Vector3d& fallback_v = Eigen::Vector3d::Zero()) {
    if (!(dt > 0.0)) fail(ErrorCode::invalid_step, "dead reckoning step must be positive");
    const Eigen::Matrix3d R = rotation(motion.rpy);
    const Eigen::Vector3d vel = motion.v_available ? Eigen::Vector3d(R * motion.v) : fallback_v;
    const Eigen::Vector3d acc = motion.a_available ? Eigen::Vector3d(R * motion.a) : Eigen::Vector3d::Zero();
    const Eigen::Vector3d step = vel * dt + 0.5 * acc * dt * dt;
    return {prev.east + step.x(), prev.north + step.y()};
}

namespace detail {

struct AxisProblem {
    Eigen::MatrixXd A;
    Eigen::MatrixXd C;
    std::vector<double> sw; ///< square roots of the relative kernel weights
    double scale = 1.0;
};

/// Samples whose weight relative to the heaviest one is below this do not
/// count towards determining the polynomial.
inline constexpr double kMinRelativeWeight = 1e-12;

/// sqrt(K_loc) per sample, normalised so the heaviest sample has weight 1
/// (the minimiser is unchanged by a common factor).
inline std::vector<double> relative_weights(std::span<const PositionSample> samples, double kappa, double t) {
    double min_sq = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) min_sq = std::min(min_sq, (s.t - t) * (s.t - t));
    std::vector<double> sw;
    sw.reserve(samples.size());
    for (const auto& s : samples) sw.push_back(std::exp(-0.5 * kappa * ((s.t - t) * (s.t - t) - min_sq)));
    return sw;
}

inline AxisProblem build_axis_problem(std::span<const PositionSample> samples,
                                      std::span<const MotionConstraint> constraints, int n, double kappa, double t,
                                      double t_ref) {
    AxisProblem prob;
    double span = 1.0;
    for (const auto& s : samples) span = std::max(span, std::abs(s.t - t_ref));
    for (const auto& c : constraints) span = std::max(span, std::abs(c.t - t_ref));
    prob.scale = span;
    const auto rows = static_cast<Eigen::Index>(samples.size());
    prob.sw = relative_weights(samples, kappa, t);
    int effective = 0;
    for (double w : prob.sw) effective += w * w >= kMinRelativeWeight;
    if (effective < n + 1) {
        fail(ErrorCode::degenerate, "only " + std::to_string(effective) + " samples carry kernel weight, degree " +
                                        std::to_string(n) + " needs " + std::to_string(n + 1));
    }
    prob.A.resize(rows, n + 1);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        prob.A.row(i) = prob.sw[static_cast<std::size_t>(i)] * poly_basis(n, (s.t - t_ref) / span).transpose();
    }
    prob.C.resize(static_cast<Eigen::Index>(constraints.size()), n + 1);
    for (std::size_t j = 0; j < constraints.size(); ++j) {
        prob.C.row(static_cast<Eigen::Index>(j)) = poly_basis(n, (constraints[j].t - t_ref) / span).transpose();
    }
    return prob;
}

} // namespace detail

/// Fits W for one source's window, predicting at target time `t` (which is
/// also the basis origin). Throws `infeasible` if the constraint boxes cannot
/// be met even after one doubling of every tolerance, and `degenerate` if the
/// window does not determine a degree-n polynomial.
inline PolyCoeffs fit(std::span<const PositionSample> samples, std::span<const MotionConstraint> constraints,
                      const RegressionConfig& cfg, double t) {
    cfg.validate();
    const int n = cfg.degree;
    if (static_cast<int>(samples.size()) < n + 2) {
        fail(ErrorCode::invalid_input, "regression needs at least " + std::to_string(n + 2) + " samples, got " +
                                           std::to_string(samples.size()));
    }
    for (const auto& c : constraints) {
        if (!(c.eps.minCoeff() > 0.0)) fail(ErrorCode::invalid_input, "constraint tolerance must be positive");
    }

    const double t_ref = t;
    const auto prob = detail::build_axis_problem(samples, constraints, n, cfg.kappa, t, t_ref);
    const auto rows = prob.A.rows();
    const auto nc = prob.C.rows();

    std::vector<MotionConstraint> working(constraints.begin(), constraints.end());
    const int attempts = cfg.relax_once ? 2 : 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        PolyCoeffs out;
        out.n = n;
        out.t_ref = t_ref;
        out.W.resize(2, n + 1);
        int bad_constraint = -1;
        int bad_axis = -1;
        for (int axis = 0; axis < 2 && bad_constraint < 0; ++axis) {
            Eigen::VectorXd y(rows), lo(nc), hi(nc);
            for (Eigen::Index i = 0; i < rows; ++i) {
                const auto& s = samples[static_cast<std::size_t>(i)];
                y(i) = prob.sw[static_cast<std::size_t>(i)] * (axis == 0 ? s.pos.east : s.pos.north);
            }
            for (Eigen::Index j = 0; j < nc; ++j) {
                const auto& c = working[static_cast<std::size_t>(j)];
                const double center = axis == 0 ? c.center.east : c.center.north;
                lo(j) = center - c.eps(axis);
                hi(j) = center + c.eps(axis);
            }
            auto res = qp::solve_box_lsq(prob.A, y, prob.C, lo, hi);
            if (auto* inf = std::get_if<qp::Infeasible>(&res)) {
                bad_constraint = inf->constraint;
                bad_axis = axis;
                break;
            }
            const auto& x = std::get<qp::BoxLsqResult>(res).x;
            double s = 1.0;
            for (int k = 0; k <= n; ++k) {
                out.W(axis, k) = x(k) / s;
                s *= prob.scale;
            }
        }
        if (bad_constraint < 0) return out;

        const auto& c = working[static_cast<std::size_t>(bad_constraint)];
        const std::string where = "motion constraint at t=" + std::to_string(c.t) + " (" +
                                  (bad_axis == 0 ? "east" : "north") + " axis)";
        if (attempt + 1 < attempts) {
            log::warn("infeasible " + where + "; relaxing tolerances x2");
            for (auto& w : working) w.eps *= 2.0;
            continue;
        }
        fail(ErrorCode::infeasible, where + " cannot be satisfied");
    }
    fail(ErrorCode::infeasible, "unreachable");
}

} // namespace pads
