#pragma once

// Comparison detectors: RSS weighted centroid (SOP), loosely coupled Kalman
// filter, particle filter and a summed-Mahalanobis GLRT. Each one turns a
// trace into a per-epoch score; thresholds are chosen by the caller.

#include "pads/errors.hpp"
#include "pads/geo_frames.hpp"
#include "pads/log.hpp"
#include "pads/motion_regression.hpp"
#include "pads/trace_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pads {

/// Per-epoch baseline output. `score` is NaN-free; epochs where the method has
/// nothing to say carry score 0.
struct BaselineEpoch {
    double score = 0.0;
    LocalPoint estimate;
    bool valid = false;
};

// --- SOP weighted centroid -------------------------------------------------

struct StationObservation {
    std::vector<LocalPoint> stations;
    std::vector<double> rss_dbm;
};

/// Centroid weighted by linear received power 10^(rss/10).
inline LocalPoint sop_centroid(const StationObservation& obs) {
    if (obs.stations.empty() || obs.stations.size() != obs.rss_dbm.size()) {
        fail(ErrorCode::invalid_input, "SOP needs one RSS value per station and at least one station");
    }
    // Scale by the strongest reading so that weights cannot all underflow.
    const double ref = *std::max_element(obs.rss_dbm.begin(), obs.rss_dbm.end());
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    double wsum = 0.0;
    for (std::size_t j = 0; j < obs.stations.size(); ++j) {
        const double w = std::pow(10.0, (obs.rss_dbm[j] - ref) / 10.0);
        acc += w * obs.stations[j].vec();
        wsum += w;
    }
    if (!(wsum > 0.0) || !std::isfinite(wsum)) fail(ErrorCode::degenerate, "all SOP weights are zero");
    return LocalPoint::from(acc / wsum);
}

inline Hypothesis sop_detect(double distance, double threshold) {
    return distance > threshold ? Hypothesis::h1 : Hypothesis::h0;
}

// --- Kalman filter -----------------------------------------------------------

struct FilterState {
    Eigen::Vector4d x = Eigen::Vector4d::Zero(); ///< e, n, ve, vn
    Eigen::Matrix4d P = Eigen::Matrix4d::Identity() * 100.0;
};

struct KfConfig {
    double accel_std = 0.5; ///< process noise, m/s^2
    double meas_std = 2.5;  ///< GNSS noise, m
};

struct KfStep {
    FilterState state;
    Eigen::Vector2d innovation = Eigen::Vector2d::Zero();
    bool updated = false;
};

/// Predict with world-frame acceleration as the control input, then update
/// with the GNSS position when one is present.
inline KfStep kf_step(const FilterState& s, const std::optional<MotionSample>& imu,
                      const std::optional<LocalPoint>& gnss, double dt, const KfConfig& cfg) {
    if (!(dt > 0.0)) fail(ErrorCode::invalid_step, "KF step must be positive");
    Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
    F(0, 2) = F(1, 3) = dt;
    Eigen::Vector2d u = Eigen::Vector2d::Zero();
    if (imu && imu->a_available) u = body_to_horizontal(imu->rpy, imu->a);
    Eigen::Matrix<double, 4, 2> B;
    B << 0.5 * dt * dt, 0, 0, 0.5 * dt * dt, dt, 0, 0, dt;
    const double q = cfg.accel_std * cfg.accel_std;
    Eigen::Matrix4d Q = (B * B.transpose()) * q;

    KfStep out;
    out.state.x = F * s.x + B * u;
    out.state.P = F * s.P * F.transpose() + Q;
    if (gnss) {
        Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
        H(0, 0) = H(1, 1) = 1.0;
        const Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * cfg.meas_std * cfg.meas_std;
        out.innovation = gnss->vec() - H * out.state.x;
        const Eigen::Matrix2d S = H * out.state.P * H.transpose() + R;
        const Eigen::Matrix<double, 4, 2> K = out.state.P * H.transpose() * S.inverse();
        out.state.x += K * out.innovation;
        // Joseph form keeps P symmetric PSD.
        const Eigen::Matrix4d IKH = Eigen::Matrix4d::Identity() - K * H;
        out.state.P = IKH * out.state.P * IKH.transpose() + K * R * K.transpose();
        out.updated = true;
    }
    out.state.P = 0.5 * (out.state.P + out.state.P.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(out.state.P);
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, es.eigenvalues().maxCoeff())) {
        fail(ErrorCode::numerical, "KF covariance lost positive semi-definiteness");
    }
    return out;
}

inline Hypothesis kf_detect(const Eigen::Vector2d& innovation, double threshold) {
    return innovation.norm() > threshold ? Hypothesis::h1 : Hypothesis::h0;
}

inline std::vector<BaselineEpoch> run_kf(std::span<const EpochData> epochs, const KfConfig& cfg) {
    std::vector<BaselineEpoch> out(epochs.size());
    FilterState s;
    bool init = false;
    for (std::size_t k = 0; k < epochs.size(); ++k) {
        const auto& e = epochs[k];
        const auto& g = e.positions.empty() ? std::optional<LocalPoint>{} : e.positions[kGnss];
        if (!init) {
            if (g) {
                s.x << g->east, g->north, 0.0, 0.0;
                s.P = Eigen::Matrix4d::Identity() * cfg.meas_std * cfg.meas_std;
                s.P(2, 2) = s.P(3, 3) = 25.0;
                if (e.motion && e.motion->v_available) {
                    const auto v = body_to_horizontal(e.motion->rpy, e.motion->v);
                    s.x(2) = v.x();
                    s.x(3) = v.y();
                }
                init = true;
                out[k] = {0.0, *g, true};
            }
            continue;
        }
        const auto step = kf_step(s, epochs[k - 1].motion, g, e.t - epochs[k - 1].t, cfg);
        s = step.state;
        out[k] = {step.updated ? step.innovation.norm() : 0.0, LocalPoint{s.x(0), s.x(1)}, step.updated};
    }
    return out;
}

// --- Particle filter ----------------------------------------------------------

struct PfConfig {
    int particles = 500;
    double jitter_std = 0.5; ///< per axis per step, m
    double meas_std = 2.5;   ///< GNSS likelihood width, m
    double init_spread = 5.0;
    std::uint64_t seed = 7;
};

struct ParticleSet {
    std::vector<Eigen::Vector2d> pos;
    std::vector<double> weight;

    Eigen::Vector2d estimate() const {
        Eigen::Vector2d m = Eigen::Vector2d::Zero();
        for (std::size_t i = 0; i < pos.size(); ++i) m += weight[i] * pos[i];
        return m;
    }

    double ess() const {
        double s = 0.0;
        for (double w : weight) s += w * w;
        return s > 0.0 ? 1.0 / s : 0.0;
    }
};

inline ParticleSet pf_init(const LocalPoint& around, const PfConfig& cfg, std::mt19937_64& rng) {
    if (cfg.particles < 100) fail(ErrorCode::config, "particle filter needs at least 100 particles");
    std::uniform_real_distribution<double> u(-cfg.init_spread, cfg.init_spread);
    ParticleSet ps;
    ps.pos.resize(static_cast<std::size_t>(cfg.particles));
    ps.weight.assign(ps.pos.size(), 1.0 / cfg.particles);
    for (auto& p : ps.pos) {
        const double de = u(rng);
        const double dn = u(rng);
        p = around.vec() + Eigen::Vector2d(de, dn);
    }
    return ps;
}

inline void systematic_resample(ParticleSet& ps, std::mt19937_64& rng) {
    const auto n = ps.pos.size();
    std::uniform_real_distribution<double> u(0.0, 1.0 / static_cast<double>(n));
    const double start = u(rng);
    std::vector<Eigen::Vector2d> next(n);
    double cum = ps.weight[0];
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = start + static_cast<double>(i) / static_cast<double>(n);
        while (target > cum && j + 1 < n) cum += ps.weight[++j];
        next[i] = ps.pos[j];
    }
    ps.pos = std::move(next);
    ps.weight.assign(n, 1.0 / static_cast<double>(n));
}

/// Propagates by dead reckoning plus jitter and reweights by the GNSS fix.
inline void pf_step(ParticleSet& ps, const std::optional<MotionSample>& imu, const std::optional<LocalPoint>& gnss,
                    double dt, const PfConfig& cfg, std::mt19937_64& rng) {
    if (!(dt > 0.0)) fail(ErrorCode::invalid_step, "PF step must be positive");
    std::normal_distribution<double> jitter(0.0, cfg.jitter_std);
    for (auto& p : ps.pos) {
        LocalPoint q = LocalPoint::from(p);
        if (imu) q = dead_reckon(q, *imu, dt);
        const double je = jitter(rng);
        const double jn = jitter(rng);
        p = q.vec() + Eigen::Vector2d(je, jn);
    }
    if (!gnss) return;
    const LocalPoint prior = LocalPoint::from(ps.estimate());
    const double inv2s2 = 0.5 / (cfg.meas_std * cfg.meas_std);
    // Log-domain weights, shifted by the best particle.
    std::vector<double> lw(ps.pos.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ps.pos.size(); ++i) {
        lw[i] = std::log(ps.weight[i]) - (ps.pos[i] - gnss->vec()).squaredNorm() * inv2s2;
        best = std::max(best, lw[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < ps.pos.size(); ++i) {
        ps.weight[i] = std::exp(lw[i] - best);
        sum += ps.weight[i];
    }
    // Likelihoods that all underflow in linear space count as a collapse.
    if (!(sum > 0.0) || !std::isfinite(sum) || best < -745.0) {
        log::info("particle weights collapsed; reinitialising");
        ps = pf_init(prior, cfg, rng);
        return;
    }
    for (auto& w : ps.weight) w /= sum;
    if (ps.ess() < 0.5 * static_cast<double>(ps.pos.size())) systematic_resample(ps, rng);
}

inline std::vector<BaselineEpoch> run_pf(std::span<const EpochData> epochs, const PfConfig& cfg) {
    std::vector<BaselineEpoch> out(epochs.size());
    std::mt19937_64 rng(cfg.seed);
    std::optional<ParticleSet> ps;
    for (std::size_t k = 0; k < epochs.size(); ++k) {
        const auto& e = epochs[k];
        const auto& g = e.positions.empty() ? std::optional<LocalPoint>{} : e.positions[kGnss];
        if (!ps) {
            if (g) {
                ps = pf_init(*g, cfg, rng);
                out[k] = {0.0, *g, true};
            }
            continue;
        }
        pf_step(*ps, epochs[k - 1].motion, g, e.t - epochs[k - 1].t, cfg, rng);
        const auto est = LocalPoint::from(ps->estimate());
        out[k] = {g ? distance(est, *g) : 0.0, est, g.has_value()};
    }
    return out;
}

// --- GLRT ---------------------------------------------------------------------

/// log Lambda_m = -1/2 (p0 - p_m)^T Sigma_m^{-1} (p0 - p_m), summed over sources.
/// Sources with a singular covariance are skipped.
inline double glrt_combine(const LocalPoint& p0, std::span<const LocalPoint> others,
                           std::span<const Eigen::Matrix2d> covs) {
    if (others.size() != covs.size()) fail(ErrorCode::invalid_input, "GLRT positions/covariances length mismatch");
    double sum = 0.0;
    for (std::size_t m = 0; m < others.size(); ++m) {
        Eigen::FullPivLU<Eigen::Matrix2d> lu(covs[m]);
        if (!lu.isInvertible()) {
            log::warn("GLRT: singular covariance for source " + std::to_string(m + 1) + ", skipped");
            continue;
        }
        const Eigen::Vector2d d = p0.vec() - others[m].vec();
        sum += -0.5 * d.dot(lu.solve(d));
    }
    return sum;
}

/// Chi-square CDF for an even number of degrees of freedom 2j.
inline double chi2_cdf_even(double x, int dof) {
    if (dof <= 0 || dof % 2 != 0) fail(ErrorCode::invalid_input, "chi2_cdf_even needs positive even dof");
    if (x <= 0.0) return 0.0;
    const double h = 0.5 * x;
    double term = 1.0, s = 1.0;
    for (int i = 1; i < dof / 2; ++i) {
        term *= h / i;
        s += term;
    }
    return 1.0 - std::exp(-h) * s;
}

struct GlrtConfig {
    std::vector<double> net_std{33.0, 9.0}; ///< per network source, m
    double gnss_std = 2.5;
};

/// Score = chi-square CDF of -2 log Lambda at 2J dof; H1 when above 1 - alpha.
inline std::vector<BaselineEpoch> run_glrt(std::span<const EpochData> epochs, const GlrtConfig& cfg) {
    std::vector<BaselineEpoch> out(epochs.size());
    for (std::size_t k = 0; k < epochs.size(); ++k) {
        const auto& e = epochs[k];
        if (e.positions.empty() || !e.positions[kGnss]) continue;
        std::vector<LocalPoint> others;
        std::vector<Eigen::Matrix2d> covs;
        for (int m = 1; m < e.sources(); ++m) {
            if (!e.positions[static_cast<std::size_t>(m)]) continue;
            const auto idx = static_cast<std::size_t>(m - 1);
            const double sd = idx < cfg.net_std.size() ? cfg.net_std[idx] : cfg.net_std.back();
            others.push_back(*e.positions[static_cast<std::size_t>(m)]);
            covs.push_back(Eigen::Matrix2d::Identity() * (sd * sd + cfg.gnss_std * cfg.gnss_std));
        }
        if (others.empty()) continue;
        const double stat = -2.0 * glrt_combine(*e.positions[kGnss], others, covs);
        out[k] = {chi2_cdf_even(stat, 2 * static_cast<int>(others.size())), *e.positions[kGnss], true};
    }
    return out;
}

// --- SOP over a trace -------------------------------------------------------------

inline std::vector<BaselineEpoch> run_sop(const Trace& trace, std::span<const EpochData> epochs) {
    if (!trace.has_stations()) fail(ErrorCode::unsupported, "SOP needs station and RSS records in the trace");
    std::vector<BaselineEpoch> out(epochs.size());
    if (epochs.empty()) return out;
    const double dt = epochs.size() > 1 ? epochs[1].t - epochs[0].t : 1.0;
    std::vector<StationObservation> obs(epochs.size());
    for (const auto& r : trace.rss) {
        const double rel = (r.t - epochs.front().t) / dt;
        const auto k = static_cast<long>(std::llround(rel));
        if (k < 0 || k >= static_cast<long>(epochs.size()) || std::abs(rel - static_cast<double>(k)) > 0.5) continue;
        auto it = std::find_if(trace.stations.begin(), trace.stations.end(), [&](const Station& s) { return s.id == r.station; });
        if (it == trace.stations.end()) continue;
        obs[static_cast<std::size_t>(k)].stations.push_back(it->pos);
        obs[static_cast<std::size_t>(k)].rss_dbm.push_back(r.dbm);
    }
    for (std::size_t k = 0; k < epochs.size(); ++k) {
        const auto& e = epochs[k];
        if (obs[k].stations.empty() || e.positions.empty() || !e.positions[kGnss]) continue;
        const auto c = sop_centroid(obs[k]);
        out[k] = {distance(c, *e.positions[kGnss]), c, true};
    }
    return out;
}

} // namespace pads
