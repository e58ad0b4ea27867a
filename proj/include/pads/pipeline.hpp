#pragma once

// Per-epoch detection loop. For every source: fit the window (optionally
// motion-constrained), turn the residuals into a Gaussian interval, fuse the
// source's recent intervals over time, multiply the sources together, score
// the fused statistic against the current GNSS fix with Loda, and feed the
// decision back into the window (a flagged GNSS fix never enters it).

#include "pads/baselines.hpp"
#include "pads/config.hpp"
#include "pads/errors.hpp"
#include "pads/fusion.hpp"
#include "pads/gp_uncertainty.hpp"
#include "pads/loda.hpp"
#include "pads/log.hpp"
#include "pads/metrics.hpp"
#include "pads/motion_regression.hpp"
#include "pads/trace_model.hpp"

#include <Eigen/Dense>

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pads {

/// N: no motion constraints; O: GNSS only, with constraints; A: everything.
enum class Variant { N, O, A };

inline const char* to_string(Variant v) {
    switch (v) {
    case Variant::N: return "pads-n";
    case Variant::O: return "pads-o";
    case Variant::A: return "pads-a";
    }
    return "?";
}

struct PipelineConfig {
    Variant variant = Variant::A;
    int window = 15;
    double kappa = 1.0;
    int degree = 2;
    double sigma_v = 0.1;
    double sigma_a = 0.1;
    double eps_margin = 0.45;
    GpConfig gp;
    int loda_k = 100;
    std::uint64_t loda_seed = 1;
    double train_fraction = 0.2;
    double target_fpr = 0.1;
    std::optional<double> gamma; ///< fixed operating threshold; calibrated when empty
    KfConfig kf;
    PfConfig pf;
    GlrtConfig glrt;

    RegressionConfig regression() const {
        RegressionConfig r;
        r.degree = degree;
        r.kappa = kappa;
        r.sigma_v = sigma_v;
        r.sigma_a = sigma_a;
        r.eps_margin = eps_margin;
        return r;
    }

    LodaConfig loda() const {
        LodaConfig l;
        l.k = loda_k;
        l.seed = loda_seed;
        return l;
    }

    void validate() const {
        if (window < 3) fail(ErrorCode::config, "field 'window': must be >= 3");
        regression().validate();
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail(ErrorCode::config, "field 'train_fraction': must be in (0,1)");
        if (!(target_fpr >= 0.0 && target_fpr <= 1.0)) fail(ErrorCode::config, "field 'target_fpr': must be in [0,1]");
        if (loda_k < 1) fail(ErrorCode::config, "field 'loda.k': must be >= 1");
        if (!(gp.var_min > 0.0)) fail(ErrorCode::config, "field 'gp.var_min': must be > 0");
        if (!(gp.nugget_rel >= 0.0)) fail(ErrorCode::config, "field 'gp.nugget_rel': must be >= 0");
    }
};

inline nlohmann::json to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["window"] = c.window;
    j["kappa"] = c.kappa;
    j["degree"] = c.degree;
    j["sigma_v"] = c.sigma_v;
    j["sigma_a"] = c.sigma_a;
    j["eps_margin"] = c.eps_margin;
    j["gp"] = {{"kernel", to_string(c.gp.kind)},
               {"length_scale", c.gp.length_scale},
               {"nugget_rel", c.gp.nugget_rel},
               {"var_min", c.gp.var_min}};
    j["loda"] = {{"k", c.loda_k}, {"seed", c.loda_seed}};
    j["train_fraction"] = c.train_fraction;
    j["target_fpr"] = c.target_fpr;
    j["gamma"] = c.gamma ? nlohmann::json(*c.gamma) : nlohmann::json(nullptr);
    j["kf"] = {{"accel_std", c.kf.accel_std}, {"meas_std", c.kf.meas_std}};
    j["pf"] = {{"particles", c.pf.particles},
               {"jitter_std", c.pf.jitter_std},
               {"meas_std", c.pf.meas_std},
               {"init_spread", c.pf.init_spread},
               {"seed", c.pf.seed}};
    j["glrt"] = {{"net_std", c.glrt.net_std}, {"gnss_std", c.glrt.gnss_std}};
    return j;
}

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig c = {}) {
    using config::ObjectReader;
    ObjectReader r(j, "");
    r.read("window", c.window);
    r.read("kappa", c.kappa);
    r.read("degree", c.degree);
    r.read("sigma_v", c.sigma_v);
    r.read("sigma_a", c.sigma_a);
    r.read("eps_margin", c.eps_margin);
    if (r.has("gp")) {
        auto g = r.child("gp");
        if (g.has("kernel")) {
            std::string k;
            g.read("kernel", k);
            if (k == "squared_exponential") c.gp.kind = KernelKind::squared_exponential;
            else if (k == "linear") c.gp.kind = KernelKind::linear;
            else if (k == "polynomial") c.gp.kind = KernelKind::polynomial;
            else fail(ErrorCode::config, "field 'gp.kernel': unknown kernel '" + k + "'");
        }
        g.read("length_scale", c.gp.length_scale);
        g.read("nugget_rel", c.gp.nugget_rel);
        g.read("var_min", c.gp.var_min);
        g.finish();
    }
    if (r.has("loda")) {
        auto l = r.child("loda");
        l.read("k", c.loda_k);
        l.read("seed", c.loda_seed);
        l.finish();
    }
    r.read("train_fraction", c.train_fraction);
    r.read("target_fpr", c.target_fpr);
    if (r.has("gamma")) {
        const auto& g = r.raw("gamma");
        if (g.is_null()) c.gamma.reset();
        else c.gamma = ObjectReader::convert<double>(g, "gamma");
    }
    if (r.has("kf")) {
        auto k = r.child("kf");
        k.read("accel_std", c.kf.accel_std);
        k.read("meas_std", c.kf.meas_std);
        k.finish();
    }
    if (r.has("pf")) {
        auto p = r.child("pf");
        p.read("particles", c.pf.particles);
        p.read("jitter_std", c.pf.jitter_std);
        p.read("meas_std", c.pf.meas_std);
        p.read("init_spread", c.pf.init_spread);
        p.read("seed", c.pf.seed);
        p.finish();
    }
    if (r.has("glrt")) {
        auto g = r.child("glrt");
        g.read("net_std", c.glrt.net_std);
        g.read("gnss_std", c.glrt.gnss_std);
        g.finish();
        if (c.glrt.net_std.empty()) fail(ErrorCode::config, "field 'glrt.net_std': needs at least one value");
    }
    r.finish();
    c.validate();
    return c;
}

/// What the detector reports for one epoch.
struct EpochDecision {
    Hypothesis decision = Hypothesis::h0;
    double score = 0.0;
    LocalPoint recovered;
    Feature feature{};
    bool has_feature = false; ///< false: no information (decision forced to H0)
    int sources = 0;
};

class Detector {
public:
    Detector(const PipelineConfig& cfg, int M) : cfg_(cfg), reg_(cfg.regression()), buf_(cfg.window, M), M_(M) {
        cfg_.validate();
        src_.resize(static_cast<std::size_t>(M + 1));
    }

    /// Processes one epoch. With `model == nullptr` the score is 0 and the
    /// decision H0 (used while collecting training features).
    EpochDecision step(const EpochData& e, const LodaModel* model, double gamma) {
        std::vector<Gaussian2> parts;
        const bool constrained = cfg_.variant != Variant::N;
        update_odometry(e.t);
        for (int m = 0; m <= M_; ++m) {
            if (cfg_.variant == Variant::O && m != kGnss) continue;
            auto& st = src_[static_cast<std::size_t>(m)];
            const auto window = buf_.window_view(m);
            std::optional<ConfidenceInterval> ci;
            std::optional<PolyCoeffs> coeffs;
            std::optional<LocalPoint> anchor = constrained ? anchor_at(st, e.t) : std::nullopt;
            if (constrained && !anchor && !st.last_fit_t && static_cast<int>(window.size()) >= reg_.degree + 2) {
                // Start the track at the odometry-aligned mean of the window.
                Eigen::Vector2d acc = Eigen::Vector2d::Zero();
                for (const auto& s : window) acc += s.pos.vec() + odometry_shift(s.t, e.t);
                acc /= static_cast<double>(window.size());
                anchor = LocalPoint{acc.x(), acc.y()};
            }
            if (static_cast<int>(window.size()) >= reg_.degree + 2) {
                coeffs = fit_source(window, anchor, e.t);
                if (coeffs) {
                    const LocalPoint p_hat = evaluate(*coeffs, e.t);
                    try {
                        ci = interval_from_residuals(residuals_for(st, window, *coeffs, e.t), p_hat, e.t, cfg_.window,
                                                     cfg_.gp);
                    } catch (const Error& err) {
                        log::warn(std::string("source ") + std::to_string(m) + " interval skipped: " + err.what());
                    }
                }
            }
            if (ci) {
                st.last_fit_t = e.t;
                st.last_var = ci->var;
            } else if (anchor && st.last_fit_t) {
                // Not enough samples: carry the motion-propagated track, sized
                // by how well it has been predicting the incoming fixes.
                if (st.residuals.size() >= kMinPredictionResiduals) {
                    try {
                        const std::vector<Residual> res(st.residuals.begin(), st.residuals.end());
                        ci = interval_from_residuals(res, *anchor, e.t, cfg_.window, cfg_.gp);
                    } catch (const Error&) {
                    }
                }
                if (!ci) {
                    const double drift = cfg_.sigma_v * (e.t - *st.last_fit_t);
                    ci = confidence_interval(*anchor, st.last_var.array() + drift * drift, cfg_.gp.var_min, e.t);
                }
            }
            if (ci) {
                st.intervals.push_back(*ci);
                while (!st.intervals.empty() && st.intervals.front().t <= e.t - cfg_.window) st.intervals.pop_front();
            }
            if (!st.intervals.empty()) {
                const std::vector<ConfidenceInterval> iv(st.intervals.begin(), st.intervals.end());
                const auto w = fusion_weights(iv, e.t, cfg_.kappa);
                if (auto g = temporal_fuse(iv, w)) parts.push_back(*g);
            }
            if (constrained) advance_anchor(st, e, ci ? std::optional<LocalPoint>(ci->mean) : anchor, coeffs);
            st.predicted = ci ? std::optional<LocalPoint>(ci->mean) : std::nullopt;
        }

        EpochDecision d;
        d.sources = static_cast<int>(parts.size());
        const auto& p0 = e.positions.empty() ? std::optional<LocalPoint>{} : e.positions[kGnss];
        if (!parts.empty()) {
            const auto fs = product_fuse(parts);
            d.recovered = fs.mu;
            if (p0) {
                d.feature = feature_vector(fs, *p0);
                d.has_feature = true;
            }
        } else if (p0) {
            d.recovered = *p0;
        }
        if (d.has_feature && model) {
            d.score = score(*model, d.feature);
            d.decision = decide(d.score, gamma);
        }
        buf_.push_epoch(e, d.decision);
        record_residuals(e);
        advance_odometry(e);
        return d;
    }

    const WindowBuffer& buffer() const { return buf_; }

private:
    struct SourceState {
        std::optional<std::pair<double, LocalPoint>> next;  ///< p_tilde for the following epoch
        std::deque<ConfidenceInterval> intervals;
        std::optional<double> last_fit_t;
        std::optional<LocalPoint> predicted;                ///< p_hat at the current epoch
        std::deque<Residual> residuals;                     ///< p_hat - p at past epochs, predicted before p was seen
        Eigen::Vector2d last_var = Eigen::Vector2d::Ones();
        Eigen::Vector3d velocity = Eigen::Vector3d::Zero(); ///< world frame, fallback when v is missing
    };

    /// Residual series for the interval: the source's own one-step
    /// prediction errors over the window, or, until enough of those exist,
    /// the fit residuals of the samples that carry kernel weight.
    std::vector<Residual> residuals_for(const SourceState& st, const std::vector<PositionSample>& window,
                                        const PolyCoeffs& coeffs, double t) const {
        if (st.residuals.size() >= kMinPredictionResiduals) return {st.residuals.begin(), st.residuals.end()};
        const auto sw = detail::relative_weights(window, cfg_.kappa, t);
        std::vector<Residual> res;
        for (std::size_t i = 0; i < window.size(); ++i) {
            if (sw[i] * sw[i] < detail::kMinRelativeWeight) continue;
            res.push_back({window[i].t, evaluate(coeffs, window[i].t).vec() - window[i].pos.vec()});
        }
        return res;
    }

    void record_residuals(const EpochData& e) {
        for (int m = 0; m <= M_ && static_cast<std::size_t>(m) < e.positions.size(); ++m) {
            auto& st = src_[static_cast<std::size_t>(m)];
            const auto& p = e.positions[static_cast<std::size_t>(m)];
            if (st.predicted && p) {
                st.residuals.push_back({e.t, st.predicted->vec() - p->vec()});
            }
            while (!st.residuals.empty() && st.residuals.front().t <= e.t - cfg_.window) st.residuals.pop_front();
        }
    }

    static constexpr std::size_t kMinPredictionResiduals = 3;

    // Odometry: positions integrated from the motion samples alone, used only
    // through differences between epochs.
    void update_odometry(double t) {
        if (odo_next_ && std::abs(odo_next_->first - t) < 1e-9) {
            odo_.push_back(*odo_next_);
        } else {
            odo_.clear();
            odo_.push_back({t, LocalPoint{}});
        }
        odo_next_.reset();
        while (odo_.size() > static_cast<std::size_t>(cfg_.window) + 2) odo_.pop_front();
    }

    void advance_odometry(const EpochData& e) {
        if (!e.motion || odo_.empty()) return;
        Eigen::Vector3d fallback = Eigen::Vector3d::Zero();
        if (!src_.empty()) fallback = src_[static_cast<std::size_t>(kGnss)].velocity;
        odo_next_ = {e.t + dt_, dead_reckon(odo_.back().second, *e.motion, dt_, fallback)};
    }

    Eigen::Vector2d odometry_shift(double from, double to) const {
        const LocalPoint* a = nullptr;
        const LocalPoint* b = nullptr;
        for (const auto& [t, p] : odo_) {
            if (std::abs(t - from) < 1e-9) a = &p;
            if (std::abs(t - to) < 1e-9) b = &p;
        }
        if (!a || !b) return Eigen::Vector2d::Zero();
        return b->vec() - a->vec();
    }

    /// p_tilde for epoch t, if the previous epoch propagated one to it.
    static std::optional<LocalPoint> anchor_at(SourceState& st, double t) {
        std::optional<LocalPoint> a;
        if (st.next && std::abs(st.next->first - t) < 1e-9) a = st.next->second;
        st.next.reset();
        return a;
    }

    std::optional<PolyCoeffs> fit_source(const std::vector<PositionSample>& window,
                                         const std::optional<LocalPoint>& anchor, double t) {
        std::vector<MotionConstraint> cons;
        if (anchor) cons.push_back({t, *anchor, reg_.epsilon(dt_)});
        try {
            return fit(window, cons, reg_, t);
        } catch (const Error& err) {
            log::info(std::string("fit skipped: ") + err.what());
            return std::nullopt;
        }
    }

    void advance_anchor(SourceState& st, const EpochData& e, const std::optional<LocalPoint>& base,
                        const std::optional<PolyCoeffs>& coeffs) {
        if (coeffs && coeffs->n >= 1) st.velocity = Eigen::Vector3d(coeffs->W(0, 1), coeffs->W(1, 1), 0.0);
        if (e.motion && e.motion->v_available) {
            const Eigen::Vector2d v = body_to_horizontal(e.motion->rpy, e.motion->v);
            st.velocity = Eigen::Vector3d(v.x(), v.y(), 0.0);
        }
        if (!base) return;
        const double dt = dt_;
        LocalPoint next;
        if (e.motion) {
            next = dead_reckon(*base, *e.motion, dt, st.velocity);
        } else {
            next = {base->east + st.velocity.x() * dt, base->north + st.velocity.y() * dt};
        }
        st.next = {e.t + dt, next};
    }

public:
    /// Epoch spacing used to propagate the motion track (default 1 s).
    void set_epoch_spacing(double dt) {
        if (!(dt > 0.0)) fail(ErrorCode::invalid_step, "epoch spacing must be positive");
        dt_ = dt;
    }

private:
    PipelineConfig cfg_;
    RegressionConfig reg_;
    WindowBuffer buf_;
    int M_;
    double dt_ = 1.0;
    std::vector<SourceState> src_;
    std::deque<std::pair<double, LocalPoint>> odo_;
    std::optional<std::pair<double, LocalPoint>> odo_next_;
};

// --- trace-level driver -----------------------------------------------------------------

inline double epoch_spacing(const std::vector<EpochData>& epochs) {
    return epochs.size() > 1 ? epochs[1].t - epochs[0].t : 1.0;
}

/// Index one past the last training epoch: the first `fraction` of the span
/// before the first ground-truth attacked epoch (the whole trace if benign).
inline std::size_t training_end(const std::vector<EpochData>& epochs, double fraction) {
    std::size_t first = epochs.size();
    for (std::size_t k = 0; k < epochs.size(); ++k) {
        if (epochs[k].attacked) {
            first = k;
            break;
        }
    }
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(first)));
}

/// Runs the detector without a model over [0, end) and trains Loda on the
/// features of epochs whose window is already full.
inline LodaModel train_detector(const std::vector<EpochData>& epochs, int M, const PipelineConfig& cfg, std::size_t end) {
    Detector det(cfg, M);
    det.set_epoch_spacing(epoch_spacing(epochs));
    std::vector<Feature> feats;
    for (std::size_t k = 0; k < end && k < epochs.size(); ++k) {
        const auto d = det.step(epochs[k], nullptr, std::numeric_limits<double>::infinity());
        if (d.has_feature && k >= static_cast<std::size_t>(cfg.window)) feats.push_back(d.feature);
    }
    return train(feats, cfg.loda());
}

/// Runs the trained detector over a trace. Epochs before `armed_from` (the
/// training span) are processed without scoring.
inline std::vector<Outcome> run_detector(const std::vector<EpochData>& epochs, int M, const PipelineConfig& cfg,
                                         const LodaModel& model, double gamma, std::size_t armed_from = 0) {
    Detector det(cfg, M);
    det.set_epoch_spacing(epoch_spacing(epochs));
    std::vector<Outcome> out;
    out.reserve(epochs.size());
    for (std::size_t k = 0; k < epochs.size(); ++k) {
        const auto& e = epochs[k];
        const auto d = det.step(e, k >= armed_from ? &model : nullptr, gamma);
        out.push_back({e.t, e.attacked, d.decision == Hypothesis::h1, d.score, d.recovered, e.truth});
    }
    return out;
}

} // namespace pads
