#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cacc/controllers.hpp"
#include "cacc/simulation.hpp"

namespace cacc {

/// Bands that define consensus: relative gap and speed bands plus absolute
/// acceleration and jerk bands.
struct ConsensusThresholds {
    double eta_r = 0.05;
    double eta_v = 0.05;
    double delta_a = 0.001;     // [m/s^2]
    double delta_jerk = 0.005;  // [m/s^3]

    void validate() const {
        if (!(eta_r > 0.0 && eta_v > 0.0 && delta_a > 0.0 && delta_jerk > 0.0))
            throw std::invalid_argument("ConsensusThresholds: all thresholds must be positive");
    }
};

struct ComfortWeights {
    double omega_1 = 1.0;  // acceleration weight
    double omega_2 = 1.0;  // jerk weight

    void validate() const {
        if (omega_1 < 0.0 || omega_2 < 0.0 || (omega_1 == 0.0 && omega_2 == 0.0))
            throw std::invalid_argument("ComfortWeights: weights must be non-negative and not both zero");
    }
};

/// same_lane: the gap must exceed the leader length from t0 on.
/// projected: the leader may start beside or behind the follower (merging);
/// the check arms once the gap first exceeds the leader length.
enum class SafetyMode { same_lane, projected };

inline std::string_view to_string(SafetyMode mode) {
    return mode == SafetyMode::same_lane ? "same_lane" : "projected";
}

inline SafetyMode parse_safety_mode(std::string_view text) {
    if (text == "same_lane") return SafetyMode::same_lane;
    if (text == "projected") return SafetyMode::projected;
    throw std::invalid_argument("unknown safety mode '" + std::string(text) + "'");
}

struct RunMetrics {
    std::optional<double> t_consensus;
    double max_accel = 0.0;
    double max_decel = 0.0;
    double max_jerk = 0.0;
    double min_jerk = 0.0;
    double omega = 0.0;
    double min_gap = std::numeric_limits<double>::infinity();
    bool safety_violated = false;
};

/// Everything consensus_reached needs from one time step.
struct ConsensusSample {
    double gap = 0.0;
    double desired_gap = 0.0;
    double leader_speed = 0.0;  // delayed
    double follower_speed = 0.0;
    double follower_accel = 0.0;
    double follower_jerk = 0.0;
};

inline bool consensus_reached(const ConsensusSample& s, const ConsensusThresholds& th) {
    // Gap-error form of the headway band.
    const bool gap_ok = std::abs(s.gap - s.desired_gap) <= th.eta_r * s.desired_gap;
    // Relative speed band degenerates for a stopped or reversing leader; use 1 m/s as the reference.
    const double speed_ref = s.leader_speed > 0.0 ? s.leader_speed : 1.0;
    const bool speed_ok = std::abs(s.leader_speed - s.follower_speed) <= th.eta_v * speed_ref;
    const bool accel_ok = std::abs(s.follower_accel) <= th.delta_a;
    const bool jerk_ok = std::abs(s.follower_jerk) <= th.delta_jerk;
    return gap_ok && speed_ok && accel_ok && jerk_ok;
}

struct SafetyResult {
    bool violated = false;
    double min_gap = std::numeric_limits<double>::infinity();
};

/// Collision check over a gap series (delayed leader minus follower position).
inline SafetyResult check_safety(std::span<const double> gaps, double leader_length, SafetyMode mode) {
    if (gaps.empty()) throw std::invalid_argument("check_safety: empty gap series");
    SafetyResult res;
    bool armed = mode == SafetyMode::same_lane;
    for (double gap : gaps) {
        if (!armed) {
            if (gap > leader_length) armed = true;
            else continue;
        }
        res.min_gap = std::min(res.min_gap, gap);
        if (gap <= leader_length) res.violated = true;
    }
    return res;
}

/// Backward-difference jerk; the first sample's jerk is zero.
inline std::vector<double> jerk_series(const Trajectory& traj) {
    if (traj.size() < 2) throw std::invalid_argument("jerk_series: need at least two samples");
    std::vector<double> jerk(traj.size(), 0.0);
    for (std::size_t i = 1; i < traj.size(); ++i)
        jerk[i] = (traj[i].follower.accel - traj[i - 1].follower.accel) / traj.dt;
    return jerk;
}

/// Earliest index i such that flags[i..i+hold_steps] are all set.
inline std::optional<std::size_t> first_sustained(const std::vector<bool>& flags, std::size_t hold_steps) {
    std::size_t run = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        run = flags[i] ? run + 1 : 0;
        if (run == hold_steps + 1) return i - hold_steps;
    }
    return std::nullopt;
}

inline double omega_score(const RunMetrics& m, const ComfortWeights& w) {
    const double accel_peak = std::max(m.max_accel, m.max_decel);
    const double jerk_peak = std::max(std::abs(m.max_jerk), std::abs(m.min_jerk));
    return w.omega_1 * accel_peak + w.omega_2 * jerk_peak;
}

/// Settings that turn a raw trajectory into RunMetrics.
struct EvaluationOptions {
    double leader_length = 5.0;
    double time_gap = 0.7;
    double comm_delay = 0.06;
    ConsensusThresholds thresholds;
    ComfortWeights weights;
    SafetyMode safety_mode = SafetyMode::projected;
    double hold_window = 1.0;  // [s]; 0 gives the single-step rule
    /// Control steps at the start of the run whose jerk is left out of the
    /// comfort extrema. The first command jumps from a = 0 in one step and
    /// its finite-difference jerk measures the step size, not the ride.
    int jerk_skip_steps = 1;

    double desired_gap_for(double follower_speed) const {
        return desired_gap(follower_speed, leader_length, time_gap, comm_delay);
    }

    std::size_t hold_steps(double dt) const {
        if (hold_window < 0.0) throw std::invalid_argument("hold_window must be non-negative");
        return static_cast<std::size_t>(whole_steps(hold_window, dt, "hold_window"));
    }
};

inline ConsensusSample consensus_sample(const TrajectorySample& s, double jerk, const EvaluationOptions& opt) {
    return ConsensusSample{s.gap(),          opt.desired_gap_for(s.follower.speed), s.leader_delayed.speed,
                           s.follower.speed, s.follower.accel,                      jerk};
}

inline std::vector<bool> consensus_flags(const Trajectory& traj, const EvaluationOptions& opt) {
    std::vector<bool> flags(traj.size());
    if (traj.empty()) return flags;
    const std::vector<double> jerk = traj.size() >= 2 ? jerk_series(traj) : std::vector<double>{0.0};
    for (std::size_t i = 0; i < traj.size(); ++i)
        flags[i] = consensus_reached(consensus_sample(traj[i], jerk[i], opt), opt.thresholds);
    return flags;
}

/// Index of the first sample that opens a consensus window of `hold_window`.
inline std::optional<std::size_t> convergence_index(const Trajectory& traj, const EvaluationOptions& opt) {
    return first_sustained(consensus_flags(traj, opt), opt.hold_steps(traj.dt));
}

inline std::optional<double> convergence_time(const Trajectory& traj, const EvaluationOptions& opt) {
    if (auto idx = convergence_index(traj, opt)) return traj[*idx].t;
    return std::nullopt;
}

/// Safety, efficiency and comfort outcomes of one run. All quantities are
/// taken over [t0, t_consensus], or over the whole run if consensus is never
/// reached.
inline RunMetrics evaluate_run(const Trajectory& traj, const EvaluationOptions& opt) {
    if (traj.empty()) throw std::invalid_argument("evaluate_run: empty trajectory");
    RunMetrics m;
    const auto idx = convergence_index(traj, opt);
    const std::size_t end = idx ? *idx : traj.size() - 1;
    if (idx) m.t_consensus = traj[*idx].t;

    std::vector<double> gaps(end + 1);
    for (std::size_t i = 0; i <= end; ++i) gaps[i] = traj[i].gap();
    const SafetyResult safety = check_safety(gaps, opt.leader_length, opt.safety_mode);
    m.safety_violated = safety.violated;
    m.min_gap = safety.min_gap;

    const std::vector<double> jerk = traj.size() >= 2 ? jerk_series(traj) : std::vector<double>{0.0};
    bool have_jerk = false;
    for (std::size_t i = 0; i <= end; ++i) {
        const double a = traj[i].follower.accel;
        m.max_accel = std::max(m.max_accel, a);
        m.max_decel = std::max(m.max_decel, -a);
        if (i > static_cast<std::size_t>(std::max(opt.jerk_skip_steps, 0))) {
            if (!have_jerk) {
                m.max_jerk = m.min_jerk = jerk[i];
                have_jerk = true;
            } else {
                m.max_jerk = std::max(m.max_jerk, jerk[i]);
                m.min_jerk = std::min(m.min_jerk, jerk[i]);
            }
        }
    }
    m.omega = omega_score(m, opt.weights);
    return m;
}

/// Incremental companion of evaluate_run used to cut simulations short once
/// the outcome is settled: consensus has been held for the full window, or the
/// safety check has failed at a step that is certain to precede t_consensus.
/// Truncating at that point leaves evaluate_run's result unchanged.
class SettleDetector {
public:
    explicit SettleDetector(const EvaluationOptions& opt, double dt)
        : opt_(opt), hold_steps_(opt.hold_steps(dt)), armed_(opt.safety_mode == SafetyMode::same_lane) {}

    bool operator()(const Trajectory& traj) {
        const std::size_t i = traj.size() - 1;
        const TrajectorySample& s = traj[i];
        const double jerk = i == 0 ? 0.0 : (s.follower.accel - traj[i - 1].follower.accel) / traj.dt;
        const bool flag = consensus_reached(consensus_sample(s, jerk, opt_), opt_.thresholds);
        run_ = flag ? run_ + 1 : 0;
        if (run_ == hold_steps_ + 1) return true;

        const double gap = s.gap();
        if (!armed_ && gap > opt_.leader_length) armed_ = true;
        // With the flag down here, any consensus window must open later, so the
        // violation lies inside [t0, t_consensus].
        return armed_ && gap <= opt_.leader_length && !flag;
    }

private:
    EvaluationOptions opt_;
    std::size_t hold_steps_;
    std::size_t run_ = 0;
    bool armed_;
};

}  // namespace cacc
