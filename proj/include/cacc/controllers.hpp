#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cacc/vehicle.hpp"

namespace cacc {

/// Control gains (k, gamma) of the consensus law. An invalid pair is the
/// table sentinel and carries NaN in both slots.
struct GainPair {
    double k = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;

    static GainPair make(double k, double gamma) {
        if (!(k > 0.0) || !(gamma > 0.0) || !std::isfinite(k) || !std::isfinite(gamma))
            throw std::invalid_argument("GainPair: k and gamma must be positive and finite");
        return GainPair{k, gamma, true};
    }
    static GainPair invalid() { return GainPair{}; }

    /// Bitwise-style equality: sentinels compare equal to each other.
    friend bool operator==(const GainPair& a, const GainPair& b) {
        if (a.valid != b.valid) return false;
        return !a.valid || (a.k == b.k && a.gamma == b.gamma);
    }
};

/// Thrown when a consensus controller is handed the sentinel gain pair; the
/// caller is expected to switch to the fallback controller.
class FallbackRequired : public std::runtime_error {
public:
    FallbackRequired() : std::runtime_error("invalid gain pair: engage the fallback controller") {}
};

struct ControllerInput {
    VehicleState follower;
    VehicleState leader_delayed;
    double leader_length = 5.0;  // l_j [m]
    double time_gap = 0.7;       // t_g [s]
    double comm_delay = 0.06;    // tau [s]
    int adjacency = 1;           // a_ij in {0, 1}

    void validate() const {
        if (!(time_gap > 0.0)) throw std::invalid_argument("ControllerInput: time_gap must be positive");
        if (!(comm_delay >= 0.0)) throw std::invalid_argument("ControllerInput: comm_delay must be non-negative");
        if (adjacency != 0 && adjacency != 1) throw std::invalid_argument("ControllerInput: adjacency must be 0 or 1");
    }
};

/// Parameters of the linear feedback spacing controller used both as the
/// comparison baseline and as the fallback when no table gain applies.
struct LinearFeedbackGains {
    double k_a = 1.0;             // leader acceleration feed-forward
    double k_v = 0.58;            // [1/s]
    double k_d = 0.1;             // [1/s^2]
    double standstill_gap = 2.0;  // [m]

    void validate() const {
        if (!std::isfinite(k_a) || !std::isfinite(k_v) || !std::isfinite(k_d) || !std::isfinite(standstill_gap))
            throw std::invalid_argument("LinearFeedbackGains: all gains must be finite");
        if (k_v < 0.0 || k_d < 0.0) throw std::invalid_argument("LinearFeedbackGains: k_v and k_d must be non-negative");
    }
};

/// Speed-dependent spacing target l_j + v_i (t_g + tau). Negative speeds are
/// extrapolated linearly.
inline double desired_gap(double follower_speed, double leader_length, double time_gap, double comm_delay) {
    return leader_length + follower_speed * (time_gap + comm_delay);
}

inline double desired_gap(double follower_speed, const ControllerInput& in) {
    return desired_gap(follower_speed, in.leader_length, in.time_gap, in.comm_delay);
}

/// Delayed consensus law:
///   u = -a k [ (r_i - r_j^tau + l_j + v_i (t_g + tau)) + gamma (v_i - v_j^tau) ]
inline double consensus_accel(const ControllerInput& in, const GainPair& gains) {
    if (!gains.valid) throw FallbackRequired();
    if (in.adjacency == 0) return 0.0;
    const VehicleState& f = in.follower;
    const VehicleState& l = in.leader_delayed;
    const double position_term = f.position - l.position + desired_gap(f.speed, in);
    const double speed_term = gains.gamma * (f.speed - l.speed);
    return -static_cast<double>(in.adjacency) * gains.k * (position_term + speed_term);
}

/// The same law with one gain pair held for every initial condition.
inline double fixed_gain_consensus_accel(const ControllerInput& in, const GainPair& static_gains) {
    return consensus_accel(in, static_gains);
}

/// u = k_a a_j^tau + k_v (v_j^tau - v_i) + k_d (r_j^tau - r_i - s0 - l_j - v_i t_g)
inline double linear_feedback_accel(const ControllerInput& in, double leader_accel_delayed,
                                    const LinearFeedbackGains& g) {
    const VehicleState& f = in.follower;
    const VehicleState& l = in.leader_delayed;
    const double spacing_error =
        l.position - f.position - g.standstill_gap - in.leader_length - f.speed * in.time_gap;
    return g.k_a * leader_accel_delayed + g.k_v * (l.speed - f.speed) + g.k_d * spacing_error;
}

}  // namespace cacc
