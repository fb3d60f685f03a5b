#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cacc {

/// Physical description of a vehicle. The acceleration limits are only
/// applied when a clamp is explicitly requested.
struct VehicleSpec {
    double length = 5.0;      // [m]
    double accel_min = -8.0;  // [m/s^2]
    double accel_max = 5.0;   // [m/s^2]

    void validate() const {
        if (!(length > 0.0) || !std::isfinite(length))
            throw std::invalid_argument("VehicleSpec: length must be positive and finite");
        if (!(accel_min < 0.0 && accel_max > 0.0))
            throw std::invalid_argument("VehicleSpec: require accel_min < 0 < accel_max");
    }

    double clamp(double accel) const {
        return accel < accel_min ? accel_min : (accel > accel_max ? accel_max : accel);
    }
};

/// Longitudinal state of one vehicle at one instant.
struct VehicleState {
    double position = 0.0;  // r [m]
    double speed = 0.0;     // v [m/s]
    double accel = 0.0;     // a [m/s^2]

    friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

namespace detail {
inline void require_finite(double value, const char* field) {
    if (!std::isfinite(value))
        throw std::invalid_argument(std::string("non-finite value in field '") + field + "'");
}
}  // namespace detail

/// Explicit Euler step of the double integrator. Position advances with the
/// pre-step speed; the command becomes the new acceleration.
inline VehicleState step(const VehicleState& state, double accel_cmd, double dt) {
    detail::require_finite(state.position, "position");
    detail::require_finite(state.speed, "speed");
    detail::require_finite(state.accel, "accel");
    detail::require_finite(accel_cmd, "accel_cmd");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("step: dt must be positive and finite");
    return VehicleState{state.position + state.speed * dt, state.speed + accel_cmd * dt, accel_cmd};
}

/// Number of whole steps of length `dt` in `duration`; throws when the ratio
/// is not integral (within 1e-9 relative).
inline std::int64_t whole_steps(double duration, double dt, const char* what) {
    if (!(dt > 0.0)) throw std::invalid_argument("whole_steps: dt must be positive");
    const double ratio = duration / dt;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-9 * std::max(1.0, std::abs(ratio)))
        throw std::invalid_argument(std::string(what) + " is not an integer multiple of dt");
    return static_cast<std::int64_t>(n);
}

/// Fixed-step simulation clock. Time is derived from the step index so that
/// long runs do not accumulate rounding drift.
class SimClock {
public:
    SimClock(double dt, double t_start = 0.0) : dt_(dt), t_start_(t_start) {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SimClock: dt must be positive");
    }

    double dt() const { return dt_; }
    double t() const { return time_at(index_); }
    std::int64_t index() const { return index_; }
    double time_at(std::int64_t index) const { return t_start_ + static_cast<double>(index) * dt_; }
    void advance() { ++index_; }

    /// Checks that a delay is realizable without interpolation.
    std::int64_t delay_steps(double tau) const {
        if (tau < 0.0) throw std::invalid_argument("delay must be non-negative");
        return whole_steps(tau, dt_, "delay");
    }

private:
    double dt_;
    double t_start_;
    std::int64_t index_ = 0;
};

/// Bounded history of equally spaced state samples supporting exact
/// delayed retrieval. Samples older than `capacity` are evicted; queries
/// before the first ever sample return that first sample.
class StateHistory {
public:
    StateHistory(double dt, std::size_t capacity) : dt_(dt), ring_(capacity) {
        if (!(dt > 0.0)) throw std::invalid_argument("StateHistory: dt must be positive");
        if (capacity == 0) throw std::invalid_argument("StateHistory: capacity must be positive");
    }

    /// Capacity needed to serve delays up to `max_delay` at step `dt`.
    static std::size_t capacity_for(double max_delay, double dt) {
        return static_cast<std::size_t>(whole_steps(max_delay, dt, "max delay")) + 1;
    }

    double dt() const { return dt_; }
    std::size_t capacity() const { return ring_.size(); }
    std::int64_t size() const { return count_; }
    bool empty() const { return count_ == 0; }

    /// Appends a sample. Times must follow the previous sample by exactly dt.
    void push(double t, const VehicleState& state) {
        if (count_ == 0) {
            t_first_ = t;
            first_ = state;
        } else {
            const double expected = time_of(count_);
            if (std::abs(t - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
                throw std::invalid_argument("StateHistory: sample times must be spaced by dt");
        }
        ring_[static_cast<std::size_t>(count_ % static_cast<std::int64_t>(ring_.size()))] = state;
        ++count_;
    }

    double first_time() const { return t_first_; }
    double last_time() const { return time_of(count_ - 1); }

    const VehicleState& latest() const {
        if (count_ == 0) throw std::logic_error("StateHistory: empty");
        return at_index(count_ - 1);
    }

    /// State at time t - tau. tau must be a whole number of steps.
    const VehicleState& delayed_state(double t, double tau) const {
        if (count_ == 0) throw std::logic_error("StateHistory: empty");
        if (tau < 0.0) throw std::invalid_argument("delayed_state: tau must be non-negative");
        const std::int64_t lag = whole_steps(tau, dt_, "tau");
        const std::int64_t now = whole_steps(t - t_first_, dt_, "query time offset");
        if (now >= count_) throw std::out_of_range("delayed_state: query time is beyond the newest sample");
        const std::int64_t idx = now - lag;
        if (idx < 0) return *first_;
        if (idx < count_ - static_cast<std::int64_t>(ring_.size()))
            throw std::out_of_range("delayed_state: sample evicted; history capacity too small for this delay");
        return at_index(idx);
    }

private:
    double time_of(std::int64_t index) const { return t_first_ + static_cast<double>(index) * dt_; }
    const VehicleState& at_index(std::int64_t index) const {
        return ring_[static_cast<std::size_t>(index % static_cast<std::int64_t>(ring_.size()))];
    }

    double dt_;
    std::vector<VehicleState> ring_;
    std::int64_t count_ = 0;
    double t_first_ = 0.0;
    std::optional<VehicleState> first_;
};

}  // namespace cacc
