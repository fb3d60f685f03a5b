#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cacc/controllers.hpp"
#include "cacc/vehicle.hpp"

namespace cacc {

/// Initial condition of a two-vehicle run, keyed the same way as the gain
/// table: delayed-leader minus follower position, follower speed, leader speed.
struct InitialCondition {
    double dr0 = 0.0;  // [m]
    double vi0 = 0.0;  // [m/s]
    double vj0 = 0.0;  // [m/s]
};

struct SimSettings {
    double dt = 0.01;
    double comm_delay = 0.06;
    double leader_length = 5.0;
    double time_gap = 0.7;
    std::optional<VehicleSpec> accel_clamp;  // unset: commands pass through unclamped

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("SimSettings: dt must be positive");
        if (!(comm_delay >= 0.0)) throw std::invalid_argument("SimSettings: comm_delay must be non-negative");
        whole_steps(comm_delay, dt, "comm_delay");
        if (!(leader_length > 0.0)) throw std::invalid_argument("SimSettings: leader_length must be positive");
        if (!(time_gap > 0.0)) throw std::invalid_argument("SimSettings: time_gap must be positive");
        if (accel_clamp) accel_clamp->validate();
    }
};

struct TrajectorySample {
    double t = 0.0;
    VehicleState follower;
    VehicleState leader;          // true leader state at t
    VehicleState leader_delayed;  // leader state at t - tau as received by the follower

    double gap() const { return leader_delayed.position - follower.position; }
};

struct Trajectory {
    double dt = 0.01;
    std::vector<TrajectorySample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    const TrajectorySample& operator[](std::size_t i) const { return samples[i]; }
};

/// A controller maps the follower's view (own state, delayed leader state)
/// plus the delayed leader acceleration to an acceleration command.
template <class F>
concept FollowerController = requires(F f, const ControllerInput& in, double a) {
    { f(in, a) } -> std::convertible_to<double>;
};

struct NeverStop {
    bool operator()(const Trajectory&) const { return false; }
};

/// Runs the follower against a constant-speed leader for `duration` seconds.
///
/// The leader history is pre-rolled by tau so that the first delayed sample
/// seen at t0 sits exactly `dr0` ahead of the follower (which starts at r = 0).
/// Sample s holds the states at t = s dt; the command computed from sample s
/// is integrated over [t_s, t_s + dt] and shows up as the acceleration of
/// sample s + 1. `stop` is consulted after each recorded sample and may end
/// the run early; `out` is overwritten.
template <FollowerController Controller, class StopFn = NeverStop>
void simulate(const InitialCondition& init, const SimSettings& sim, double duration, Controller&& controller,
              Trajectory& out, StopFn&& stop = {}) {
    sim.validate();
    if (!(duration > 0.0)) throw std::invalid_argument("simulate: duration must be positive");
    const std::int64_t delay_steps = whole_steps(sim.comm_delay, sim.dt, "comm_delay");
    const std::int64_t n_steps = static_cast<std::int64_t>(std::floor(duration / sim.dt + 1e-9));

    StateHistory leader_history(sim.dt, static_cast<std::size_t>(delay_steps) + 2);
    VehicleState leader{init.dr0, init.vj0, 0.0};
    for (std::int64_t m = -delay_steps; m < 0; ++m) {
        leader_history.push(static_cast<double>(m) * sim.dt, leader);
        leader = step(leader, 0.0, sim.dt);
    }
    VehicleState follower{0.0, init.vi0, 0.0};

    out.dt = sim.dt;
    out.samples.clear();
    out.samples.reserve(static_cast<std::size_t>(n_steps) + 1);

    for (std::int64_t s = 0;; ++s) {
        const double t = static_cast<double>(s) * sim.dt;
        leader_history.push(t, leader);
        const VehicleState& delayed = leader_history.delayed_state(t, sim.comm_delay);
        out.samples.push_back(TrajectorySample{t, follower, leader, delayed});
        if (s == n_steps || stop(std::as_const(out))) break;

        ControllerInput in{follower, delayed, sim.leader_length, sim.time_gap, sim.comm_delay, 1};
        double cmd = static_cast<double>(controller(in, delayed.accel));
        if (sim.accel_clamp) cmd = sim.accel_clamp->clamp(cmd);
        follower = step(follower, cmd, sim.dt);
        leader = step(leader, 0.0, sim.dt);
    }
}

template <FollowerController Controller>
Trajectory simulate(const InitialCondition& init, const SimSettings& sim, double duration, Controller&& controller) {
    Trajectory out;
    simulate(init, sim, duration, std::forward<Controller>(controller), out);
    return out;
}

}  // namespace cacc
