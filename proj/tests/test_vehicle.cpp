#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cacc/simulation.hpp"
#include "cacc/vehicle.hpp"

using namespace cacc;

TEST(Step, ZeroAccelerationCoasts) {
    const VehicleState s = step({0.0, 10.0, 0.0}, 0.0, 0.01);
    EXPECT_DOUBLE_EQ(s.position, 0.1);
    EXPECT_DOUBLE_EQ(s.speed, 10.0);
    EXPECT_DOUBLE_EQ(s.accel, 0.0);
}

TEST(Step, BrakingUpdateUsesPreStepSpeed) {
    // r' = 100 + 20 * 0.01, v' = 20 - 1 * 0.01
    const VehicleState s = step({100.0, 20.0, 0.0}, -1.0, 0.01);
    EXPECT_DOUBLE_EQ(s.position, 100.2);
    EXPECT_DOUBLE_EQ(s.speed, 19.99);
    EXPECT_DOUBLE_EQ(s.accel, -1.0);
}

TEST(Step, RestStaysAtRest) {
    const VehicleState s = step({5.0, 0.0, 0.0}, 0.0, 0.01);
    EXPECT_EQ(s, (VehicleState{5.0, 0.0, 0.0}));
}

TEST(Step, RejectsNonFiniteInputsByName) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        step({0.0, nan, 0.0}, 0.0, 0.01);
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("speed"), std::string::npos);
    }
    try {
        step({0.0, 1.0, 0.0}, std::numeric_limits<double>::infinity(), 0.01);
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("accel_cmd"), std::string::npos);
    }
    EXPECT_THROW(step({}, 0.0, 0.0), std::invalid_argument);
}

TEST(Step, EulerIncrementsAreExactProducts) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(-500, 500), spd(0, 40), cmd(-8, 5);
    for (int i = 0; i < 1000; ++i) {
        const VehicleState s{pos(rng), spd(rng), cmd(rng)};
        const double c = cmd(rng);
        const VehicleState n = step(s, c, 0.01);
        EXPECT_EQ(n.position, s.position + s.speed * 0.01);
        EXPECT_EQ(n.speed, s.speed + c * 0.01);
        EXPECT_EQ(n.accel, c);
    }
}

TEST(Step, DeterministicAndMonotoneWhileMoving) {
    auto run = [] {
        VehicleState s{0.0, 12.0, 0.0};
        std::vector<VehicleState> out;
        for (int i = 0; i < 500; ++i) {
            s = step(s, std::sin(i * 0.01) * 0.5, 0.01);
            out.push_back(s);
        }
        return out;
    };
    const auto a = run(), b = run();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i], b[i]);
        if (i > 0) {
            EXPECT_GT(a[i].position, a[i - 1].position);
        }
    }
}

TEST(VehicleSpec, OptionalClampLimitsCommands) {
    const VehicleSpec spec{5.0, -3.0, 2.0};
    spec.validate();
    EXPECT_EQ(spec.clamp(-10.0), -3.0);
    EXPECT_EQ(spec.clamp(1.0), 1.0);
    EXPECT_THROW((VehicleSpec{5.0, 1.0, 2.0}.validate()), std::invalid_argument);
    EXPECT_THROW((VehicleSpec{0.0, -1.0, 2.0}.validate()), std::invalid_argument);
}

TEST(SimClock, DelayMustBeWholeSteps) {
    const SimClock clock(0.01);
    EXPECT_EQ(clock.delay_steps(0.06), 6);
    EXPECT_EQ(clock.delay_steps(0.0), 0);
    EXPECT_THROW(clock.delay_steps(0.065), std::invalid_argument);
    EXPECT_THROW(SimClock(0.0), std::invalid_argument);
}

TEST(StateHistory, ZeroDelayReturnsCurrentSample) {
    StateHistory h(0.01, 8);
    for (int i = 0; i <= 5; ++i) h.push(i * 0.01, {static_cast<double>(i), 1.0, 0.0});
    EXPECT_EQ(h.delayed_state(0.05, 0.0).position, 5.0);
}

TEST(StateHistory, HoldsFirstSampleBeforeHistoryStarts) {
    StateHistory h(0.01, 8);
    for (int i = 0; i <= 2; ++i) h.push(i * 0.01, {static_cast<double>(i), 14.0, 0.0});
    EXPECT_EQ(h.delayed_state(0.02, 0.06).position, 0.0);
}

TEST(StateHistory, DirectIndexLookup) {
    StateHistory h(0.06, 4);
    h.push(0.0, {0.0, 14.0, 0.0});
    h.push(0.06, {0.84, 14.5, 0.0});
    EXPECT_EQ(h.delayed_state(0.06, 0.06).speed, 14.0);
}

TEST(StateHistory, RejectsFractionalDelaysAndEvictedSamples) {
    StateHistory h(0.01, StateHistory::capacity_for(0.06, 0.01));
    EXPECT_EQ(h.capacity(), 7u);
    for (int i = 0; i < 20; ++i) h.push(i * 0.01, {static_cast<double>(i), 0.0, 0.0});
    EXPECT_THROW(h.delayed_state(0.19, 0.015), std::invalid_argument);
    EXPECT_THROW(h.delayed_state(0.19, 0.10), std::out_of_range);
    EXPECT_THROW(h.push(0.5, {}), std::invalid_argument);
}

TEST(StateHistory, DelayedLookupIsBitIdenticalToStoredSample) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1000, 1000);
    StateHistory h(0.01, 16);
    std::vector<VehicleState> stored;
    for (int i = 0; i < 200; ++i) {
        stored.push_back({u(rng), u(rng), u(rng)});
        h.push(i * 0.01, stored.back());
        for (int n = 0; n < 16 && n <= i; ++n) ASSERT_EQ(h.delayed_state(i * 0.01, n * 0.01), stored[i - n]);
    }
}

TEST(Simulate, ConstantSpeedLeaderAndZeroCommandFollower) {
    const SimSettings sim;
    const auto tr = simulate(InitialCondition{30, 14, 14}, sim, 1.0, [](const ControllerInput&, double) { return 0.0; });
    ASSERT_EQ(tr.size(), 101u);
    for (const auto& s : tr.samples) {
        EXPECT_NEAR(s.gap(), 30.0, 1e-9);
        EXPECT_NEAR(s.leader.position - s.leader_delayed.position, 14 * 0.06, 1e-9);
    }
    EXPECT_EQ(tr[0].gap(), 30.0);
}

TEST(Simulate, CommandAppearsOneStepLater) {
    const auto tr = simulate(InitialCondition{30, 14, 14}, SimSettings{}, 0.05,
                             [](const ControllerInput&, double) { return -1.5; });
    EXPECT_EQ(tr[0].follower.accel, 0.0);
    EXPECT_EQ(tr[1].follower.accel, -1.5);
    EXPECT_EQ(tr[1].follower.speed, 14.0 - 1.5 * 0.01);
}

TEST(Simulate, EarlyStopTruncates) {
    Trajectory tr;
    simulate(InitialCondition{30, 14, 14}, SimSettings{}, 10.0, [](const ControllerInput&, double) { return 0.0; }, tr,
             [](const Trajectory& t) { return t.size() == 5; });
    EXPECT_EQ(tr.size(), 5u);
}
