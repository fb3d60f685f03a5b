#include <gtest/gtest.h>

#include <random>

#include "cacc/controllers.hpp"

using namespace cacc;

namespace {
ControllerInput make_input(double ri, double vi, double rj, double vj) {
    ControllerInput in;
    in.follower = {ri, vi, 0.0};
    in.leader_delayed = {rj, vj, 0.0};
    in.leader_length = 5.0;
    in.time_gap = 0.7;
    in.comm_delay = 0.06;
    in.adjacency = 1;
    return in;
}
}  // namespace

TEST(DesiredGap, ReferenceValues) {
    ControllerInput in = make_input(0, 0, 0, 0);
    EXPECT_DOUBLE_EQ(desired_gap(0.0, in), 5.0);
    EXPECT_NEAR(desired_gap(20.0, in), 20.2, 1e-12);
    EXPECT_NEAR(desired_gap(14.0, in), 15.64, 1e-12);
}

TEST(ConsensusAccel, ZeroAtEquilibrium) {
    const ControllerInput in = make_input(0, 14, 15.64, 14);
    EXPECT_NEAR(consensus_accel(in, GainPair::make(0.1, 3)), 0.0, 1e-12);
}

TEST(ConsensusAccel, ScenarioOneInitialCommand) {
    // bracket: (0 - 50 + 5 + 28 * 0.76) + 3 * (28 - 14) = -23.72 + 42 = 18.28
    const ControllerInput in = make_input(0, 28, 50, 14);
    EXPECT_NEAR(consensus_accel(in, GainPair::make(0.1, 3)), -1.828, 1e-12);
}

TEST(ConsensusAccel, NoEdgeNoCoupling) {
    ControllerInput in = make_input(0, 28, 50, 14);
    in.adjacency = 0;
    EXPECT_EQ(consensus_accel(in, GainPair::make(0.1, 3)), 0.0);
}

TEST(ConsensusAccel, SentinelGainsRequireFallback) {
    EXPECT_THROW(consensus_accel(make_input(0, 1, 10, 1), GainPair::invalid()), FallbackRequired);
    EXPECT_THROW(fixed_gain_consensus_accel(make_input(0, 1, 10, 1), GainPair::invalid()), FallbackRequired);
}

TEST(ConsensusAccel, InputValidation) {
    ControllerInput in = make_input(0, 1, 10, 1);
    in.adjacency = 2;
    EXPECT_THROW(in.validate(), std::invalid_argument);
    in.adjacency = 1;
    in.time_gap = 0.0;
    EXPECT_THROW(in.validate(), std::invalid_argument);
    EXPECT_THROW(GainPair::make(0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(GainPair::make(0.1, -1.0), std::invalid_argument);
}

TEST(FixedGainConsensus, MatchesConsensusLaw) {
    const ControllerInput in = make_input(3, 21, 44, 17);
    const GainPair g = GainPair::make(0.1, 4);
    EXPECT_EQ(fixed_gain_consensus_accel(in, g), consensus_accel(in, g));
    EXPECT_NEAR(fixed_gain_consensus_accel(make_input(0, 14, 15.64, 14), g), 0.0, 1e-12);
    // -0.1 * ((0 - 50 + 5 + 28 * 0.76) + 1 * 14) = -0.1 * (-23.72 + 14)
    EXPECT_NEAR(fixed_gain_consensus_accel(make_input(0, 28, 50, 14), GainPair::make(0.1, 1)), 0.972, 1e-12);
}

TEST(ConsensusAccel, LinearInErrorsAndSignSane) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> speed(0, 35), err(-20, 20), gam(1, 10);
    for (int i = 0; i < 500; ++i) {
        const double vi = speed(rng), de = err(rng), dv = err(rng) * 0.2;
        const GainPair g = GainPair::make(0.1, gam(rng));
        const double eq_gap = 5.0 + vi * 0.76;
        const double a1 = consensus_accel(make_input(0, vi, eq_gap + de, vi + dv), g);
        const double a2 = consensus_accel(make_input(0, vi, eq_gap + 2 * de, vi + 2 * dv), g);
        EXPECT_NEAR(a2, 2 * a1, 1e-9 * (1 + std::abs(a1)));
        // larger-than-desired gap with equal speeds: accelerate
        EXPECT_GT(consensus_accel(make_input(0, vi, eq_gap + std::abs(de) + 0.1, vi), g), 0.0);
    }
}

TEST(ConsensusAccel, SpeedTermGrowsLinearlyInGamma) {
    const ControllerInput in = make_input(0, 28, 50, 14);
    const double position_part = -0.1 * (0 - 50 + 5 + 28 * 0.76);
    for (int g = 1; g <= 10; ++g) {
        const double speed_part = consensus_accel(in, GainPair::make(0.1, g)) - position_part;
        EXPECT_NEAR(speed_part, -0.1 * g * 14.0, 1e-12);
    }
}

TEST(LinearFeedback, ReferenceValues) {
    // equilibrium: gap = s0 + l + v t_g, equal speeds, zero leader accel
    LinearFeedbackGains g{1.0, 0.58, 0.1, 2.0};
    EXPECT_NEAR(linear_feedback_accel(make_input(0, 20, 2 + 5 + 20 * 0.7, 20), 0.0, g), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(linear_feedback_accel(make_input(0, 28, 50, 14), 0.0, {0, 1, 0, 0}), -14.0);
    EXPECT_DOUBLE_EQ(linear_feedback_accel(make_input(0, 28, 50, 14), 0.5, {1, 0, 0, 0}), 0.5);
    EXPECT_THROW((LinearFeedbackGains{0, -1, 0, 0}.validate()), std::invalid_argument);
}
