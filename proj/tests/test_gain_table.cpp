#include <gtest/gtest.h>

#include <random>

#include "cacc/gain_table.hpp"
#include "oracles.hpp"

using namespace cacc;

namespace {
const CandidateSets kGammas{{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {0.1}};

TableAxes reference_axes() {
    return TableAxes{AxisGrid::range(-100, 10, 100), AxisGrid::range(2, 2, 34), AxisGrid::range(2, 2, 34)};
}

CandidateOutcome outcome(double gamma, double k, std::optional<double> t, double omega, bool unsafe = false) {
    CandidateOutcome c{GainPair::make(k, gamma), {}};
    c.metrics.t_consensus = t;
    c.metrics.omega = omega;
    c.metrics.safety_violated = unsafe;
    return c;
}
}  // namespace

TEST(AxisGrid, RangeAndValidation) {
    const auto dr = AxisGrid::range(-100, 10, 100);
    EXPECT_EQ(dr.size(), 21u);
    EXPECT_EQ(dr.front(), -100);
    EXPECT_EQ(dr.back(), 100);
    EXPECT_EQ(AxisGrid::range(2, 2, 34).size(), 17u);
    EXPECT_THROW(AxisGrid({1, 1}), std::invalid_argument);
    EXPECT_THROW(AxisGrid(std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(AxisGrid({3, 2}), std::invalid_argument);
}

TEST(AxisGrid, NearestBreaksMidpointTiesDownward) {
    const AxisGrid g({2, 4, 6});
    EXPECT_EQ(g.nearest(3.0), 0u);
    EXPECT_EQ(g.nearest(3.0001), 1u);
    EXPECT_EQ(g.nearest(6.0), 2u);
    EXPECT_EQ(g.nearest(2.0), 0u);
}

TEST(Lookup, ReferenceGridQueries) {
    GainTable t{reference_axes(), kGammas, BuildConfig{}, {}};
    t.cells.assign(t.axes.cell_count(), GainPair::invalid());
    t.cells[t.index(15, 13, 6)] = GainPair::make(0.1, 4);  // (50, 28, 14)

    const auto hit = lookup(t, 52.4, 27.1, 14.8);
    ASSERT_TRUE(hit.has_value());
    EXPECT_EQ(*hit, GainPair::make(0.1, 4));
    EXPECT_EQ(*lookup(t, 50, 28, 14), GainPair::make(0.1, 4));
    EXPECT_FALSE(lookup(t, 150, 28, 14).has_value());
    EXPECT_FALSE(lookup(t, 50, 1.9, 14).has_value());
    EXPECT_FALSE(lookup(t, 50, 28, std::nan("")).has_value());
    const auto sentinel = lookup(t, -100, 2, 2);
    ASSERT_TRUE(sentinel.has_value());
    EXPECT_FALSE(sentinel->valid);
}

TEST(Lookup, MatchesBruteForceScan) {
    std::mt19937_64 rng(99);
    GainTable t{TableAxes{AxisGrid({-3, -1, 0, 4, 9}), AxisGrid({0, 0.5, 2}), AxisGrid({1, 2, 3, 5})}, kGammas, {}, {}};
    std::uniform_int_distribution<int> pick(0, 10);
    for (std::size_t i = 0; i < t.axes.cell_count(); ++i) {
        const int g = pick(rng);
        t.cells.push_back(g == 0 ? GainPair::invalid() : GainPair::make(0.1, g));
    }
    std::uniform_real_distribution<double> dr(-3.5, 9.5), vi(-0.2, 2.2), vj(0.8, 5.2);
    std::uniform_int_distribution<int> grid_pt(0, 4);
    for (int q = 0; q < 5000; ++q) {
        double a = dr(rng), b = vi(rng), c = vj(rng);
        if (q % 5 == 0) {
            const auto i = static_cast<std::size_t>(grid_pt(rng) % 4);
            a = (t.axes.dr[i] + t.axes.dr[i + 1]) / 2;  // exact midpoints exercise the tie rule
        }
        EXPECT_EQ(lookup(t, a, b, c), oracle::brute_force_lookup(t, a, b, c)) << a << ' ' << b << ' ' << c;
    }
}

TEST(SelectGains, SafetyFirstThenTimeThenOmegaThenLexicographic) {
    std::vector<CandidateOutcome> v{outcome(1, 0.1, 10.0, 1.0, true), outcome(2, 0.1, 20.0, 1.0),
                                    outcome(3, 0.1, 15.0, 9.0), outcome(4, 0.1, 15.0, 5.0), outcome(5, 0.1, 15.0, 5.0)};
    EXPECT_EQ(select_gains(v), GainPair::make(0.1, 4));
    v.push_back(outcome(4, 0.05, 15.0, 5.0));
    EXPECT_EQ(select_gains(v), GainPair::make(0.05, 4));
}

TEST(SelectGains, SingleConvergingCandidateWinsRegardlessOfOmega) {
    std::vector<CandidateOutcome> v{outcome(1, 0.1, std::nullopt, 0.0), outcome(2, 0.1, 40.0, 1e6),
                                    outcome(3, 0.1, std::nullopt, 0.1)};
    EXPECT_EQ(select_gains(v), GainPair::make(0.1, 2));
}

TEST(SelectGains, SentinelWhenNothingSafeOrNothingConverges) {
    EXPECT_FALSE(select_gains(std::vector{outcome(1, 0.1, 5.0, 1.0, true)}).valid);
    EXPECT_FALSE(select_gains(std::vector{outcome(1, 0.1, std::nullopt, 1.0)}).valid);
    EXPECT_FALSE(select_gains(std::vector<CandidateOutcome>{}).valid);
}

TEST(BuildTable, NegativeGapIsSentinelInSameLaneMode) {
    BuildConfig cfg;
    cfg.safety_mode = SafetyMode::same_lane;
    const GainTable t = build_table(TableAxes{AxisGrid({-30}), AxisGrid({18}), AxisGrid({10})}, kGammas, cfg);
    ASSERT_EQ(t.cells.size(), 1u);
    EXPECT_FALSE(t.cells[0].valid);
}

TEST(BuildTable, ScenarioOneCellMatchesExhaustiveSweep) {
    const BuildConfig cfg;  // projected mode
    const GainTable t = build_table(TableAxes{AxisGrid({50}), AxisGrid({28}), AxisGrid({14})}, kGammas, cfg);
    const GainPair expected = oracle::select(oracle::sweep_candidates({50, 28, 14}, kGammas, cfg));
    EXPECT_EQ(t.cells[0], expected);
    // frozen from the exhaustive sweep: gamma 1-2 overshoot into the leader,
    // gamma = 4 converges first (25.72 s)
    EXPECT_EQ(t.cells[0], GainPair::make(0.1, 4));
}

TEST(BuildTable, NonConvergingHorizonGivesSentinel) {
    BuildConfig cfg;
    cfg.t_max = 3.0;
    const GainTable t = build_table(TableAxes{AxisGrid({50}), AxisGrid({28}), AxisGrid({14})}, kGammas, cfg);
    EXPECT_FALSE(t.cells[0].valid);
}

TEST(BuildTable, WorkerCountDoesNotChangeResult) {
    const TableAxes axes{AxisGrid({-20, 10, 40}), AxisGrid({6, 20}), AxisGrid({8, 24})};
    const BuildConfig cfg;
    const GainTable serial = build_table(axes, kGammas, cfg, 1);
    const GainTable parallel = build_table(axes, kGammas, cfg, 3);
    EXPECT_EQ(serial, parallel);
    serial.validate();
    for (const auto& g : serial.cells)
        if (g.valid) {
            EXPECT_TRUE(kGammas.contains(g));
        }
}

TEST(BuildTable, SameLaneCellsAtOrBelowLeaderLengthAreSentinel) {
    BuildConfig cfg;
    cfg.safety_mode = SafetyMode::same_lane;
    const TableAxes axes{AxisGrid({-10, 0, 5, 30}), AxisGrid({10, 20}), AxisGrid({10, 20})};
    const GainTable t = build_table(axes, kGammas, cfg);
    for (std::size_t flat = 0; flat < t.cells.size(); ++flat)
        if (t.cell_condition(flat).dr0 <= cfg.leader_length) {
            EXPECT_FALSE(t.cells[flat].valid);
        }
}

TEST(BuildTable, ChosenGainDominatesOnSmallGrid) {
    const TableAxes axes{AxisGrid({-50, 0, 60}), AxisGrid({8, 26}), AxisGrid({12, 30})};
    const BuildConfig cfg;
    const GainTable t = build_table(axes, kGammas, cfg);
    for (std::size_t flat = 0; flat < t.cells.size(); ++flat)
        EXPECT_EQ(t.cells[flat], oracle::select(oracle::sweep_candidates(t.cell_condition(flat), kGammas, cfg)))
            << "cell " << flat;
}

TEST(BuildTable, RejectsBadConfiguration) {
    BuildConfig cfg;
    cfg.comm_delay = 0.065;
    EXPECT_THROW(build_table(TableAxes{AxisGrid({0}), AxisGrid({2}), AxisGrid({2})}, kGammas, cfg), std::invalid_argument);
    cfg = BuildConfig{};
    cfg.t_max = 0.5;
    EXPECT_THROW(build_table(TableAxes{AxisGrid({0}), AxisGrid({2}), AxisGrid({2})}, kGammas, cfg), std::invalid_argument);
    EXPECT_THROW(build_table(TableAxes{AxisGrid({0}), AxisGrid({2}), AxisGrid({2})}, CandidateSets{{}, {0.1}}, BuildConfig{}),
                 std::invalid_argument);
}
