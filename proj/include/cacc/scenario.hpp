#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cacc/config.hpp"
#include "cacc/controllers.hpp"
#include "cacc/gain_table.hpp"
#include "cacc/metrics.hpp"
#include "cacc/simulation.hpp"
#include "cacc/table_io.hpp"

namespace cacc {

enum class ControllerKind { lookup, fixed_consensus, linear_feedback };

inline std::string_view to_string(ControllerKind k) {
    switch (k) {
        case ControllerKind::lookup: return "lookup";
        case ControllerKind::fixed_consensus: return "fixed_consensus";
        case ControllerKind::linear_feedback: return "linear_feedback";
    }
    return "?";
}

inline ControllerKind parse_controller(std::string_view s) {
    if (s == "lookup") return ControllerKind::lookup;
    if (s == "fixed_consensus") return ControllerKind::fixed_consensus;
    if (s == "linear_feedback") return ControllerKind::linear_feedback;
    throw std::invalid_argument("unknown controller '" + std::string(s) + "'");
}

/// Comparison controllers and the fallback used when the table has no gain.
/// These values are tuning stand-ins, not reconstructions of published designs.
struct BaselineConfig {
    GainPair fixed_consensus = GainPair::make(0.1, 1.0);
    LinearFeedbackGains linear_feedback{1.0, 0.58, 0.1, 1.0};
    LinearFeedbackGains fallback{0.0, 0.3, 0.05, 1.0};
};

struct ScenarioConfig {
    std::string id = "scenario";
    InitialCondition initial;
    double duration = 200.0;
    std::string leader_profile = "constant_speed";
    ControllerKind controller = ControllerKind::lookup;
    std::optional<GainPair> fixed_gains;                // overrides BaselineConfig::fixed_consensus
    std::optional<LinearFeedbackGains> linear_gains;    // overrides BaselineConfig::linear_feedback

    void validate() const {
        if (!(duration > 0.0)) throw std::invalid_argument("scenario '" + id + "': duration must be positive");
        if (!(initial.vi0 >= 0.0) || !(initial.vj0 >= 0.0))
            throw std::invalid_argument("scenario '" + id + "': speeds must be non-negative");
        if (!std::isfinite(initial.dr0)) throw std::invalid_argument("scenario '" + id + "': dr0 must be finite");
        if (leader_profile != "constant_speed")
            throw std::invalid_argument("scenario '" + id + "': unsupported leader profile '" + leader_profile + "'");
    }
};

/// The four reference initial conditions: (dr0, vi0, vj0).
inline std::vector<ScenarioConfig> reference_scenarios(double duration = 200.0) {
    const std::array<InitialCondition, 4> ics{{{50, 28, 14}, {20, 16, 22}, {-30, 18, 10}, {-80, 4, 21}}};
    std::vector<ScenarioConfig> out;
    for (std::size_t i = 0; i < ics.size(); ++i) {
        ScenarioConfig s;
        s.id = "scenario" + std::to_string(i + 1);
        s.initial = ics[i];
        s.duration = duration;
        out.push_back(s);
    }
    return out;
}

/// Simulation settings plus report-only metric options.
struct HarnessSettings {
    BuildConfig sim;
    int jerk_skip_steps = 1;

    EvaluationOptions evaluation_options() const {
        EvaluationOptions opt = sim.evaluation_options();
        opt.jerk_skip_steps = jerk_skip_steps;
        return opt;
    }
};

struct RunReport {
    std::string scenario_id;
    ControllerKind controller = ControllerKind::lookup;
    RunMetrics metrics;
    std::string gains_used;  // human-readable description of the active law
    GainPair consensus_gains = GainPair::invalid();
    bool fallback_engaged = false;
    std::string trajectory_path;
};

struct ScenarioResult {
    RunReport report;
    Trajectory trajectory;
};

/// Fixed 12-significant-digit rendering for CSV and report output.
inline std::string report_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

namespace detail {
inline std::string describe(const GainPair& g) {
    return "k=" + io::format_double(g.k) + ";gamma=" + io::format_double(g.gamma);
}
inline std::string describe(const LinearFeedbackGains& g) {
    return "k_a=" + io::format_double(g.k_a) + ";k_v=" + io::format_double(g.k_v) + ";k_d=" +
           io::format_double(g.k_d) + ";s0=" + io::format_double(g.standstill_gap);
}
}  // namespace detail

/// Runs one scenario. With the lookup controller, gains are chosen once from
/// the initial condition and held; an out-of-range query or a sentinel cell
/// hands the run to the fallback controller.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg, const HarnessSettings& settings,
                                   const GainTable* table = nullptr, const BaselineConfig& baselines = {}) {
    cfg.validate();
    settings.sim.validate();
    ScenarioResult result;
    RunReport& rep = result.report;
    rep.scenario_id = cfg.id;
    rep.controller = cfg.controller;

    const SimSettings sim = settings.sim.sim_settings();
    auto run_consensus = [&](const GainPair& g) {
        rep.consensus_gains = g;
        rep.gains_used = detail::describe(g);
        simulate(cfg.initial, sim, cfg.duration, [&g](const ControllerInput& in, double) { return consensus_accel(in, g); },
                 result.trajectory);
    };
    auto run_linear = [&](const LinearFeedbackGains& g) {
        rep.gains_used = detail::describe(g);
        simulate(cfg.initial, sim, cfg.duration,
                 [&g](const ControllerInput& in, double a_lead) { return linear_feedback_accel(in, a_lead, g); },
                 result.trajectory);
    };

    switch (cfg.controller) {
        case ControllerKind::lookup: {
            if (table == nullptr) throw std::invalid_argument("scenario '" + cfg.id + "': lookup controller needs a gain table");
            const auto g = lookup(*table, cfg.initial.dr0, cfg.initial.vi0, cfg.initial.vj0);
            if (g && g->valid) {
                run_consensus(*g);
            } else {
                rep.fallback_engaged = true;
                run_linear(baselines.fallback);
                rep.gains_used = "fallback:" + rep.gains_used;
            }
            break;
        }
        case ControllerKind::fixed_consensus:
            run_consensus(cfg.fixed_gains.value_or(baselines.fixed_consensus));
            break;
        case ControllerKind::linear_feedback:
            run_linear(cfg.linear_gains.value_or(baselines.linear_feedback));
            break;
    }
    rep.metrics = evaluate_run(result.trajectory, settings.evaluation_options());
    return result;
}

/// CSV columns: t, r_i, v_i, a_i, jerk_i, r_j, v_j, gap, gap_error, consensus_flag.
/// r_j and v_j are the leader state as received (delayed by tau).
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const EvaluationOptions& opt) {
    const std::vector<double> jerk = jerk_series(traj);
    const std::vector<bool> flags = consensus_flags(traj, opt);
    std::string out = "t,r_i,v_i,a_i,jerk_i,r_j,v_j,gap,gap_error,consensus_flag\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const TrajectorySample& s = traj[i];
        const double gap = s.gap();
        out += report_number(s.t) + ',' + report_number(s.follower.position) + ',' + report_number(s.follower.speed) + ',' +
               report_number(s.follower.accel) + ',' + report_number(jerk[i]) + ',' +
               report_number(s.leader_delayed.position) + ',' + report_number(s.leader_delayed.speed) + ',' +
               report_number(gap) + ',' + report_number(gap - opt.desired_gap_for(s.follower.speed)) + ',' +
               (flags[i] ? "1" : "0") + '\n';
    }
    os << out;
}

inline std::string format_optional_time(const std::optional<double>& t) {
    return t ? report_number(*t) : std::string("not_reached");
}

inline constexpr std::string_view kReportHeader =
    "scenario,controller,t_consensus,max_accel,max_decel,max_jerk,min_jerk,omega,min_gap,safety_violated,"
    "fallback_engaged,gains";

inline std::string report_row(const RunReport& r) {
    const RunMetrics& m = r.metrics;
    return r.scenario_id + ',' + std::string(to_string(r.controller)) + ',' + format_optional_time(m.t_consensus) + ',' +
           report_number(m.max_accel) + ',' + report_number(m.max_decel) + ',' + report_number(m.max_jerk) + ',' +
           report_number(m.min_jerk) + ',' + report_number(m.omega) + ',' + report_number(m.min_gap) + ',' +
           (m.safety_violated ? "1" : "0") + ',' + (r.fallback_engaged ? "1" : "0") + ',' + r.gains_used;
}

inline void write_report_csv(std::ostream& os, const std::vector<RunReport>& rows) {
    std::string out(kReportHeader);
    out += '\n';
    for (const RunReport& r : rows) out += report_row(r) + '\n';
    os << out;
}

/// Outcome of running every controller on every scenario.
struct ComparisonReport {
    std::vector<std::string> scenario_ids;
    std::vector<RunReport> rows;  // scenario-major, controllers in lookup, fixed, linear order

    const RunReport& row(std::size_t scenario, ControllerKind c) const {
        return rows[scenario * 3 + static_cast<std::size_t>(c)];
    }

    static double time_or_inf(const RunReport& r) {
        return r.metrics.t_consensus.value_or(std::numeric_limits<double>::infinity());
    }
    static double peak_jerk(const RunReport& r) {
        return std::max(std::abs(r.metrics.max_jerk), std::abs(r.metrics.min_jerk));
    }

    /// Lookup converges strictly earlier than the given baseline in scenario s.
    bool lookup_faster(std::size_t s, ControllerKind baseline) const {
        const RunReport& l = row(s, ControllerKind::lookup);
        return l.metrics.t_consensus && time_or_inf(l) < time_or_inf(row(s, baseline));
    }
};

/// Runs {lookup, fixed_consensus, linear_feedback} on each scenario. The
/// scenario's own controller field is ignored.
inline ComparisonReport run_suite(const GainTable& table, const HarnessSettings& settings, const BaselineConfig& baselines,
                                  const std::vector<ScenarioConfig>& scenarios,
                                  std::vector<Trajectory>* trajectories = nullptr) {
    ComparisonReport report;
    for (const ScenarioConfig& base : scenarios) {
        report.scenario_ids.push_back(base.id);
        for (ControllerKind c : {ControllerKind::lookup, ControllerKind::fixed_consensus, ControllerKind::linear_feedback}) {
            ScenarioConfig cfg = base;
            cfg.controller = c;
            ScenarioResult r = run_scenario(cfg, settings, &table, baselines);
            report.rows.push_back(std::move(r.report));
            if (trajectories) trajectories->push_back(std::move(r.trajectory));
        }
    }
    return report;
}

/// Convergence-time and peak-jerk matrix (controllers by scenarios) followed
/// by the ordering verdicts.
inline std::string format_comparison_summary(const ComparisonReport& rep) {
    std::ostringstream os;
    auto header = [&](const char* title) {
        os << title << "\ncontroller";
        for (const auto& id : rep.scenario_ids) os << ',' << id;
        os << '\n';
    };
    header("# convergence time [s]");
    for (ControllerKind c : {ControllerKind::fixed_consensus, ControllerKind::linear_feedback, ControllerKind::lookup}) {
        os << to_string(c);
        for (std::size_t s = 0; s < rep.scenario_ids.size(); ++s)
            os << ',' << format_optional_time(rep.row(s, c).metrics.t_consensus);
        os << '\n';
    }
    header("# maximum |jerk| [m/s^3]");
    for (ControllerKind c : {ControllerKind::fixed_consensus, ControllerKind::linear_feedback, ControllerKind::lookup}) {
        os << to_string(c);
        for (std::size_t s = 0; s < rep.scenario_ids.size(); ++s)
            os << ',' << report_number(ComparisonReport::peak_jerk(rep.row(s, c)));
        os << '\n';
    }
    os << "# ordering\n";
    for (std::size_t s = 0; s < rep.scenario_ids.size(); ++s) {
        os << rep.scenario_ids[s]
           << ": lookup<fixed_consensus=" << (rep.lookup_faster(s, ControllerKind::fixed_consensus) ? "yes" : "no")
           << " lookup<linear_feedback=" << (rep.lookup_faster(s, ControllerKind::linear_feedback) ? "yes" : "no")
           << '\n';
    }
    return os.str();
}

namespace config {

inline ScenarioConfig parse_scenario(const Tree& t, const std::string& fallback_id = "scenario") {
    ScenarioConfig s;
    s.id = t.get<std::string>("scenario.id", fallback_id);
    s.initial.dr0 = required_number(t, "scenario.dr0");
    s.initial.vi0 = required_number(t, "scenario.vi0");
    s.initial.vj0 = required_number(t, "scenario.vj0");
    s.duration = number(t, "scenario.duration", s.duration);
    s.leader_profile = trim(t.get<std::string>("scenario.leader_profile", s.leader_profile));
    try {
        s.controller = parse_controller(trim(t.get<std::string>("scenario.controller", "lookup")));
        if (t.get_child_optional("fixed_consensus"))
            s.fixed_gains = parse_gain_pair(t, "fixed_consensus", BaselineConfig{}.fixed_consensus);
        if (t.get_child_optional("linear_feedback"))
            s.linear_gains = parse_linear_gains(t, "linear_feedback", BaselineConfig{}.linear_feedback);
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return s;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    return parse_scenario(read_file(path), std::filesystem::path(path).stem().string());
}

inline BaselineConfig parse_baselines(const Tree& t) {
    BaselineConfig b;
    b.fixed_consensus = parse_gain_pair(t, "fixed_consensus", b.fixed_consensus);
    b.linear_feedback = parse_linear_gains(t, "linear_feedback", b.linear_feedback);
    b.fallback = parse_linear_gains(t, "fallback", b.fallback);
    return b;
}

/// Scenario files listed under [suite] scenarios, resolved relative to the
/// baselines file; the four reference scenarios when absent.
inline std::vector<ScenarioConfig> suite_scenarios(const Tree& baselines_tree, const std::string& baselines_path) {
    const auto list = baselines_tree.get_optional<std::string>("suite.scenarios");
    if (!list) return reference_scenarios();
    std::vector<ScenarioConfig> out;
    for (auto part : io::split(*list, ',')) {
        const std::string p = trim(part);
        if (!p.empty()) out.push_back(load_scenario(resolve_path(baselines_path, p)));
    }
    if (out.empty()) throw ConfigError("suite.scenarios lists no files");
    return out;
}

inline HarnessSettings parse_harness_settings(const Tree& t) {
    return HarnessSettings{parse_build_config(t), jerk_skip_steps(t)};
}

}  // namespace config

}  // namespace cacc
