#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cacc/config.hpp"
#include "cacc/gain_table.hpp"
#include "cacc/scenario.hpp"
#include "cacc/stability.hpp"
#include "cacc/table_io.hpp"

namespace cacc::cli {

struct BuildTableOptions {
    std::string axes, candidates, config, out;
    unsigned workers = 1;
};

inline int build_table_cmd(const BuildTableOptions& o, std::ostream& log) {
    const TableAxes axes = config::parse_axes(config::read_file(o.axes));
    const CandidateSets candidates = config::parse_candidates(config::read_file(o.candidates));
    const BuildConfig cfg = config::parse_build_config(config::read_file(o.config));
    const auto start = std::chrono::steady_clock::now();
    const GainTable table = build_table(axes, candidates, cfg, o.workers);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    save_table(table, o.out);
    log << "built " << table.cells.size() << " cells (" << table.valid_count() << " valid, "
        << table.cells.size() - table.valid_count() << " sentinel) in " << report_number(secs) << " s with "
        << o.workers << " worker(s) -> " << o.out << '\n';
    return 0;
}

struct RunOptions {
    std::string scenario, config, out_dir;
    std::optional<std::string> table, baselines;
    bool allow_unsafe = false;
};

inline std::string trajectory_file_name(const RunReport& r) {
    return r.scenario_id + "_" + std::string(to_string(r.controller)) + ".csv";
}

/// Returns 2 on a safety violation unless allow_unsafe is set.
inline int run_cmd(const RunOptions& o, std::ostream& log) {
    const ScenarioConfig scenario = config::load_scenario(o.scenario);
    const HarnessSettings settings = config::parse_harness_settings(config::read_file(o.config));
    const BaselineConfig baselines = o.baselines ? config::parse_baselines(config::read_file(*o.baselines)) : BaselineConfig{};
    std::optional<GainTable> table;
    if (o.table) table = load_table(*o.table);

    ScenarioResult result = run_scenario(scenario, settings, table ? &*table : nullptr, baselines);
    std::filesystem::create_directories(o.out_dir);
    const std::filesystem::path traj_path = std::filesystem::path(o.out_dir) / trajectory_file_name(result.report);
    result.report.trajectory_path = traj_path.string();
    {
        std::ofstream os(traj_path, std::ios::binary);
        write_trajectory_csv(os, result.trajectory, settings.evaluation_options());
    }
    {
        std::ofstream os(std::filesystem::path(o.out_dir) / (scenario.id + "_report.csv"), std::ios::binary);
        write_report_csv(os, {result.report});
    }
    log << kReportHeader << '\n' << report_row(result.report) << '\n';
    if (result.report.fallback_engaged) log << "note: gain lookup returned no usable gains; fallback controller engaged\n";
    if (result.report.metrics.safety_violated) {
        log << "safety violation: gap fell to the leader length or below (min_gap="
            << report_number(result.report.metrics.min_gap) << ")\n";
        if (!o.allow_unsafe) return 2;
    }
    return 0;
}

struct SuiteOptions {
    std::string table, config, baselines, out_dir;
};

inline int suite_cmd(const SuiteOptions& o, std::ostream& log) {
    const GainTable table = load_table(o.table);
    const HarnessSettings settings = config::parse_harness_settings(config::read_file(o.config));
    const auto btree = config::read_file(o.baselines);
    const BaselineConfig baselines = config::parse_baselines(btree);
    const std::vector<ScenarioConfig> scenarios = config::suite_scenarios(btree, o.baselines);

    std::vector<Trajectory> trajectories;
    ComparisonReport rep = run_suite(table, settings, baselines, scenarios, &trajectories);
    std::filesystem::create_directories(o.out_dir);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto path = std::filesystem::path(o.out_dir) / trajectory_file_name(rep.rows[i]);
        rep.rows[i].trajectory_path = path.string();
        std::ofstream os(path, std::ios::binary);
        write_trajectory_csv(os, trajectories[i], settings.evaluation_options());
    }
    {
        std::ofstream os(std::filesystem::path(o.out_dir) / "comparison.csv", std::ios::binary);
        write_report_csv(os, rep.rows);
    }
    const std::string summary = format_comparison_summary(rep);
    {
        std::ofstream os(std::filesystem::path(o.out_dir) / "summary.txt", std::ios::binary);
        os << summary;
    }
    log << summary;
    return 0;
}

struct StabilityOptions {
    std::optional<std::string> table, sweep;
    std::optional<double> gamma, k;
    double time_gap = 0.7;
    double tau = 0.06;
    int adjacency = 1;
    std::size_t vehicles = 4;
};

namespace detail {
inline bool report_pair(const GainPair& g, const StabilityOptions& o, double time_gap, double tau,
                        const FrequencySweep& sweep, std::ostream& log) {
    const auto res = string_stability_margin(g, o.adjacency, time_gap, tau, sweep);
    const std::vector<double> adj(o.vehicles - 1, static_cast<double>(o.adjacency));
    const std::vector<double> ks(o.vehicles - 1, g.k);
    const double bound = gamma_lower_bound(TopologyMatrix::diagonal(adj, ks));
    const bool gamma_ok = g.gamma > bound;
    log << "k=" << io::format_double(g.k) << " gamma=" << io::format_double(g.gamma)
        << " max|G|=" << report_number(res.max_magnitude) << " at w=" << report_number(res.worst_omega)
        << " string_stable=" << (res.string_stable() ? "yes" : "no") << " gamma_bound=" << report_number(bound)
        << " (diagonal-adjacency, n=" << o.vehicles - 1 << ") gamma_ok=" << (gamma_ok ? "yes" : "no");
    if (!res.skipped.empty()) log << " skipped=" << res.skipped.size();
    log << '\n';
    return res.string_stable() && gamma_ok;
}
}  // namespace detail

/// Returns 3 if any checked pair fails either test.
inline int stability_cmd(const StabilityOptions& o, std::ostream& log) {
    if (o.vehicles < 2) throw std::invalid_argument("--vehicles must be at least 2");
    const FrequencySweep sweep = o.sweep ? config::parse_sweep(config::read_file(*o.sweep)) : FrequencySweep{};
    log << "transfer magnitude uses the low-frequency spacing-error ratio; sweep " << report_number(sweep.omega_min)
        << ".." << report_number(sweep.omega_max) << " rad/s, " << sweep.points << " log-spaced points\n";
    bool ok = true;
    if (o.table) {
        const GainTable table = load_table(*o.table);
        std::map<std::pair<double, double>, std::size_t> pairs;  // (gamma, k) -> cell count
        for (const GainPair& g : table.cells)
            if (g.valid) ++pairs[{g.gamma, g.k}];
        for (const auto& [key, count] : pairs) {
            log << "[" << count << " cells] ";
            ok = detail::report_pair(GainPair::make(key.second, key.first), o, table.meta.time_gap, table.meta.comm_delay,
                                     sweep, log) && ok;
        }
    } else {
        if (!o.gamma || !o.k) throw std::invalid_argument("stability: pass --table, or both --gamma and --k");
        ok = detail::report_pair(GainPair::make(*o.k, *o.gamma), o, o.time_gap, o.tau, sweep, log);
    }
    return ok ? 0 : 3;
}

struct InspectOptions {
    std::string table;
    std::optional<std::array<std::size_t, 3>> cell;
};

inline int inspect_cmd(const InspectOptions& o, std::ostream& log) {
    const GainTable t = load_table(o.table);
    if (o.cell) {
        const auto [i1, i2, i3] = *o.cell;
        const GainPair& g = t.at(i1, i2, i3);
        log << "cell " << i1 << ' ' << i2 << ' ' << i3 << " (dr=" << io::format_double(t.axes.dr[i1])
            << ", vi=" << io::format_double(t.axes.vi[i2]) << ", vj=" << io::format_double(t.axes.vj[i3]) << "): "
            << (g.valid ? "k=" + io::format_double(g.k) + " gamma=" + io::format_double(g.gamma) : std::string("sentinel"))
            << '\n';
        return 0;
    }
    log << "format version " << GainTable::kFormatVersion << '\n'
        << "axes: dr " << t.axes.dr.size() << " [" << io::format_double(t.axes.dr.front()) << ", "
        << io::format_double(t.axes.dr.back()) << "], vi " << t.axes.vi.size() << " ["
        << io::format_double(t.axes.vi.front()) << ", " << io::format_double(t.axes.vi.back()) << "], vj "
        << t.axes.vj.size() << " [" << io::format_double(t.axes.vj.front()) << ", "
        << io::format_double(t.axes.vj.back()) << "]\n"
        << "candidates: gamma=" << io::join(t.candidates.gammas) << " k=" << io::join(t.candidates.ks) << '\n'
        << "settings: dt=" << io::format_double(t.meta.dt) << " tmax=" << io::format_double(t.meta.t_max)
        << " tau=" << io::format_double(t.meta.comm_delay) << " mode=" << to_string(t.meta.safety_mode)
        << " hold=" << io::format_double(t.meta.hold_window) << '\n'
        << "selection: safe -> earliest convergence -> smallest Omega -> lexicographic (gamma, k)\n"
        << "cells: " << t.cells.size() << " (" << t.valid_count() << " valid, " << t.cells.size() - t.valid_count()
        << " sentinel)\n";
    std::map<std::pair<double, double>, std::size_t> hist;
    for (const GainPair& g : t.cells)
        if (g.valid) ++hist[{g.gamma, g.k}];
    for (const auto& [key, count] : hist)
        log << "  gamma=" << io::format_double(key.first) << " k=" << io::format_double(key.second) << ": " << count << '\n';
    return 0;
}

}  // namespace cacc::cli
