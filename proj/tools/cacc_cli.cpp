#include <exception>
#include <iostream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Lookup-table gain scheduling for consensus-based longitudinal vehicle control"};
    app.require_subcommand(1);

    cacc::cli::BuildTableOptions build;
    build.workers = std::max(1u, std::thread::hardware_concurrency());
    auto* build_cmd = app.add_subcommand("build-table", "Build the gain table by exhaustive candidate search");
    build_cmd->add_option("--axes", build.axes, "Axis grid file")->required()->check(CLI::ExistingFile);
    build_cmd->add_option("--candidates", build.candidates, "Candidate gain sets file")->required()->check(CLI::ExistingFile);
    build_cmd->add_option("--config", build.config, "Simulation settings file")->required()->check(CLI::ExistingFile);
    build_cmd->add_option("--out", build.out, "Output table file")->required();
    build_cmd->add_option("--workers", build.workers, "Worker threads")->check(CLI::PositiveNumber);

    cacc::cli::RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Simulate one scenario");
    run_cmd->add_option("--scenario", run.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--config", run.config, "Simulation settings file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--table", run.table, "Gain table (lookup controller)")->check(CLI::ExistingFile);
    run_cmd->add_option("--baselines", run.baselines, "Baseline and fallback gains")->check(CLI::ExistingFile);
    run_cmd->add_option("--out-dir", run.out_dir, "Output directory")->required();
    run_cmd->add_flag("--allow-unsafe", run.allow_unsafe, "Exit 0 even if the safety check fails");

    cacc::cli::SuiteOptions suite;
    auto* suite_cmd = app.add_subcommand("suite", "Run all controllers on the scenario suite");
    suite_cmd->add_option("--table", suite.table, "Gain table")->required()->check(CLI::ExistingFile);
    suite_cmd->add_option("--config", suite.config, "Simulation settings file")->required()->check(CLI::ExistingFile);
    suite_cmd->add_option("--baselines", suite.baselines, "Baselines file")->required()->check(CLI::ExistingFile);
    suite_cmd->add_option("--out-dir", suite.out_dir, "Output directory")->required();

    cacc::cli::StabilityOptions stab;
    auto* stab_cmd = app.add_subcommand("stability", "String stability sweep and gamma bound");
    auto* stab_table = stab_cmd->add_option("--table", stab.table, "Check every valid gain pair in a table")
                           ->check(CLI::ExistingFile);
    stab_cmd->add_option("--sweep", stab.sweep, "Frequency sweep file")->check(CLI::ExistingFile);
    auto* gamma_opt = stab_cmd->add_option("--gamma", stab.gamma, "Coupling gain gamma");
    auto* k_opt = stab_cmd->add_option("--k", stab.k, "Gain k");
    stab_cmd->add_option("--tg", stab.time_gap, "Time gap [s] (ignored with --table)");
    stab_cmd->add_option("--tau", stab.tau, "Communication delay [s] (ignored with --table)");
    stab_cmd->add_option("--adjacency", stab.adjacency, "a_ij")->check(CLI::Range(0, 1));
    stab_cmd->add_option("--vehicles", stab.vehicles, "String length used for the gamma bound")->check(CLI::Range(2, 17));
    gamma_opt->excludes(stab_table)->needs(k_opt);
    k_opt->excludes(stab_table)->needs(gamma_opt);

    cacc::cli::InspectOptions inspect;
    std::vector<std::size_t> cell;
    auto* inspect_cmd = app.add_subcommand("inspect-table", "Summarize a gain table or print one cell");
    inspect_cmd->add_option("table", inspect.table, "Gain table")->required()->check(CLI::ExistingFile);
    inspect_cmd->add_option("--cell", cell, "Cell indices i1 i2 i3")->expected(3);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build_cmd) return cacc::cli::build_table_cmd(build, std::cout);
        if (*run_cmd) return cacc::cli::run_cmd(run, std::cout);
        if (*suite_cmd) return cacc::cli::suite_cmd(suite, std::cout);
        if (*stab_cmd) return cacc::cli::stability_cmd(stab, std::cout);
        if (*inspect_cmd) {
            if (!cell.empty()) inspect.cell = std::array<std::size_t, 3>{cell[0], cell[1], cell[2]};
            return cacc::cli::inspect_cmd(inspect, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
