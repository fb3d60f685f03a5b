// Builds a small gain table around one initial condition, looks up gains for
// a nearby query and runs the consensus controller with them.
#include <cstdio>

#include "cacc/gain_table.hpp"
#include "cacc/scenario.hpp"

int main() {
    using namespace cacc;
    const TableAxes axes{AxisGrid::range(40, 10, 60), AxisGrid::range(26, 2, 30), AxisGrid::range(12, 2, 16)};
    const CandidateSets candidates{{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {0.1}};
    const GainTable table = build_table(axes, candidates, BuildConfig{});

    const auto gains = lookup(table, 52.4, 27.1, 14.8);
    if (!gains || !gains->valid) {
        std::puts("no usable gains; a fallback controller would take over");
        return 0;
    }
    std::printf("gains for (52.4, 27.1, 14.8): k=%g gamma=%g\n", gains->k, gains->gamma);

    ScenarioConfig scenario;
    scenario.id = "demo";
    scenario.initial = {52.4, 27.1, 14.8};
    scenario.duration = 80;
    const ScenarioResult run = run_scenario(scenario, HarnessSettings{}, &table);
    std::printf("%s\n%s\n", std::string(kReportHeader).c_str(), report_row(run.report).c_str());
}
