#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cacc/controllers.hpp"
#include "cacc/metrics.hpp"
#include "cacc/simulation.hpp"

namespace cacc {

/// Strictly ascending grid of one table axis.
class AxisGrid {
public:
    AxisGrid() = default;
    explicit AxisGrid(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw std::invalid_argument("AxisGrid: at least one value required");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) throw std::invalid_argument("AxisGrid: values must be finite");
            if (i > 0 && !(values_[i] > values_[i - 1]))
                throw std::invalid_argument("AxisGrid: values must be strictly ascending");
        }
    }

    /// first, first + step, ..., last (inclusive). The count is rounded so
    /// that e.g. -100:10:100 yields exactly 21 values.
    static AxisGrid range(double first, double step_size, double last) {
        if (!(step_size > 0.0) || last < first) throw std::invalid_argument("AxisGrid::range: bad range");
        const auto n = static_cast<std::size_t>(std::floor((last - first) / step_size + 1e-9)) + 1;
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = first + static_cast<double>(i) * step_size;
        return AxisGrid(std::move(v));
    }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }
    const std::vector<double>& values() const { return values_; }

    bool contains(double x) const { return x >= values_.front() && x <= values_.back(); }

    /// Index of the grid value closest to x; exact midpoints go to the
    /// smaller value. x must lie within [front, back].
    std::size_t nearest(double x) const {
        const auto it = std::lower_bound(values_.begin(), values_.end(), x);
        if (it == values_.begin()) return 0;
        if (it == values_.end()) return values_.size() - 1;
        const auto hi = static_cast<std::size_t>(it - values_.begin());
        const std::size_t lo = hi - 1;
        return std::abs(values_[hi] - x) < std::abs(x - values_[lo]) ? hi : lo;
    }

    friend bool operator==(const AxisGrid&, const AxisGrid&) = default;

private:
    std::vector<double> values_;
};

struct TableAxes {
    AxisGrid dr;  // delayed-leader minus follower position [m]
    AxisGrid vi;  // follower speed [m/s]
    AxisGrid vj;  // delayed leader speed [m/s]

    std::size_t cell_count() const { return dr.size() * vi.size() * vj.size(); }
    friend bool operator==(const TableAxes&, const TableAxes&) = default;
};

struct CandidateSets {
    std::vector<double> gammas;
    std::vector<double> ks;

    void validate() const {
        auto check = [](const std::vector<double>& v, const char* name) {
            if (v.empty()) throw std::invalid_argument(std::string("CandidateSets: ") + name + " is empty");
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!(v[i] > 0.0) || !std::isfinite(v[i]))
                    throw std::invalid_argument(std::string("CandidateSets: ") + name + " values must be positive");
                if (i > 0 && !(v[i] > v[i - 1]))
                    throw std::invalid_argument(std::string("CandidateSets: ") + name + " must be strictly ascending");
            }
        };
        check(gammas, "gamma");
        check(ks, "k");
    }

    bool contains(const GainPair& g) const {
        return g.valid && std::find(gammas.begin(), gammas.end(), g.gamma) != gammas.end() &&
               std::find(ks.begin(), ks.end(), g.k) != ks.end();
    }

    friend bool operator==(const CandidateSets&, const CandidateSets&) = default;
};

/// Settings shared by every candidate simulation of a table build.
struct BuildConfig {
    double dt = 0.01;
    double t_max = 120.0;
    double comm_delay = 0.06;
    double leader_length = 5.0;
    double time_gap = 0.7;
    ConsensusThresholds thresholds;
    ComfortWeights weights;
    SafetyMode safety_mode = SafetyMode::projected;
    double hold_window = 1.0;

    void validate() const {
        sim_settings().validate();
        thresholds.validate();
        weights.validate();
        if (!(hold_window >= 0.0)) throw std::invalid_argument("BuildConfig: hold_window must be non-negative");
        whole_steps(hold_window, dt, "hold_window");
        if (!(t_max > hold_window)) throw std::invalid_argument("BuildConfig: t_max must exceed hold_window");
    }

    SimSettings sim_settings() const { return SimSettings{dt, comm_delay, leader_length, time_gap, std::nullopt}; }

    EvaluationOptions evaluation_options() const {
        EvaluationOptions opt;
        opt.leader_length = leader_length;
        opt.time_gap = time_gap;
        opt.comm_delay = comm_delay;
        opt.thresholds = thresholds;
        opt.weights = weights;
        opt.safety_mode = safety_mode;
        opt.hold_window = hold_window;
        return opt;
    }

    friend bool operator==(const BuildConfig& a, const BuildConfig& b) {
        return a.dt == b.dt && a.t_max == b.t_max && a.comm_delay == b.comm_delay &&
               a.leader_length == b.leader_length && a.time_gap == b.time_gap &&
               a.thresholds.eta_r == b.thresholds.eta_r && a.thresholds.eta_v == b.thresholds.eta_v &&
               a.thresholds.delta_a == b.thresholds.delta_a && a.thresholds.delta_jerk == b.thresholds.delta_jerk &&
               a.weights.omega_1 == b.weights.omega_1 && a.weights.omega_2 == b.weights.omega_2 &&
               a.safety_mode == b.safety_mode && a.hold_window == b.hold_window;
    }
};

/// Dense 3-D gain table, row-major with the dr index outermost.
struct GainTable {
    static constexpr int kFormatVersion = 1;

    TableAxes axes;
    CandidateSets candidates;
    BuildConfig meta;
    std::vector<GainPair> cells;

    std::size_t index(std::size_t i1, std::size_t i2, std::size_t i3) const {
        return (i1 * axes.vi.size() + i2) * axes.vj.size() + i3;
    }
    const GainPair& at(std::size_t i1, std::size_t i2, std::size_t i3) const {
        if (i1 >= axes.dr.size() || i2 >= axes.vi.size() || i3 >= axes.vj.size())
            throw std::out_of_range("GainTable::at: cell index out of range");
        return cells[index(i1, i2, i3)];
    }
    std::array<std::size_t, 3> unravel(std::size_t flat) const {
        const std::size_t n3 = axes.vj.size();
        const std::size_t n2 = axes.vi.size();
        return {flat / (n2 * n3), (flat / n3) % n2, flat % n3};
    }
    InitialCondition cell_condition(std::size_t flat) const {
        const auto [i1, i2, i3] = unravel(flat);
        return InitialCondition{axes.dr[i1], axes.vi[i2], axes.vj[i3]};
    }
    std::size_t valid_count() const {
        return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const GainPair& g) { return g.valid; }));
    }

    /// Throws if the cell count or any valid cell disagrees with the axes and candidates.
    void validate() const {
        candidates.validate();
        if (cells.size() != axes.cell_count())
            throw std::invalid_argument("GainTable: cell count " + std::to_string(cells.size()) +
                                        " does not match axes (" + std::to_string(axes.cell_count()) + ")");
        for (const GainPair& g : cells)
            if (g.valid && !candidates.contains(g))
                throw std::invalid_argument("GainTable: valid cell holds gains outside the candidate sets");
    }

    friend bool operator==(const GainTable&, const GainTable&) = default;
};

/// Result of simulating one (gamma, k) candidate from one initial condition.
struct CandidateOutcome {
    GainPair gains;
    RunMetrics metrics;
};

/// Simulates a candidate for up to t_max seconds, stopping as soon as the
/// outcome is settled. `scratch` is reused between calls.
inline CandidateOutcome evaluate_candidate(const InitialCondition& ic, const GainPair& gains, const BuildConfig& cfg,
                                           Trajectory& scratch) {
    const EvaluationOptions opt = cfg.evaluation_options();
    simulate(
        ic, cfg.sim_settings(), cfg.t_max, [&gains](const ControllerInput& in, double) { return consensus_accel(in, gains); },
        scratch, SettleDetector(opt, cfg.dt));
    return CandidateOutcome{gains, evaluate_run(scratch, opt)};
}

/// Picks the ideal gains among evaluated candidates:
///   1. drop candidates violating the safety constraint (none left: sentinel);
///   2. keep those with the earliest convergence; candidates that never
///      converge are not eligible (none left: sentinel);
///   3. break ties by the smallest comfort score Omega;
///   4. break remaining ties by the lexicographically smallest (gamma, k).
inline GainPair select_gains(std::span<const CandidateOutcome> outcomes) {
    const CandidateOutcome* best = nullptr;
    for (const CandidateOutcome& c : outcomes) {
        if (c.metrics.safety_violated || !c.metrics.t_consensus) continue;
        if (best == nullptr) {
            best = &c;
            continue;
        }
        const double t = *c.metrics.t_consensus;
        const double tb = *best->metrics.t_consensus;
        if (t != tb) {
            if (t < tb) best = &c;
            continue;
        }
        if (c.metrics.omega != best->metrics.omega) {
            if (c.metrics.omega < best->metrics.omega) best = &c;
            continue;
        }
        if (c.gains.gamma < best->gains.gamma || (c.gains.gamma == best->gains.gamma && c.gains.k < best->gains.k))
            best = &c;
    }
    return best ? best->gains : GainPair::invalid();
}

/// Evaluates every candidate pair for one initial condition, in (gamma, k) order.
inline std::vector<CandidateOutcome> evaluate_cell(const InitialCondition& ic, const CandidateSets& candidates,
                                                   const BuildConfig& cfg, Trajectory& scratch) {
    std::vector<CandidateOutcome> outcomes;
    outcomes.reserve(candidates.gammas.size() * candidates.ks.size());
    for (double gamma : candidates.gammas)
        for (double k : candidates.ks) outcomes.push_back(evaluate_candidate(ic, GainPair::make(k, gamma), cfg, scratch));
    return outcomes;
}

/// Offline table build by exhaustive search over the candidate sets. Cells are
/// independent; with workers > 1 they are distributed over threads and each
/// result lands in its own slot, so the table does not depend on the worker count.
inline GainTable build_table(const TableAxes& axes, const CandidateSets& candidates, const BuildConfig& cfg,
                             unsigned workers = 1) {
    candidates.validate();
    cfg.validate();
    GainTable table{axes, candidates, cfg, std::vector<GainPair>(axes.cell_count())};

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        Trajectory scratch;
        try {
            for (std::size_t cell = next++; cell < table.cells.size(); cell = next++) {
                const auto outcomes = evaluate_cell(table.cell_condition(cell), candidates, cfg, scratch);
                table.cells[cell] = select_gains(outcomes);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = table.cells.size();
        }
    };

    workers = std::max(1u, workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return table;
}

/// Online nearest-neighbour query. Returns nullopt when any coordinate lies
/// outside its axis range; otherwise the nearest cell's pair, which may be
/// the sentinel.
inline std::optional<GainPair> lookup(const GainTable& table, double dr, double vi, double vj) {
    if (!table.axes.dr.contains(dr) || !table.axes.vi.contains(vi) || !table.axes.vj.contains(vj)) return std::nullopt;
    return table.at(table.axes.dr.nearest(dr), table.axes.vi.nearest(vi), table.axes.vj.nearest(vj));
}

}  // namespace cacc
