#pragma once

#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cacc/gain_table.hpp"
#include "cacc/stability.hpp"
#include "cacc/table_io.hpp"

namespace cacc::config {

using Tree = boost::property_tree::ptree;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads `key = value` text with `[section]` headers.
inline Tree read_file(const std::string& path) {
    Tree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    return tree;
}

inline Tree read_string(const std::string& text) {
    Tree tree;
    std::istringstream is(text);
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    return tree;
}

inline double number(const Tree& t, const std::string& key, double fallback) {
    const auto v = t.get_optional<std::string>(key);
    if (!v) return fallback;
    const auto x = io::parse_double(*v);
    if (!x || std::isnan(*x)) throw ConfigError("'" + key + "': expected a number, got '" + *v + "'");
    return *x;
}

inline double required_number(const Tree& t, const std::string& key) {
    if (!t.get_optional<std::string>(key)) throw ConfigError("missing required key '" + key + "'");
    return number(t, key, 0.0);
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

/// "a, b, c" or the inclusive range form "first:step:last".
inline std::vector<double> number_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    const auto colon = io::split(text, ':');
    if (colon.size() == 3) {
        const auto a = io::parse_double(trim(colon[0]));
        const auto s = io::parse_double(trim(colon[1]));
        const auto b = io::parse_double(trim(colon[2]));
        if (!a || !s || !b) throw ConfigError("'" + key + "': malformed range '" + text + "'");
        try {
            return AxisGrid::range(*a, *s, *b).values();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("'" + key + "': " + e.what());
        }
    }
    for (auto part : io::split(text, ',')) {
        const auto x = io::parse_double(trim(part));
        if (!x || std::isnan(*x)) throw ConfigError("'" + key + "': bad list entry '" + std::string(part) + "'");
        out.push_back(*x);
    }
    return out;
}

inline std::vector<double> required_list(const Tree& t, const std::string& key) {
    const auto v = t.get_optional<std::string>(key);
    if (!v) throw ConfigError("missing required key '" + key + "'");
    return number_list(*v, key);
}

inline TableAxes parse_axes(const Tree& t) {
    try {
        return TableAxes{AxisGrid(required_list(t, "axes.dr")), AxisGrid(required_list(t, "axes.vi")),
                         AxisGrid(required_list(t, "axes.vj"))};
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("axes: ") + e.what());
    }
}

inline CandidateSets parse_candidates(const Tree& t) {
    CandidateSets c{required_list(t, "candidates.gamma"), required_list(t, "candidates.k")};
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

/// Simulation and metric settings. Missing keys keep their defaults.
inline BuildConfig parse_build_config(const Tree& t) {
    BuildConfig c;
    c.dt = number(t, "simulation.dt", c.dt);
    c.t_max = number(t, "simulation.t_max", c.t_max);
    c.comm_delay = number(t, "simulation.comm_delay", c.comm_delay);
    c.leader_length = number(t, "simulation.leader_length", c.leader_length);
    c.time_gap = number(t, "simulation.time_gap", c.time_gap);
    c.hold_window = number(t, "simulation.hold_window", c.hold_window);
    if (auto mode = t.get_optional<std::string>("simulation.safety_mode")) {
        try {
            c.safety_mode = parse_safety_mode(trim(*mode));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    c.thresholds.eta_r = number(t, "thresholds.eta_r", c.thresholds.eta_r);
    c.thresholds.eta_v = number(t, "thresholds.eta_v", c.thresholds.eta_v);
    c.thresholds.delta_a = number(t, "thresholds.delta_a", c.thresholds.delta_a);
    c.thresholds.delta_jerk = number(t, "thresholds.delta_jerk", c.thresholds.delta_jerk);
    c.weights.omega_1 = number(t, "weights.omega_1", c.weights.omega_1);
    c.weights.omega_2 = number(t, "weights.omega_2", c.weights.omega_2);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline int jerk_skip_steps(const Tree& t) {
    const double v = number(t, "metrics.jerk_skip_steps", 1.0);
    if (v < 0.0 || v != std::floor(v)) throw ConfigError("metrics.jerk_skip_steps must be a non-negative integer");
    return static_cast<int>(v);
}

inline FrequencySweep parse_sweep(const Tree& t) {
    FrequencySweep s;
    s.omega_min = number(t, "sweep.omega_min", s.omega_min);
    s.omega_max = number(t, "sweep.omega_max", s.omega_max);
    const double points = number(t, "sweep.points", static_cast<double>(s.points));
    if (points < 2.0 || points != std::floor(points)) throw ConfigError("sweep.points must be an integer >= 2");
    s.points = static_cast<std::size_t>(points);
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return s;
}

inline GainPair parse_gain_pair(const Tree& t, const std::string& section, const GainPair& fallback) {
    const double k = number(t, section + ".k", fallback.k);
    const double gamma = number(t, section + ".gamma", fallback.gamma);
    try {
        return GainPair::make(k, gamma);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(section + ": " + e.what());
    }
}

inline LinearFeedbackGains parse_linear_gains(const Tree& t, const std::string& section, const LinearFeedbackGains& d) {
    LinearFeedbackGains g;
    g.k_a = number(t, section + ".k_a", d.k_a);
    g.k_v = number(t, section + ".k_v", d.k_v);
    g.k_d = number(t, section + ".k_d", d.k_d);
    g.standstill_gap = number(t, section + ".standstill_gap", d.standstill_gap);
    try {
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(section + ": " + e.what());
    }
    return g;
}

/// Resolves `relative` against the directory holding `anchor_file`.
inline std::string resolve_path(const std::string& anchor_file, const std::string& relative) {
    const std::filesystem::path p(relative);
    if (p.is_absolute()) return p.string();
    return (std::filesystem::path(anchor_file).parent_path() / p).lexically_normal().string();
}

}  // namespace cacc::config
