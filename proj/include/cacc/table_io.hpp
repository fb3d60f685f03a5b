#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <initializer_list>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cacc/gain_table.hpp"

namespace cacc {

/// Load failure with a machine-checkable category.
class TableFormatError : public std::runtime_error {
public:
    enum class Kind { io, version_mismatch, malformed_header, malformed_row, count_mismatch, invalid_cell };

    TableFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

namespace io {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "NaN";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return x;
}

inline std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

}  // namespace io

/// Writes the line-oriented text format:
///   gaintable-v1
///   axes dr=... vi=... vj=...
///   candidates gamma=... k=...
///   meta dt=... tmax=... tau=... lj=... tg=... eta_r=... eta_v=... delta_a=... delta_jerk=... w1=... w2=... mode=... hold=...
///   cell i1 i2 i3 k gamma        (one per cell, i1 outermost; NaN for sentinels)
inline void save_table(const GainTable& table, std::ostream& os) {
    using io::format_double;
    const BuildConfig& m = table.meta;
    std::string out;
    out += "gaintable-v" + std::to_string(GainTable::kFormatVersion) + "\n";
    out += "axes dr=" + io::join(table.axes.dr.values()) + " vi=" + io::join(table.axes.vi.values()) +
           " vj=" + io::join(table.axes.vj.values()) + "\n";
    out += "candidates gamma=" + io::join(table.candidates.gammas) + " k=" + io::join(table.candidates.ks) + "\n";
    out += "meta dt=" + format_double(m.dt) + " tmax=" + format_double(m.t_max) + " tau=" + format_double(m.comm_delay) +
           " lj=" + format_double(m.leader_length) + " tg=" + format_double(m.time_gap) +
           " eta_r=" + format_double(m.thresholds.eta_r) + " eta_v=" + format_double(m.thresholds.eta_v) +
           " delta_a=" + format_double(m.thresholds.delta_a) + " delta_jerk=" + format_double(m.thresholds.delta_jerk) +
           " w1=" + format_double(m.weights.omega_1) + " w2=" + format_double(m.weights.omega_2) +
           " mode=" + std::string(to_string(m.safety_mode)) + " hold=" + format_double(m.hold_window) + "\n";
    for (std::size_t flat = 0; flat < table.cells.size(); ++flat) {
        const auto [i1, i2, i3] = table.unravel(flat);
        const GainPair& g = table.cells[flat];
        out += "cell " + std::to_string(i1) + ' ' + std::to_string(i2) + ' ' + std::to_string(i3) + ' ' +
               (g.valid ? format_double(g.k) : "NaN") + ' ' + (g.valid ? format_double(g.gamma) : "NaN") + '\n';
    }
    os << out;
    if (!os) throw TableFormatError(TableFormatError::Kind::io, "failed writing gain table");
}

inline void save_table(const GainTable& table, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw TableFormatError(TableFormatError::Kind::io, "cannot open '" + path + "' for writing");
    save_table(table, os);
}

inline std::string to_text(const GainTable& table) {
    std::ostringstream os;
    save_table(table, os);
    return os.str();
}

namespace detail {

/// Parses "tag key=value key=value ..." into a map, requiring exactly `keys`.
inline std::map<std::string, std::string, std::less<>> parse_keyed_line(const std::string& line, std::string_view tag,
                                                                        std::initializer_list<std::string_view> keys,
                                                                        int line_no) {
    using Kind = TableFormatError::Kind;
    const auto fields = io::split(line, ' ');
    if (fields.empty() || fields[0] != tag)
        throw TableFormatError(Kind::malformed_header,
                               "line " + std::to_string(line_no) + ": expected '" + std::string(tag) + "' line");
    std::map<std::string, std::string, std::less<>> kv;
    for (std::size_t i = 1; i < fields.size(); ++i) {
        const auto eq = fields[i].find('=');
        if (eq == std::string_view::npos)
            throw TableFormatError(Kind::malformed_header,
                                   "line " + std::to_string(line_no) + ": field '" + std::string(fields[i]) + "' lacks '='");
        kv.emplace(std::string(fields[i].substr(0, eq)), std::string(fields[i].substr(eq + 1)));
    }
    for (auto key : keys)
        if (kv.find(key) == kv.end())
            throw TableFormatError(Kind::malformed_header,
                                   "line " + std::to_string(line_no) + ": missing key '" + std::string(key) + "'");
    if (kv.size() != keys.size())
        throw TableFormatError(Kind::malformed_header, "line " + std::to_string(line_no) + ": unexpected keys");
    return kv;
}

inline double header_number(const std::map<std::string, std::string, std::less<>>& kv, std::string_view key, int line_no) {
    const auto it = kv.find(key);
    const auto v = io::parse_double(it->second);
    if (!v || std::isnan(*v))
        throw TableFormatError(TableFormatError::Kind::malformed_header,
                               "line " + std::to_string(line_no) + ": bad number for '" + std::string(key) + "'");
    return *v;
}

inline std::vector<double> header_list(const std::map<std::string, std::string, std::less<>>& kv, std::string_view key,
                                       int line_no) {
    std::vector<double> values;
    for (auto part : io::split(kv.find(key)->second, ',')) {
        const auto v = io::parse_double(part);
        if (!v || std::isnan(*v))
            throw TableFormatError(TableFormatError::Kind::malformed_header,
                                   "line " + std::to_string(line_no) + ": bad list entry for '" + std::string(key) + "'");
        values.push_back(*v);
    }
    return values;
}

}  // namespace detail

inline GainTable load_table(std::istream& is) {
    using Kind = TableFormatError::Kind;
    std::string line;
    int line_no = 0;
    auto next_line = [&](const char* what) {
        if (!std::getline(is, line))
            throw TableFormatError(Kind::malformed_header, std::string("unexpected end of file: missing ") + what + " line");
        ++line_no;
    };

    next_line("version");
    constexpr std::string_view kMagic = "gaintable-v";
    if (line.rfind(kMagic, 0) != 0) throw TableFormatError(Kind::malformed_header, "line 1: not a gain table file");
    {
        const std::string version = line.substr(kMagic.size());
        if (version != std::to_string(GainTable::kFormatVersion))
            throw TableFormatError(Kind::version_mismatch, "format version mismatch: file has version " + version +
                                                               ", expected " + std::to_string(GainTable::kFormatVersion));
    }

    GainTable table;
    try {
        next_line("axes");
        const auto axes = detail::parse_keyed_line(line, "axes", {"dr", "vi", "vj"}, line_no);
        table.axes.dr = AxisGrid(detail::header_list(axes, "dr", line_no));
        table.axes.vi = AxisGrid(detail::header_list(axes, "vi", line_no));
        table.axes.vj = AxisGrid(detail::header_list(axes, "vj", line_no));

        next_line("candidates");
        const auto cand = detail::parse_keyed_line(line, "candidates", {"gamma", "k"}, line_no);
        table.candidates.gammas = detail::header_list(cand, "gamma", line_no);
        table.candidates.ks = detail::header_list(cand, "k", line_no);
        table.candidates.validate();

        next_line("meta");
        const auto meta = detail::parse_keyed_line(line, "meta",
                                                   {"dt", "tmax", "tau", "lj", "tg", "eta_r", "eta_v", "delta_a",
                                                    "delta_jerk", "w1", "w2", "mode", "hold"},
                                                   line_no);
        BuildConfig& m = table.meta;
        m.dt = detail::header_number(meta, "dt", line_no);
        m.t_max = detail::header_number(meta, "tmax", line_no);
        m.comm_delay = detail::header_number(meta, "tau", line_no);
        m.leader_length = detail::header_number(meta, "lj", line_no);
        m.time_gap = detail::header_number(meta, "tg", line_no);
        m.thresholds.eta_r = detail::header_number(meta, "eta_r", line_no);
        m.thresholds.eta_v = detail::header_number(meta, "eta_v", line_no);
        m.thresholds.delta_a = detail::header_number(meta, "delta_a", line_no);
        m.thresholds.delta_jerk = detail::header_number(meta, "delta_jerk", line_no);
        m.weights.omega_1 = detail::header_number(meta, "w1", line_no);
        m.weights.omega_2 = detail::header_number(meta, "w2", line_no);
        m.safety_mode = parse_safety_mode(meta.find("mode")->second);
        m.hold_window = detail::header_number(meta, "hold", line_no);
    } catch (const std::invalid_argument& e) {
        throw TableFormatError(Kind::malformed_header, "line " + std::to_string(line_no) + ": " + e.what());
    }

    const std::size_t expected = table.axes.cell_count();
    table.cells.reserve(expected);
    std::size_t found = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (found == expected)
            throw TableFormatError(Kind::count_mismatch, "expected " + std::to_string(expected) +
                                                             " cell lines, found extra content at line " +
                                                             std::to_string(line_no));
        const auto f = io::split(line, ' ');
        const auto [e1, e2, e3] = table.unravel(found);
        auto index_ok = [](std::string_view s, std::size_t want) {
            std::size_t v = 0;
            const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            return r.ec == std::errc{} && r.ptr == s.data() + s.size() && v == want;
        };
        if (f.size() != 6 || f[0] != "cell" || !index_ok(f[1], e1) || !index_ok(f[2], e2) || !index_ok(f[3], e3))
            throw TableFormatError(Kind::malformed_row, "line " + std::to_string(line_no) + ": malformed cell row (expected 'cell " +
                                                            std::to_string(e1) + ' ' + std::to_string(e2) + ' ' +
                                                            std::to_string(e3) + " <k> <gamma>')");
        const auto k = io::parse_double(f[4]);
        const auto gamma = io::parse_double(f[5]);
        if (!k || !gamma)
            throw TableFormatError(Kind::malformed_row, "line " + std::to_string(line_no) + ": unparsable gain values");
        if (std::isnan(*k) != std::isnan(*gamma))
            throw TableFormatError(Kind::malformed_row,
                                   "line " + std::to_string(line_no) + ": k and gamma must both be NaN or both numeric");
        GainPair g = GainPair::invalid();
        if (!std::isnan(*k)) {
            g = GainPair{*k, *gamma, true};
            if (!table.candidates.contains(g))
                throw TableFormatError(Kind::invalid_cell,
                                       "line " + std::to_string(line_no) + ": gains are not members of the candidate sets");
        }
        table.cells.push_back(g);
        ++found;
    }
    if (found != expected)
        throw TableFormatError(Kind::count_mismatch, "expected " + std::to_string(expected) + " cell lines, found " +
                                                         std::to_string(found) + " (missing " +
                                                         std::to_string(expected - found) + ")");
    return table;
}

inline GainTable load_table(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw TableFormatError(TableFormatError::Kind::io, "cannot open '" + path + "'");
    return load_table(is);
}

inline GainTable table_from_text(const std::string& text) {
    std::istringstream is(text);
    return load_table(is);
}

}  // namespace cacc
