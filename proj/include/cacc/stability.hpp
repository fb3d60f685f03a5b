#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cacc/controllers.hpp"

namespace cacc {

/// Square coupling matrix of a vehicle string, row-major.
struct TopologyMatrix {
    enum class Assembly { diagonal_adjacency, explicit_entries };

    std::size_t n = 0;
    std::vector<double> entries;
    Assembly assembly = Assembly::explicit_entries;

    TopologyMatrix() = default;
    TopologyMatrix(std::size_t size, std::vector<double> values, Assembly how = Assembly::explicit_entries)
        : n(size), entries(std::move(values)), assembly(how) {
        validate();
    }

    /// diag{a_12 k_12, a_23 k_23, ...} for a predecessor-following string.
    static TopologyMatrix diagonal(const std::vector<double>& adjacency, const std::vector<double>& gains) {
        if (adjacency.size() != gains.size()) throw std::invalid_argument("TopologyMatrix::diagonal: size mismatch");
        const std::size_t n = adjacency.size();
        std::vector<double> m(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) m[i * n + i] = adjacency[i] * gains[i];
        return TopologyMatrix(n, std::move(m), Assembly::diagonal_adjacency);
    }

    double operator()(std::size_t r, std::size_t c) const { return entries[r * n + c]; }

    void validate() const {
        if (n == 0) throw std::invalid_argument("TopologyMatrix: n must be at least 1");
        if (entries.size() != n * n) throw std::invalid_argument("TopologyMatrix: expected n*n entries");
        for (double v : entries)
            if (!std::isfinite(v)) throw std::invalid_argument("TopologyMatrix: entries must be finite");
    }

    bool is_triangular() const {
        bool upper = true, lower = true;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                if (r > c && (*this)(r, c) != 0.0) upper = false;
                if (r < c && (*this)(r, c) != 0.0) lower = false;
            }
        return upper || lower;
    }
};

inline std::string to_string(TopologyMatrix::Assembly a) {
    return a == TopologyMatrix::Assembly::diagonal_adjacency ? "diagonal-adjacency" : "explicit";
}

inline constexpr std::size_t kMaxEigenDimension = 16;

/// Spectrum of the matrix. Triangular matrices are read off the diagonal;
/// anything else goes through a real Schur based solver.
inline std::vector<std::complex<double>> eigenvalues(const TopologyMatrix& m) {
    m.validate();
    std::vector<std::complex<double>> out;
    out.reserve(m.n);
    if (m.is_triangular()) {
        for (std::size_t i = 0; i < m.n; ++i) out.emplace_back(m(i, i), 0.0);
        return out;
    }
    if (m.n > kMaxEigenDimension)
        throw std::invalid_argument("eigenvalues: general matrices larger than 16x16 are not supported");
    Eigen::MatrixXd a(static_cast<Eigen::Index>(m.n), static_cast<Eigen::Index>(m.n));
    for (std::size_t r = 0; r < m.n; ++r)
        for (std::size_t c = 0; c < m.n; ++c) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigenvalues: solver did not converge");
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) out.push_back(solver.eigenvalues()[i]);
    return out;
}

/// Smallest coupling strength gamma admitted by the spectral consensus
/// condition: max over eigenvalues mu of |Im mu| / sqrt(|Re mu| |mu|).
/// Real eigenvalues contribute 0; a purely imaginary one makes the bound
/// infinite.
inline double gamma_lower_bound(const TopologyMatrix& m) {
    double bound = 0.0;
    for (const auto& mu : eigenvalues(m)) {
        const double mag = std::abs(mu);
        const double tol = 1e-12 * std::max(1.0, mag);
        const double im = std::abs(mu.imag()) <= tol ? 0.0 : std::abs(mu.imag());
        const double re = std::abs(mu.real()) <= tol ? 0.0 : std::abs(mu.real());
        if (im == 0.0) continue;
        if (re == 0.0) return std::numeric_limits<double>::infinity();
        bound = std::max(bound, im / std::sqrt(re * mag));
    }
    return bound;
}

struct FrequencySweep {
    double omega_min = 1e-3;  // [rad/s]
    double omega_max = 1e2;   // [rad/s]
    std::size_t points = 400;

    void validate() const {
        if (!(omega_min > 0.0 && omega_min < omega_max)) throw std::invalid_argument("FrequencySweep: need 0 < omega_min < omega_max");
        if (points < 2) throw std::invalid_argument("FrequencySweep: need at least two points");
    }

    std::vector<double> frequencies() const {
        validate();
        std::vector<double> w(points);
        const double lo = std::log10(omega_min), hi = std::log10(omega_max);
        for (std::size_t i = 0; i < points; ++i)
            w[i] = std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
        w.front() = omega_min;
        w.back() = omega_max;
        return w;
    }
};

/// Spacing-error propagation ratio evaluated at s = j omega, using the
/// low-frequency form
///   G(s) = a k e^{-tau s} (1 + s (t_g + tau) + s gamma) / (s^2 + gamma s + 1).
/// Returns nullopt where the denominator vanishes.
inline std::optional<std::complex<double>> string_transfer(const GainPair& gains, int adjacency, double time_gap,
                                                           double tau, double omega) {
    if (!gains.valid) throw FallbackRequired();
    using namespace std::complex_literals;
    const std::complex<double> s = 1i * omega;
    const std::complex<double> den = s * s + gains.gamma * s + 1.0;
    if (den == 0.0) return std::nullopt;
    const std::complex<double> num =
        static_cast<double>(adjacency) * gains.k * std::exp(-tau * s) * (1.0 + s * (time_gap + tau) + s * gains.gamma);
    return num / den;
}

struct StringStabilityResult {
    double max_magnitude = 0.0;
    double worst_omega = 0.0;
    std::vector<double> skipped;  // sweep points where the denominator was zero

    bool string_stable() const { return max_magnitude <= 1.0; }
};

inline StringStabilityResult string_stability_margin(const GainPair& gains, int adjacency, double time_gap, double tau,
                                                     const FrequencySweep& sweep = {}) {
    if (!gains.valid) throw FallbackRequired();
    if (adjacency != 0 && adjacency != 1) throw std::invalid_argument("string_stability_margin: adjacency must be 0 or 1");
    StringStabilityResult res;
    bool first = true;
    for (double w : sweep.frequencies()) {
        const auto g = string_transfer(gains, adjacency, time_gap, tau, w);
        if (!g) {
            res.skipped.push_back(w);
            continue;
        }
        const double mag = std::abs(*g);
        if (first || mag > res.max_magnitude) {
            res.max_magnitude = mag;
            res.worst_omega = w;
            first = false;
        }
    }
    return res;
}

}  // namespace cacc
