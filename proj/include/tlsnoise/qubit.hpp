#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "tlsnoise/errors.hpp"
#include "tlsnoise/random.hpp"

namespace tlsnoise {

struct QubitSpec {
    double f01 = 5e9; ///< Hz
    double t1 = 50e-6; ///< s
    double t2 = 40e-6; ///< s
};

inline void validate(const QubitSpec& q) {
    require(std::isfinite(q.f01) && q.f01 > 0.0, "QubitSpec: f01 must be > 0");
    require(std::isfinite(q.t1) && q.t1 > 0.0, "QubitSpec: T1 must be > 0");
    require(std::isfinite(q.t2) && q.t2 > 0.0, "QubitSpec: T2 must be > 0");
    require(q.t2 <= 2.0 * q.t1, "QubitSpec: T2 must not exceed 2*T1");
}

/// Strongly coupled resonant defect seen in Ramsey beats.
struct TlsCoupling {
    double detuning = 0.0; ///< Hz, qubit minus defect frequency
    double g = 0.0;        ///< Hz, exchange coupling
    std::optional<double> tls_t2; ///< s, defect dephasing time
};

inline void validate(const TlsCoupling& t) {
    require(std::isfinite(t.detuning), "TlsCoupling: detuning must be finite");
    require(std::isfinite(t.g) && t.g > 0.0, "TlsCoupling: g must be > 0");
    require(!t.tls_t2 || *t.tls_t2 > 0.0, "TlsCoupling: tls_t2 must be > 0");
}

/// Number of single-shot repetitions per delay; nullopt is the noiseless limit.
using Shots = std::optional<std::uint64_t>;
inline constexpr Shots kIdealShots = std::nullopt;

/// Measured excited-state population against delay. shots == 0 marks an
/// ideal (noiseless) curve.
struct DecayCurve {
    std::vector<double> delays;
    std::vector<double> populations;
    std::uint64_t shots = 0;
    bool clipped = false;

    std::size_t size() const { return delays.size(); }
    bool ideal() const { return shots == 0; }
};

inline void validate(const DecayCurve& c) {
    require(c.delays.size() == c.populations.size(), "DecayCurve: length mismatch");
    require(!c.delays.empty(), "DecayCurve: empty");
    for (std::size_t i = 0; i < c.delays.size(); ++i) {
        require(std::isfinite(c.delays[i]) && c.delays[i] >= 0.0, "DecayCurve: delays must be >= 0");
        require(i == 0 || c.delays[i] > c.delays[i - 1], "DecayCurve: delays must be strictly increasing");
        require(std::isfinite(c.populations[i]), "DecayCurve: populations must be finite");
    }
}

struct SpinLockPoint {
    double rabi_frequency = 0.0; ///< Hz
    double gamma = 0.0;          ///< 1/s
    double gamma_err = 0.0;      ///< 1/s
};

namespace detail {

inline void require_delays(std::span<const double> delays) {
    require(!delays.empty(), "delays must be non-empty");
    for (std::size_t i = 0; i < delays.size(); ++i) {
        require(std::isfinite(delays[i]) && delays[i] >= 0.0, "delays must be >= 0");
        require(i == 0 || delays[i] > delays[i - 1], "delays must be strictly increasing");
    }
}

inline void require_shots(const Shots& shots) {
    require(!shots || *shots > 0, "shots must be > 0 (use the ideal limit for noiseless curves)");
}

/// Binomial shot sampling of ideal populations.
inline DecayCurve sample_curve(std::span<const double> delays, std::vector<double> ideal, const Shots& shots,
                               std::uint64_t seed) {
    DecayCurve c;
    c.delays.assign(delays.begin(), delays.end());
    for (double& p : ideal) p = std::clamp(p, 0.0, 1.0);
    if (!shots) {
        c.populations = std::move(ideal);
        return c;
    }
    c.shots = *shots;
    Rng rng = make_rng(seed);
    c.populations.resize(ideal.size());
    for (std::size_t i = 0; i < ideal.size(); ++i) {
        std::binomial_distribution<std::uint64_t> dist(*shots, ideal[i]);
        c.populations[i] = static_cast<double>(dist(rng)) / static_cast<double>(*shots);
    }
    for (double p : c.populations)
        if (p < -0.05 || p > 1.05) c.clipped = true;
    return c;
}

} // namespace detail

/// Relaxation: P(t) = exp(-t/T1).
inline DecayCurve sim_relaxation(const QubitSpec& q, std::span<const double> delays, const Shots& shots,
                                 std::uint64_t seed) {
    validate(q);
    detail::require_delays(delays);
    detail::require_shots(shots);
    std::vector<double> p(delays.size());
    for (std::size_t i = 0; i < delays.size(); ++i) p[i] = std::exp(-delays[i] / q.t1);
    return detail::sample_curve(delays, std::move(p), shots, seed);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

} // namespace tlsnoise
