#pragma once

// Stochastic generators for synthetic fluctuation records: two-level
// telegraph switching, ensembles of telegraph fluctuators (1/f), Gaussian
// white noise, spectrally shaped Gaussian noise, and the composite
// observable used by the simulate pipeline.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "tlsnoise/errors.hpp"
#include "tlsnoise/fft.hpp"
#include "tlsnoise/noise_model.hpp"
#include "tlsnoise/parallel.hpp"
#include "tlsnoise/random.hpp"
#include "tlsnoise/types.hpp"

namespace tlsnoise {

enum class InitialState { low, high, stationary };

struct TelegraphSpec {
    double rate_up = 0.0;   ///< Hz, low -> high
    double rate_down = 0.0; ///< Hz, high -> low
    double low_value = 0.0;
    double high_value = 1.0;
    InitialState initial = InitialState::stationary;
    std::optional<Unit> unit;
};

/// Symmetric telegraph with the given Lorentzian corner and level spread.
inline TelegraphSpec symmetric_telegraph(double corner_hz, double low, double high) {
    const double rate = std::numbers::pi * corner_hz;
    return TelegraphSpec{rate, rate, low, high, InitialState::stationary, std::nullopt};
}

inline void validate(const TelegraphSpec& s) {
    require(std::isfinite(s.rate_up) && s.rate_up >= 0.0, "TelegraphSpec: rate_up must be >= 0");
    require(std::isfinite(s.rate_down) && s.rate_down >= 0.0, "TelegraphSpec: rate_down must be >= 0");
    require(std::isfinite(s.low_value) && std::isfinite(s.high_value) && s.low_value <= s.high_value,
            "TelegraphSpec: need low_value <= high_value");
    require(s.initial != InitialState::stationary || s.rate_up + s.rate_down > 0.0,
            "TelegraphSpec: stationary start needs a non-zero rate");
}

struct EnsembleSpec {
    std::size_t n_fluctuators = 1;
    double corner_lo = 1e-4; ///< Hz
    double corner_hi = 1e-1; ///< Hz
    double amplitude = 1.0;  ///< each fluctuator switches between -amplitude and +amplitude
    std::optional<Unit> unit;
};

inline void validate(const EnsembleSpec& s) {
    require(s.n_fluctuators >= 1, "EnsembleSpec: n_fluctuators must be >= 1");
    require(s.corner_lo > 0.0 && s.corner_hi >= s.corner_lo, "EnsembleSpec: corner range must be ordered and > 0");
    require(std::isfinite(s.amplitude) && s.amplitude >= 0.0, "EnsembleSpec: amplitude must be >= 0");
}

namespace detail {

inline void require_grid(std::size_t n, double dt, std::size_t min_n = 1) {
    require(n >= min_n, "generator: n must be >= " + std::to_string(min_n));
    require(std::isfinite(dt) && dt > 0.0, "generator: dt must be > 0");
}

inline std::vector<double> telegraph_values(const TelegraphSpec& spec, std::size_t n, double dt, Rng& rng) {
    const double up = spec.rate_up * dt;
    const double down = spec.rate_down * dt;
    if (up > 5.0 || down > 5.0) {
        std::ostringstream msg;
        msg << "gen_telegraph: aliasing, rate*dt = " << std::max(up, down)
            << " > 5; switching is unresolvable at dt = " << dt << " s";
        throw InvalidInput(msg.str());
    }
    // Exact transition probabilities of the sampled chain: the state after
    // dt, allowing any number of switches in between.
    const double total = up + down;
    const double relax = total > 0.0 ? -std::expm1(-total) / total : 0.0;
    const double p_up = up * relax;
    const double p_down = down * relax;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    bool high = false;
    switch (spec.initial) {
    case InitialState::low: high = false; break;
    case InitialState::high: high = true; break;
    case InitialState::stationary:
        high = uniform(rng) < spec.rate_up / (spec.rate_up + spec.rate_down);
        break;
    }
    std::vector<double> out(n);
    out[0] = high ? spec.high_value : spec.low_value;
    for (std::size_t i = 1; i < n; ++i) {
        const double u = uniform(rng);
        high = high ? !(u < p_down) : (u < p_up);
        out[i] = high ? spec.high_value : spec.low_value;
    }
    return out;
}

inline void subtract_mean(std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    for (double& x : v) x -= mean;
}

} // namespace detail

/// Two-state continuous-time Markov chain sampled every dt.
inline TimeSeries gen_telegraph(const TelegraphSpec& spec, std::size_t n, double dt, std::uint64_t seed) {
    validate(spec);
    detail::require_grid(n, dt, 2);
    Rng rng = make_rng(seed);
    return TimeSeries(detail::telegraph_values(spec, n, dt, rng), dt, spec.unit.value_or(Unit::dimensionless));
}

/// Seed used for ensemble member i; gen_telegraph with this seed and the
/// member's corner reproduces that member's path.
inline std::uint64_t ensemble_member_seed(std::uint64_t seed, std::size_t i) {
    return derive_seed(seed, stream::ensemble_member_base + i);
}

struct EnsembleSeries {
    TimeSeries series;
    std::vector<double> corners; ///< Hz, per fluctuator
    Diagnostics diagnostics;
};

/// Sum of independent symmetric telegraph fluctuators with log-uniform
/// corners; the sample mean is removed.
inline EnsembleSeries gen_ensemble_one_over_f(const EnsembleSpec& spec, std::size_t n, double dt,
                                              std::uint64_t seed, unsigned threads = 1) {
    validate(spec);
    detail::require_grid(n, dt, 2);

    Diagnostics diag;
    const double band_lo = 1.0 / (static_cast<double>(n) * dt);
    const double band_hi = 1.0 / (2.0 * dt);
    if (spec.corner_lo < band_lo || spec.corner_hi > band_hi) {
        std::ostringstream msg;
        msg << "corner range [" << spec.corner_lo << ", " << spec.corner_hi
            << "] Hz extends outside the resolvable band [" << band_lo << ", " << band_hi << "] Hz";
        diag.warn(msg.str());
    }
    if (spec.corner_hi < 100.0 * spec.corner_lo)
        diag.warn("corner range spans fewer than 2 decades; the sum will not be 1/f-like");

    std::vector<double> corners(spec.n_fluctuators);
    {
        Rng rng = make_rng(seed, stream::ensemble_corners);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        const double a = std::log(spec.corner_lo), b = std::log(spec.corner_hi);
        for (double& c : corners) c = std::exp(a + (b - a) * uniform(rng));
    }

    std::vector<std::vector<double>> members(spec.n_fluctuators);
    parallel_for(spec.n_fluctuators, threads, [&](std::size_t i) {
        const TelegraphSpec member = symmetric_telegraph(corners[i], -spec.amplitude, spec.amplitude);
        Rng rng = make_rng(ensemble_member_seed(seed, i));
        members[i] = detail::telegraph_values(member, n, dt, rng);
    });

    std::vector<double> total(n, 0.0);
    for (const auto& m : members)
        for (std::size_t j = 0; j < n; ++j) total[j] += m[j];
    detail::subtract_mean(total);
    return {TimeSeries(std::move(total), dt, spec.unit.value_or(Unit::dimensionless)), std::move(corners),
            std::move(diag)};
}

namespace detail {

inline std::vector<double> white_values(double level, std::size_t n, double dt, Rng& rng) {
    std::vector<double> out(n, 0.0);
    if (level == 0.0) return out;
    std::normal_distribution<double> normal(0.0, std::sqrt(level / (2.0 * dt)));
    for (double& x : out) x = normal(rng);
    return out;
}

/// Gaussian noise with a prescribed one-sided PSD, by random-phase spectral
/// synthesis on a grid twice the record length (the first n samples are kept
/// so the periodic wrap-around does not show).
template <typename Psd>
std::vector<double> shaped_values(const Psd& psd, std::size_t n, double dt, Rng& rng) {
    const std::size_t m = 2 * n + (2 * n) % 2;
    const double df = 1.0 / (static_cast<double>(m) * dt);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::complex<double>> spectrum(m / 2 + 1, {0.0, 0.0});
    for (std::size_t k = 1; k < m / 2; ++k) {
        const double scale = std::sqrt(psd(static_cast<double>(k) * df) * df / 4.0);
        const double re = normal(rng);
        const double im = normal(rng);
        spectrum[k] = {scale * re, scale * im};
    }
    spectrum[m / 2] = {std::sqrt(psd(static_cast<double>(m / 2) * df) * df / 2.0) * normal(rng), 0.0};
    std::vector<double> full(m);
    InverseRealFft ifft(m);
    ifft.backward(spectrum, full);
    full.resize(n);
    return full;
}

} // namespace detail

inline TimeSeries gen_white(double level, std::size_t n, double dt, std::uint64_t seed,
                            Unit unit = Unit::dimensionless) {
    require(std::isfinite(level) && level >= 0.0, "gen_white: level must be >= 0");
    detail::require_grid(n, dt);
    Rng rng = make_rng(seed);
    return TimeSeries(detail::white_values(level, n, dt, rng), dt, unit);
}

/// Gaussian 1/f^exponent noise by spectral synthesis.
inline TimeSeries gen_one_over_f(const OneOverF& component, std::size_t n, double dt, std::uint64_t seed,
                                 Unit unit = Unit::dimensionless) {
    validate(NoiseComponent{component});
    detail::require_grid(n, dt, 2);
    Rng rng = make_rng(seed);
    auto psd = [&](double f) { return component_psd(component, f); };
    return TimeSeries(detail::shaped_values(psd, n, dt, rng), dt, unit);
}

/// T1 records are clamped at this fraction of their baseline.
inline constexpr double kT1FloorFraction = 0.01;

struct ObservableSpec {
    double base = 0.0;
    Unit unit = Unit::dimensionless;
    NoiseModel model;
    std::vector<TelegraphSpec> telegraphs;
    std::optional<EnsembleSpec> ensemble;
    std::optional<double> floor; ///< lower clamp on every sample
};

/// Baseline T1 with additive contributions, floored at 1% of baseline.
inline ObservableSpec t1_observable(double t1_base, NoiseModel model) {
    ObservableSpec spec;
    spec.base = t1_base;
    spec.unit = Unit::seconds;
    spec.model = std::move(model);
    spec.floor = kT1FloorFraction * t1_base;
    return spec;
}

struct GeneratedSeries {
    TimeSeries series;
    Diagnostics diagnostics;
};

/// base + drift * t + white + 1/f + Lorentzians (as symmetric telegraphs)
/// + explicit telegraphs + ensemble, summed sample-wise in that order.
inline GeneratedSeries gen_observable(const ObservableSpec& spec, std::size_t n, double dt, std::uint64_t seed,
                                      unsigned threads = 1) {
    detail::require_grid(n, dt, 2);
    require(std::isfinite(spec.base), "gen_observable: base must be finite");
    for (const auto& t : spec.telegraphs) {
        validate(t);
        if (t.unit && *t.unit != spec.unit)
            throw InvalidInput("gen_observable: telegraph unit '" + std::string(to_string(*t.unit)) +
                               "' does not match observable unit '" + std::string(to_string(spec.unit)) + "'");
    }
    if (spec.ensemble) {
        validate(*spec.ensemble);
        if (spec.ensemble->unit && *spec.ensemble->unit != spec.unit)
            throw InvalidInput("gen_observable: ensemble unit does not match observable unit");
    }

    // One job per contribution; each job owns its RNG stream and buffer.
    struct Job {
        enum class Kind { white, one_over_f, lorentzian, telegraph, ensemble } kind;
        std::size_t index;
        NoiseComponent component;
    };
    std::vector<Job> jobs;
    std::size_t n_lorentzian = 0;
    for (const auto& c : spec.model.components()) {
        if (std::holds_alternative<White>(c)) jobs.push_back({Job::Kind::white, 0, c});
        else if (std::holds_alternative<OneOverF>(c)) jobs.push_back({Job::Kind::one_over_f, jobs.size(), c});
        else if (std::holds_alternative<Lorentzian>(c)) jobs.push_back({Job::Kind::lorentzian, n_lorentzian++, c});
    }
    for (std::size_t i = 0; i < spec.telegraphs.size(); ++i)
        jobs.push_back({Job::Kind::telegraph, i, White{}});
    if (spec.ensemble) jobs.push_back({Job::Kind::ensemble, 0, White{}});

    std::vector<std::vector<double>> parts(jobs.size());
    std::vector<Diagnostics> job_diag(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        switch (job.kind) {
        case Job::Kind::white: {
            Rng rng = make_rng(seed, stream::white);
            parts[j] = detail::white_values(std::get<White>(job.component).level, n, dt, rng);
            break;
        }
        case Job::Kind::one_over_f: {
            Rng rng = make_rng(seed, stream::one_over_f + 10 * job.index);
            const auto c = job.component;
            parts[j] = detail::shaped_values([&](double f) { return component_psd(c, f); }, n, dt, rng);
            break;
        }
        case Job::Kind::lorentzian: {
            const auto& l = std::get<Lorentzian>(job.component);
            const double a = std::sqrt(l.total_power);
            Rng rng = make_rng(seed, stream::lorentzian_base + job.index);
            parts[j] = detail::telegraph_values(symmetric_telegraph(l.corner_frequency, -a, a), n, dt, rng);
            break;
        }
        case Job::Kind::telegraph: {
            Rng rng = make_rng(seed, stream::telegraph_base + job.index);
            parts[j] = detail::telegraph_values(spec.telegraphs[job.index], n, dt, rng);
            break;
        }
        case Job::Kind::ensemble: {
            auto e = gen_ensemble_one_over_f(*spec.ensemble, n, dt, derive_seed(seed, stream::ensemble), 1);
            parts[j].assign(e.series.values().begin(), e.series.values().end());
            job_diag[j] = std::move(e.diagnostics);
            break;
        }
        }
    });

    const double drift = spec.model.drift_rate();
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = spec.base + drift * (static_cast<double>(i) * dt);
    for (const auto& p : parts)
        for (std::size_t i = 0; i < n; ++i) values[i] += p[i];
    if (spec.floor)
        for (double& v : values) v = std::max(v, *spec.floor);

    Diagnostics diag;
    for (auto& d : job_diag)
        for (auto& w : d.warnings) diag.warn(std::move(w));
    return {TimeSeries(std::move(values), dt, spec.unit), std::move(diag)};
}

} // namespace tlsnoise
