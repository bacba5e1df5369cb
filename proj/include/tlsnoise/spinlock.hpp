#pragma once

// Spin-locking noise spectroscopy. The locked-state population decays as
//   P(tau) = 1/2 + 1/2 exp(-Gamma tau),   Gamma = 1/(2 T1) + S(Omega_R)
// where S is the noise spectral density (in 1/s) at the Rabi frequency.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "tlsnoise/decay_fit.hpp"
#include "tlsnoise/errors.hpp"
#include "tlsnoise/noise_model.hpp"
#include "tlsnoise/parallel.hpp"
#include "tlsnoise/qubit.hpp"
#include "tlsnoise/random.hpp"
#include "tlsnoise/types.hpp"

namespace tlsnoise {

/// Band over which spin-locking probes the noise.
inline constexpr double kSpinLockMinRabi = 1e3;
inline constexpr double kSpinLockMaxRabi = 1e7;

/// Locked-state decay rate for one Rabi frequency.
inline double spinlock_rate(const QubitSpec& q, const NoiseModel& noise, double rabi_frequency) {
    return 1.0 / (2.0 * q.t1) + noise.psd_at(rabi_frequency);
}

/// Converts a one-sided PSD of qubit-frequency fluctuations (Hz^2/Hz) into the
/// symmetrized (2 pi)^2 / 2 convention used for spin-locking rates (1/s).
inline PowerSpectrum frequency_noise_to_rate(const PowerSpectrum& frequency_psd) {
    std::vector<double> s(frequency_psd.psd().begin(), frequency_psd.psd().end());
    for (double& v : s) v *= 2.0 * std::numbers::pi * std::numbers::pi;
    return PowerSpectrum({frequency_psd.frequencies().begin(), frequency_psd.frequencies().end()}, std::move(s));
}

struct SpinLockRun {
    std::vector<double> rabi_frequencies;
    std::vector<double> gammas; ///< forward-model rates
    std::vector<DecayCurve> curves;
    Diagnostics diagnostics;
};

inline SpinLockRun sim_spinlock(const QubitSpec& q, const NoiseModel& noise, std::span<const double> rabi_frequencies,
                                std::span<const double> delays, const Shots& shots, std::uint64_t seed,
                                unsigned threads = 1) {
    validate(q);
    detail::require_delays(delays);
    detail::require_shots(shots);
    detail::require_increasing_positive(rabi_frequencies, "sim_spinlock");
    for (double f : rabi_frequencies) {
        if (f < kSpinLockMinRabi || f > kSpinLockMaxRabi) {
            std::ostringstream msg;
            msg << "sim_spinlock: Rabi frequency " << f << " Hz outside [1 kHz, 10 MHz]";
            throw InvalidInput(msg.str());
        }
    }
    SpinLockRun run;
    run.rabi_frequencies.assign(rabi_frequencies.begin(), rabi_frequencies.end());
    run.gammas.resize(rabi_frequencies.size());
    run.curves.resize(rabi_frequencies.size());
    for (std::size_t i = 0; i < rabi_frequencies.size(); ++i) run.gammas[i] = spinlock_rate(q, noise, rabi_frequencies[i]);

    parallel_for(rabi_frequencies.size(), threads, [&](std::size_t i) {
        std::vector<double> p(delays.size());
        for (std::size_t k = 0; k < delays.size(); ++k) p[k] = 0.5 + 0.5 * std::exp(-run.gammas[i] * delays[k]);
        run.curves[i] = detail::sample_curve(delays, std::move(p), shots, derive_seed(seed, stream::shots_base + i));
    });

    for (std::size_t i = 0; i < run.gammas.size(); ++i) {
        if (run.gammas[i] * delays.back() < 0.5) {
            std::ostringstream msg;
            msg << "decay under-resolved at " << rabi_frequencies[i] << " Hz: Gamma*max(delay) = "
                << run.gammas[i] * delays.back();
            run.diagnostics.warn(msg.str());
        }
    }
    return run;
}

/// Fits each locked-state curve and converts its decay time into a rate.
inline std::vector<SpinLockPoint> fit_spinlock_curves(std::span<const double> rabi_frequencies,
                                                      std::span<const DecayCurve> curves, unsigned threads = 1) {
    require(rabi_frequencies.size() == curves.size(), "fit_spinlock_curves: length mismatch");
    std::vector<SpinLockPoint> points(curves.size());
    parallel_for(curves.size(), threads, [&](std::size_t i) {
        const ExponentialFit fit = fit_exponential(curves[i]);
        points[i] = {rabi_frequencies[i], 1.0 / fit.t1, fit.t1_stderr / (fit.t1 * fit.t1)};
    });
    return points;
}

struct SpinLockSpectrum {
    PowerSpectrum spectrum;
    std::vector<double> psd_err;
    std::vector<bool> floored; ///< point came out negative and was set to 0
};

/// S(Omega_R) = Gamma(Omega_R) - 1/(2 T1), negative values floored at 0.
inline SpinLockSpectrum invert_spinlock(std::span<const SpinLockPoint> points, double t1) {
    require(std::isfinite(t1) && t1 > 0.0, "invert_spinlock: T1 must be > 0");
    require(!points.empty(), "invert_spinlock: no points");
    std::vector<SpinLockPoint> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const SpinLockPoint& a, const SpinLockPoint& b) { return a.rabi_frequency < b.rabi_frequency; });
    const double base = 1.0 / (2.0 * t1);
    std::vector<double> f, s, err;
    std::vector<bool> floored;
    for (const auto& pt : sorted) {
        require(pt.rabi_frequency > 0.0, "invert_spinlock: Rabi frequency must be > 0");
        require(pt.gamma > 0.0 && pt.gamma_err >= 0.0, "invert_spinlock: gamma must be > 0");
        // 1e-9 relative slack absorbs solver round-off on noiseless curves.
        if (pt.gamma < base - 3.0 * pt.gamma_err - 1e-9 * base) {
            std::ostringstream msg;
            msg << "invert_spinlock: Gamma = " << pt.gamma << " 1/s at " << pt.rabi_frequency
                << " Hz is more than 3 sigma below 1/(2 T1) = " << base;
            throw InvalidInput(msg.str());
        }
        const double value = pt.gamma - base;
        f.push_back(pt.rabi_frequency);
        s.push_back(std::max(0.0, value));
        err.push_back(pt.gamma_err);
        floored.push_back(value < 0.0);
    }
    return {PowerSpectrum(std::move(f), std::move(s)), std::move(err), std::move(floored)};
}

} // namespace tlsnoise
