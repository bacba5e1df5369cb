#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "tlsnoise/errors.hpp"
#include "tlsnoise/fft.hpp"
#include "tlsnoise/types.hpp"

namespace tlsnoise {

enum class Window { hann, rectangular };
enum class AllanMode { non_overlapping, overlapping };

struct LinearTrend {
    double slope = 0.0;     ///< units / second
    double intercept = 0.0; ///< value at t = start_time
};

/// Ordinary least-squares line through (t_i, x_i).
inline LinearTrend fit_linear_trend(const TimeSeries& series) {
    const std::size_t n = series.size();
    if (n < 2) return {0.0, series[0]};
    const double tm = 0.5 * static_cast<double>(n - 1) * series.dt();
    double xm = 0.0;
    for (double x : series.values()) xm += x;
    xm /= static_cast<double>(n);
    double sxy = 0.0, stt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i) * series.dt() - tm;
        sxy += dt * (series[i] - xm);
        stt += dt * dt;
    }
    const double slope = sxy / stt;
    return {slope, xm - slope * tm};
}

struct Detrended {
    TimeSeries series;
    LinearTrend trend;
};

inline Detrended detrend_linear(const TimeSeries& series) {
    const LinearTrend trend = fit_linear_trend(series);
    std::vector<double> v(series.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = series[i] - (trend.intercept + trend.slope * static_cast<double>(i) * series.dt());
    return {series.with_values(std::move(v)), trend};
}

struct WelchOptions {
    std::size_t segment_length = 0; ///< 0 picks 8 half-overlapping segments
    double overlap = 0.5;
    Window window = Window::hann;
    bool detrend = false; ///< remove a global linear trend first
};

struct WelchResult {
    PowerSpectrum spectrum;
    std::size_t segments = 0;
    std::size_t segment_length = 0;
    std::optional<LinearTrend> trend;
};

namespace detail {

inline double segment_mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline std::vector<double> make_window(Window w, std::size_t n) {
    std::vector<double> out(n, 1.0);
    if (w == Window::hann) {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return out;
}

inline std::size_t default_segment_length(std::size_t n, double overlap) {
    // K segments with hop L*(1-overlap) need L + (K-1)*L*(1-overlap) <= n.
    constexpr double k = 8.0;
    auto len = static_cast<std::size_t>(std::floor(static_cast<double>(n) / (1.0 + (k - 1.0) * (1.0 - overlap))));
    auto fits = [&](std::size_t l) {
        const auto hop = std::max<std::size_t>(1, l - static_cast<std::size_t>(std::floor(static_cast<double>(l) * overlap)));
        return l + 7 * hop <= n;
    };
    while (len > 2 && !fits(len)) --len;
    return std::max<std::size_t>(len, 2);
}

} // namespace detail

/// Welch estimate of the one-sided PSD; the DC bin is dropped.
inline WelchResult welch_psd(const TimeSeries& input, const WelchOptions& opt = {}) {
    require(opt.overlap >= 0.0 && opt.overlap <= 0.9, "welch_psd: overlap must lie in [0, 0.9]");
    std::optional<LinearTrend> trend;
    std::optional<TimeSeries> detrended;
    if (opt.detrend) {
        auto d = detrend_linear(input);
        trend = d.trend;
        detrended.emplace(std::move(d.series));
    }
    const TimeSeries& series = detrended ? *detrended : input;
    const std::size_t n = series.size();
    const std::size_t len = opt.segment_length ? opt.segment_length : detail::default_segment_length(n, opt.overlap);
    require(len >= 2, "welch_psd: segment_length must be >= 2");
    require(len <= n, "welch_psd: fewer samples than one full segment");

    const auto noverlap = static_cast<std::size_t>(std::floor(static_cast<double>(len) * opt.overlap));
    const std::size_t hop = std::max<std::size_t>(1, len - noverlap);
    const std::vector<double> window = detail::make_window(opt.window, len);
    double window_power = 0.0;
    for (double w : window) window_power += w * w;

    const double fs = 1.0 / series.dt();
    const double scale = 1.0 / (fs * window_power);
    const std::size_t nbins = len / 2; // excludes DC
    const bool has_nyquist = len % 2 == 0;

    RealFft fft(len);
    std::vector<double> buf(len);
    std::vector<std::complex<double>> spec(fft.bins());
    std::vector<double> acc(nbins, 0.0);
    std::size_t segments = 0;
    const auto x = series.values();
    for (std::size_t start = 0; start + len <= n; start += hop) {
        const auto seg = x.subspan(start, len);
        const double m = detail::segment_mean(seg);
        for (std::size_t i = 0; i < len; ++i) buf[i] = (seg[i] - m) * window[i];
        fft.forward(buf, spec);
        for (std::size_t k = 1; k <= nbins; ++k) {
            double p = std::norm(spec[k]) * scale;
            if (!(has_nyquist && k == nbins)) p *= 2.0;
            acc[k - 1] += p;
        }
        ++segments;
    }

    std::vector<double> freqs(nbins);
    for (std::size_t k = 1; k <= nbins; ++k) {
        freqs[k - 1] = static_cast<double>(k) * fs / static_cast<double>(len);
        acc[k - 1] /= static_cast<double>(segments);
    }
    return {PowerSpectrum(std::move(freqs), std::move(acc)), segments, len, trend};
}

/// Plain one-sided periodogram of the mean-removed record.
inline PowerSpectrum periodogram(const TimeSeries& series) {
    const std::size_t n = series.size();
    require(n >= 2, "periodogram: need at least 2 samples");
    const double fs = 1.0 / series.dt();
    const double m = detail::segment_mean(series.values());
    std::vector<double> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = series[i] - m;
    RealFft fft(n);
    std::vector<std::complex<double>> spec(fft.bins());
    fft.forward(buf, spec);
    const double scale = 1.0 / (fs * static_cast<double>(n));
    std::vector<double> freqs, psd;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        double p = std::norm(spec[k]) * scale;
        if (!(n % 2 == 0 && k == n / 2)) p *= 2.0;
        freqs.push_back(static_cast<double>(k) * fs / static_cast<double>(n));
        psd.push_back(p);
    }
    return PowerSpectrum(std::move(freqs), std::move(psd));
}

/// Spectrum from the biased sample autocorrelation, transformed term by term
/// (O(N^2)). Reference implementation for checking welch_psd.
inline PowerSpectrum autocorr_psd_oracle(const TimeSeries& series) {
    const std::size_t n = series.size();
    require(n >= 16, "autocorr_psd_oracle: need at least 16 samples");
    const double m = detail::segment_mean(series.values());
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = series[i] - m;

    std::vector<double> r(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) s += x[i] * x[i + k];
        r[k] = s / static_cast<double>(n);
    }
    const double dt = series.dt();
    std::vector<double> freqs, psd;
    for (std::size_t j = 1; j <= n / 2; ++j) {
        double s = r[0];
        for (std::size_t k = 1; k < n; ++k)
            s += 2.0 * r[k] * std::cos(2.0 * std::numbers::pi * static_cast<double>(j * k % n) / static_cast<double>(n));
        double two_sided = dt * s;
        const bool nyquist = n % 2 == 0 && j == n / 2;
        freqs.push_back(static_cast<double>(j) / (static_cast<double>(n) * dt));
        psd.push_back(std::max(0.0, nyquist ? two_sided : 2.0 * two_sided));
    }
    return PowerSpectrum(std::move(freqs), std::move(psd));
}

namespace detail {

inline std::size_t tau_multiple(double tau, double dt) {
    const double ratio = tau / dt;
    const double m = std::round(ratio);
    if (!(m >= 1.0) || std::abs(ratio - m) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream msg;
        msg << "allan_deviation: tau = " << tau << " s is not an integer multiple of dt = " << dt << " s";
        throw InvalidInput(msg.str());
    }
    return static_cast<std::size_t>(m);
}

} // namespace detail

/// sigma^2(tau) = 1/2 < (xbar_{n+1} - xbar_n)^2 > over consecutive blocks of
/// tau/dt samples (non_overlapping) or every pair of blocks tau apart
/// (overlapping).
inline AllanCurve allan_deviation(const TimeSeries& series, std::span<const double> taus,
                                  AllanMode mode = AllanMode::non_overlapping) {
    detail::require_increasing_positive(taus, "allan_deviation");
    const std::size_t n = series.size();
    const auto x = series.values();

    std::vector<long double> prefix;
    if (mode == AllanMode::overlapping) {
        const double mean = detail::segment_mean(x);
        prefix.assign(n + 1, 0.0L);
        for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + static_cast<long double>(x[i] - mean);
    }

    std::vector<double> adev(taus.size());
    std::vector<std::size_t> counts(taus.size());
    for (std::size_t t = 0; t < taus.size(); ++t) {
        const std::size_t m = detail::tau_multiple(taus[t], series.dt());
        require(2 * m <= n, "allan_deviation: tau/dt must be <= length/2");
        double acc = 0.0;
        std::size_t count = 0;
        if (mode == AllanMode::non_overlapping) {
            const std::size_t blocks = n / m;
            std::vector<double> avg(blocks);
            for (std::size_t b = 0; b < blocks; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < m; ++i) s += x[b * m + i];
                avg[b] = s / static_cast<double>(m);
            }
            for (std::size_t b = 0; b + 1 < blocks; ++b) {
                const double d = avg[b + 1] - avg[b];
                acc += d * d;
            }
            count = blocks - 1;
        } else {
            const long double inv_m = 1.0L / static_cast<long double>(m);
            long double lacc = 0.0L;
            for (std::size_t i = 0; i + 2 * m <= n; ++i) {
                const long double a0 = (prefix[i + m] - prefix[i]) * inv_m;
                const long double a1 = (prefix[i + 2 * m] - prefix[i + m]) * inv_m;
                lacc += (a1 - a0) * (a1 - a0);
            }
            acc = static_cast<double>(lacc);
            count = n - 2 * m + 1;
        }
        const double var = 0.5 * (acc / static_cast<double>(count));
        adev[t] = std::sqrt(var);
        counts[t] = count;
    }
    return AllanCurve({taus.begin(), taus.end()}, std::move(adev), std::move(counts));
}

/// Logarithmic tau grid (~per_decade points per decade) of integer multiples
/// of dt, restricted to at least min_count non-overlapping difference pairs.
inline std::vector<double> default_taus(const TimeSeries& series, int per_decade = 10, std::size_t min_count = 8) {
    const std::size_t n = series.size();
    const std::size_t m_max = std::min(n / (min_count + 1), n / 2);
    require(m_max >= 1, "default_taus: series too short for the requested minimum count");
    std::vector<double> taus;
    std::size_t last = 0;
    const double decades = std::log10(static_cast<double>(m_max));
    const int steps = static_cast<int>(std::floor(decades * per_decade + 1e-9));
    for (int k = 0; k <= steps; ++k) {
        const auto m = static_cast<std::size_t>(std::llround(std::pow(10.0, static_cast<double>(k) / per_decade)));
        if (m > last && m <= m_max) {
            taus.push_back(static_cast<double>(m) * series.dt());
            last = m;
        }
    }
    return taus;
}

} // namespace tlsnoise
