#pragma once

// Small independent helpers for the test suites.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace tlsnoise::oracle {

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double rms_log_ratio(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::log(a[i] / b[i]);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

/// Lorentzian Allan variance in closed form, tau_c = 1/(2 pi fc).
inline double lorentzian_allan_variance(double power, double fc, double tau) {
    const double tc = 1.0 / (2.0 * M_PI * fc);
    const double x = tau / tc;
    return power * (tc * tc) / (tau * tau) * (4.0 * std::exp(-x) - std::exp(-2.0 * x) + 2.0 * x - 3.0);
}

} // namespace tlsnoise::oracle
