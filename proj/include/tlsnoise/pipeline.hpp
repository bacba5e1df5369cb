#pragma once

// Series -> (Welch PSD, Allan curve) -> FitReport with time-domain checks.

#include <optional>

#include "tlsnoise/noise_fit.hpp"
#include "tlsnoise/spectral.hpp"

namespace tlsnoise {

struct AnalysisOptions {
    WelchOptions welch;
    AllanMode allan_mode = AllanMode::overlapping;
    int taus_per_decade = 10;
    std::size_t min_allan_count = 8;
};

struct Analysis {
    WelchResult welch;
    AllanCurve allan;
};

/// The Allan curve is taken on the detrended record when detrending is on.
inline Analysis analyze_series(const TimeSeries& series, const AnalysisOptions& opt = {}) {
    WelchResult w = welch_psd(series, opt.welch);
    const TimeSeries src = opt.welch.detrend ? detrend_linear(series).series : series;
    const auto taus = default_taus(src, opt.taus_per_decade, opt.min_allan_count);
    AllanCurve a = allan_deviation(src, taus, opt.allan_mode);
    return {std::move(w), std::move(a)};
}

inline FitReport fit_series(const TimeSeries& series, const AnalysisOptions& opt = {}, const FitOptions& fit = {}) {
    const Analysis an = analyze_series(series, opt);
    FitReport report = fit_noise_model(an.welch.spectrum, an.allan, fit);
    const TimeSeries src = opt.welch.detrend ? detrend_linear(series).series : series;
    attach_time_domain(report, detect_telegraph(src), estimate_drift(series));
    return report;
}

} // namespace tlsnoise
