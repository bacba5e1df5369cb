#pragma once

// Decomposition of measured spectra and Allan curves into white, 1/f and
// Lorentzian components, telegraph detection, drift estimation and the
// dominant-mechanism classification.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tlsnoise/errors.hpp"
#include "tlsnoise/least_squares.hpp"
#include "tlsnoise/model_allan.hpp"
#include "tlsnoise/noise_model.hpp"
#include "tlsnoise/types.hpp"

namespace tlsnoise {

enum class Classification { single_fluctuator_dominated, ensemble_one_over_f_dominated, white_limited, mixed };

inline std::string_view to_string(Classification c) {
    switch (c) {
    case Classification::single_fluctuator_dominated: return "single-fluctuator-dominated";
    case Classification::ensemble_one_over_f_dominated: return "ensemble-1/f-dominated";
    case Classification::white_limited: return "white-limited";
    case Classification::mixed: return "mixed";
    }
    return "mixed";
}

inline Classification parse_classification(std::string_view s) {
    for (auto c : {Classification::single_fluctuator_dominated, Classification::ensemble_one_over_f_dominated,
                   Classification::white_limited, Classification::mixed})
        if (to_string(c) == s) return c;
    throw InvalidInput("unknown classification '" + std::string(s) + "'");
}

struct ParameterError {
    std::size_t component = 0; ///< index into FitReport::model components
    std::string parameter;     ///< level, amplitude, exponent, total_power, corner_frequency, rate
    double value = 0.0;
    double stderr_ = 0.0;
};

struct TelegraphDetection {
    bool bimodal = false;
    double low_level = 0.0;
    double high_level = 0.0;
    double occupancy_high = 0.0; ///< fraction of samples in the high state
    double estimated_corner = 0.0; ///< Hz, 0 when not bimodal
    double separation_ratio = 0.0; ///< mode separation / pooled intra-mode deviation
};

struct DriftEstimate {
    double rate = 0.0;     ///< units per second
    double stderr_ = 0.0;
    double duration = 0.0; ///< record length, s
};

struct BandShares {
    double white = 0.0;
    double one_over_f = 0.0;
    double lorentzian = 0.0; ///< sum over Lorentzians
    double largest_lorentzian = 0.0;
    double drift = 0.0;
};

struct FitReport {
    NoiseModel model;
    double residual_psd = 0.0;   ///< RMS of ln(model/data) over PSD bins
    double residual_allan = 0.0; ///< RMS of ln(model/data) over Allan points, 0 without Allan data
    std::vector<ParameterError> component_errors;
    std::size_t n_lorentzians_considered = 0;
    Classification classification = Classification::mixed;
    std::optional<DriftEstimate> drift;
    std::optional<TelegraphDetection> telegraph;
    double band_lo = 0.0; ///< Hz
    double band_hi = 0.0; ///< Hz
    BandShares shares;
    double information_criterion = 0.0;
    bool low_confidence = false;
    std::optional<double> one_over_f_to_white_ratio; ///< spin-locking headline statistic
    std::vector<std::string> notes;
};

struct FitOptions {
    std::size_t max_lorentzians = 3;
    bool allow_one_over_f = true;
    bool fit_exponent = false;
    int bins_per_decade = 10;
};

namespace detail {

inline constexpr double kQuasiparticleCorner = 100.0; // Hz

struct LogBinned {
    std::vector<double> f, s, weight;
    std::vector<std::vector<double>> members; ///< frequencies averaged into each bin
};

/// Averages PSD values into logarithmic bins; weight ~ sqrt(points per bin).
inline LogBinned log_bin(const PowerSpectrum& psd, int per_decade) {
    LogBinned out;
    const auto f = psd.frequencies();
    const auto s = psd.psd();
    const double origin = std::log10(f.front());
    std::size_t i = 0;
    while (i < f.size()) {
        const long bin = static_cast<long>(std::floor((std::log10(f[i]) - origin) * per_decade + 1e-9));
        double lf = 0.0, ss = 0.0;
        std::size_t c = 0;
        std::vector<double> fs;
        while (i < f.size() &&
               static_cast<long>(std::floor((std::log10(f[i]) - origin) * per_decade + 1e-9)) == bin) {
            lf += std::log(f[i]);
            ss += s[i];
            fs.push_back(f[i]);
            ++c;
            ++i;
        }
        if (ss > 0.0) {
            out.f.push_back(std::exp(lf / static_cast<double>(c)));
            out.s.push_back(ss / static_cast<double>(c));
            out.weight.push_back(std::sqrt(static_cast<double>(c)));
            out.members.push_back(std::move(fs));
        }
    }
    return out;
}

/// Parameter vector layout (all log-parameterized):
///   [ln white, (ln A_1/f, (alpha)), (ln P_k, ln fc_k)...]
struct Layout {
    bool one_over_f = false;
    bool exponent = false;
    std::size_t lorentzians = 0;

    Eigen::Index size() const {
        return 1 + (one_over_f ? 1 : 0) + (one_over_f && exponent ? 1 : 0) + 2 * static_cast<Eigen::Index>(lorentzians);
    }
    Eigen::Index lorentz_offset() const { return 1 + (one_over_f ? 1 : 0) + (one_over_f && exponent ? 1 : 0); }
    double alpha(const Vector& p) const { return one_over_f && exponent ? p[2] : 1.0; }

    double psd(const Vector& p, double f) const {
        double s = std::exp(p[0]);
        if (one_over_f) s += std::exp(p[1]) * std::pow(f, -alpha(p));
        for (std::size_t k = 0; k < lorentzians; ++k) {
            const double pw = std::exp(p[lorentz_offset() + 2 * k]);
            const double fc = std::exp(p[lorentz_offset() + 2 * k + 1]);
            s += (2.0 * pw / std::numbers::pi) * fc / (fc * fc + f * f);
        }
        return s;
    }

    /// Model averaged the same way the data bin was.
    double binned_psd(const Vector& p, const std::vector<double>& fs) const {
        const double white = std::exp(p[0]);
        const double a1f = one_over_f ? std::exp(p[1]) : 0.0;
        const double alpha = this->alpha(p);
        double lor_scale[8], lor_fc2[8];
        const std::size_t nl = std::min<std::size_t>(lorentzians, 8);
        for (std::size_t k = 0; k < nl; ++k) {
            const double fc = std::exp(p[lorentz_offset() + 2 * k + 1]);
            lor_scale[k] = 2.0 * std::exp(p[lorentz_offset() + 2 * k]) / std::numbers::pi * fc;
            lor_fc2[k] = fc * fc;
        }
        double s = 0.0;
        for (double f : fs) {
            double v = white;
            if (one_over_f) v += a1f * (alpha == 1.0 ? 1.0 / f : std::pow(f, -alpha));
            for (std::size_t k = 0; k < nl; ++k) v += lor_scale[k] / (lor_fc2[k] + f * f);
            for (std::size_t k = nl; k < lorentzians; ++k) v += psd_lorentzian(p, k, f);
            s += v;
        }
        return s / static_cast<double>(fs.size());
    }

    double psd_lorentzian(const Vector& p, std::size_t k, double f) const {
        const double pw = std::exp(p[lorentz_offset() + 2 * k]);
        const double fc = std::exp(p[lorentz_offset() + 2 * k + 1]);
        return (2.0 * pw / std::numbers::pi) * fc / (fc * fc + f * f);
    }

    double allan_var(const Vector& p, double tau) const {
        const auto& k = AllanKernels::instance();
        double v = std::exp(p[0]) * k.white() / tau;
        if (one_over_f) {
            const double a = alpha(p);
            v += std::exp(p[1]) * std::pow(tau, a - 1.0) * k.flicker(a);
        }
        for (std::size_t j = 0; j < lorentzians; ++j) {
            const double pw = std::exp(p[lorentz_offset() + 2 * j]);
            const double fc = std::exp(p[lorentz_offset() + 2 * j + 1]);
            v += pw * k.lorentzian(fc * tau);
        }
        return v;
    }

    NoiseModel model(const Vector& p) const {
        NoiseModel m;
        m.add(White{std::exp(p[0])});
        if (one_over_f) m.add(OneOverF{std::exp(p[1]), alpha(p)});
        for (std::size_t k = 0; k < lorentzians; ++k)
            m.add(Lorentzian{std::exp(p[lorentz_offset() + 2 * k]), std::exp(p[lorentz_offset() + 2 * k + 1])});
        return m;
    }
};

struct JointData {
    LogBinned psd;
    std::vector<double> taus, var, allan_weight;
    double psd_norm = 1.0, allan_norm = 1.0;
    double ln_fc_lo = 0.0, ln_fc_hi = 0.0;

    Eigen::Index size() const { return static_cast<Eigen::Index>(psd.f.size() + taus.size()); }

    bool residual(const Layout& lay, const Vector& p, Vector& r) const {
        for (std::size_t k = 0; k < lay.lorentzians; ++k) {
            const double lfc = p[lay.lorentz_offset() + 2 * k + 1];
            if (lfc < ln_fc_lo || lfc > ln_fc_hi) return false;
        }
        if (lay.one_over_f && lay.exponent && (p[2] < 0.5 || p[2] > 1.5)) return false;
        for (Eigen::Index i = 0; i < p.size(); ++i)
            if (std::abs(p[i]) > 700.0) return false;
        Eigen::Index j = 0;
        for (std::size_t i = 0; i < psd.f.size(); ++i, ++j)
            r[j] = std::log(lay.binned_psd(p, psd.members[i]) / psd.s[i]) * psd.weight[i] / psd_norm;
        for (std::size_t i = 0; i < taus.size(); ++i, ++j)
            r[j] = std::log(lay.allan_var(p, taus[i]) / var[i]) * allan_weight[i] / allan_norm;
        return true;
    }
};

struct Candidate {
    Layout layout;
    Vector params;
    Vector stderr_;
    double cost = std::numeric_limits<double>::infinity();
    double bic = std::numeric_limits<double>::infinity();
};

inline Candidate fit_layout(const JointData& data, const Layout& lay, const Vector& p0) {
    Candidate c;
    c.layout = lay;
    ResidualFn fn = [&](const Vector& p, Vector& r) { return data.residual(lay, p, r); };
    LmOptions opt;
    opt.max_iterations = 200;
    opt.ftol = 1e-12;
    const LmResult lm = levenberg_marquardt(fn, std::nullopt, p0, data.size(), opt);
    if (lm.residuals.size() != data.size()) return c;
    c.params = lm.params;
    c.stderr_ = lm.stderr_;
    c.cost = lm.cost;
    // The criterion counts PSD bins only: Allan points come from the same
    // record at overlapping scales and are far from independent.
    const auto bins = static_cast<Eigen::Index>(data.psd.f.size());
    const double n = static_cast<double>(bins);
    // RSS is a weighted mean of squared log residuals; below an RMS of 1e-6
    // differences are solver noise, not structure.
    const double rss = std::max(lm.residuals.head(bins).squaredNorm(), 1e-12);
    c.bic = n * std::log(rss / n) + static_cast<double>(lay.size()) * std::log(n);
    return c;
}

/// Data excess over the current model in the bin nearest fc; sets the
/// starting power of a new Lorentzian.
inline double excess_at(const JointData& data, const Layout& lay, const Vector& p, double fc) {
    const auto& f = data.psd.f;
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (std::abs(std::log(f[i] / fc)) < std::abs(std::log(f[best] / fc))) best = i;
    const double d = data.psd.s[best];
    const double m = lay.binned_psd(p, data.psd.members[best]);
    return d > m ? d - m : 0.5 * d;
}

inline std::vector<double> corner_seeds(const JointData& data, const std::optional<AllanCurve>& allan) {
    std::vector<double> seeds;
    const double f_lo = data.psd.f.front(), f_hi = data.psd.f.back();
    if (allan && allan->size() >= 3) {
        const auto a = allan->adev();
        const double kpk = AllanKernels::instance().lorentzian_peak_product();
        for (std::size_t i = 1; i + 1 < a.size(); ++i)
            if (a[i] > a[i - 1] && a[i] >= a[i + 1]) seeds.push_back(kpk / allan->taus()[i]);
        // Shoulders hidden under white noise show up as maxima of adev * sqrt(tau).
        for (std::size_t i = 1; i + 1 < a.size(); ++i) {
            const auto t = allan->taus();
            const double l = a[i - 1] * std::sqrt(t[i - 1]), c = a[i] * std::sqrt(t[i]), r = a[i + 1] * std::sqrt(t[i + 1]);
            if (c > l && c >= r) seeds.push_back(kpk / t[i]);
        }
    }
    const double decades = std::log10(f_hi / f_lo) + 1.0;
    const int n = std::max(4, static_cast<int>(std::ceil(decades * 2.0)) + 1);
    for (double fc : logspace(f_lo / 3.0, f_hi, static_cast<std::size_t>(n))) seeds.push_back(fc);
    return seeds;
}

inline Vector extend(const Vector& p, const Layout& from, const Layout& to) {
    Vector q(to.size());
    q[0] = p[0];
    Eigen::Index j = 1;
    if (to.one_over_f) {
        q[j++] = from.one_over_f ? p[1] : p[0];
        if (to.exponent) q[j++] = from.one_over_f && from.exponent ? p[2] : 1.0;
    }
    for (Eigen::Index k = 0; k < 2 * static_cast<Eigen::Index>(from.lorentzians); ++k)
        q[to.lorentz_offset() + k] = p[from.lorentz_offset() + k];
    return q;
}

inline Candidate add_lorentzian(const JointData& data, const Candidate& base, const std::vector<double>& seeds) {
    Layout lay = base.layout;
    ++lay.lorentzians;
    Candidate best;
    for (double fc : seeds) {
        const double lfc = std::clamp(std::log(fc), data.ln_fc_lo + 1e-6, data.ln_fc_hi - 1e-6);
        Vector p0 = extend(base.params, base.layout, lay);
        const double excess = excess_at(data, base.layout, base.params, std::exp(lfc));
        p0[lay.size() - 2] = std::log(excess * std::numbers::pi * std::exp(lfc));
        p0[lay.size() - 1] = lfc;
        Candidate c = fit_layout(data, lay, p0);
        if (c.cost < best.cost) best = std::move(c);
    }
    return best;
}

inline double rms_log(const std::vector<double>& model, const std::vector<double>& data) {
    if (data.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double d = std::log(model[i] / data[i]);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(data.size()));
}

inline void annotate_corners(FitReport& report) {
    for (const auto& l : report.model.all<Lorentzian>()) {
        if (l.corner_frequency < kQuasiparticleCorner) {
            std::ostringstream msg;
            msg << "corner " << l.corner_frequency << " Hz is below typical quasiparticle rates";
            report.notes.push_back(msg.str());
        }
    }
}

} // namespace detail

/// Power shares of each component class over [band_lo, band_hi]. A drift whose
/// rate differs from 0 by more than 3 standard errors contributes r^2 T^2 / 12,
/// the variance of a linear ramp over the record.
inline BandShares band_shares(const NoiseModel& model, double band_lo, double band_hi,
                              const std::optional<DriftEstimate>& drift = std::nullopt) {
    BandShares s;
    for (const auto& c : model.components()) {
        const double p = component_band_power(c, band_lo, band_hi);
        if (std::holds_alternative<White>(c)) s.white += p;
        else if (std::holds_alternative<OneOverF>(c)) s.one_over_f += p;
        else if (std::holds_alternative<Lorentzian>(c)) {
            s.lorentzian += p;
            s.largest_lorentzian = std::max(s.largest_lorentzian, p);
        }
    }
    if (drift && std::abs(drift->rate) > 3.0 * drift->stderr_) {
        const double rt = drift->rate * drift->duration;
        s.drift = rt * rt / 12.0;
    }
    const double total = s.white + s.one_over_f + s.lorentzian + s.drift;
    if (total > 0.0) {
        s.white /= total;
        s.one_over_f /= total;
        s.lorentzian /= total;
        s.largest_lorentzian /= total;
        s.drift /= total;
    }
    return s;
}

/// Telegraph bimodality or Lorentzians above 50% of band power: single
/// fluctuator; 1/f plus drift above 50%: ensemble; white above 80%: white
/// limited; otherwise mixed.
inline Classification classify_shares(const BandShares& s, bool bimodal) {
    if (bimodal || s.largest_lorentzian > 0.5) return Classification::single_fluctuator_dominated;
    if (s.one_over_f + s.drift > 0.5) return Classification::ensemble_one_over_f_dominated;
    if (s.white > 0.8) return Classification::white_limited;
    return Classification::mixed;
}

inline Classification classify_mechanism(const FitReport& report, const std::optional<TelegraphDetection>& telegraph,
                                         const std::optional<DriftEstimate>& drift) {
    const BandShares s = band_shares(report.model, report.band_lo, report.band_hi, drift);
    return classify_shares(s, telegraph && telegraph->bimodal);
}

/// Stores telegraph and drift results in the report and reclassifies.
inline void attach_time_domain(FitReport& report, const std::optional<TelegraphDetection>& telegraph,
                               const std::optional<DriftEstimate>& drift) {
    report.telegraph = telegraph;
    report.drift = drift;
    report.shares = band_shares(report.model, report.band_lo, report.band_hi, drift);
    report.classification = classify_shares(report.shares, telegraph && telegraph->bimodal);
}

inline FitReport fit_noise_model(const PowerSpectrum& psd, const std::optional<AllanCurve>& allan,
                                 const FitOptions& opt = {}) {
    require(psd.size() >= 10, "fit_noise_model: need at least 10 PSD points");
    const double f_lo = psd.frequencies().front(), f_hi = psd.frequencies().back();
    require(f_hi / f_lo >= 100.0 * (1.0 - 1e-9), "fit_noise_model: PSD must span at least 2 decades");
    require(opt.bins_per_decade >= 2, "fit_noise_model: bins_per_decade must be >= 2");

    detail::JointData data;
    data.psd = detail::log_bin(psd, opt.bins_per_decade);
    require(data.psd.f.size() >= 4, "fit_noise_model: fewer than 4 non-zero PSD bins");
    double w2 = 0.0;
    for (double w : data.psd.weight) w2 += w * w;
    data.psd_norm = std::sqrt(w2);
    if (allan) {
        // Overlapping estimates report ~N pairs at every tau although only
        // ~T/tau of them are independent; cap each count at that scale.
        const double tau_count = allan->size() > 0 && allan->counts()[0] > 0
                                     ? allan->taus()[0] * static_cast<double>(allan->counts()[0])
                                     : 0.0;
        for (std::size_t i = 0; i < allan->size(); ++i) {
            if (allan->adev()[i] <= 0.0) continue;
            data.taus.push_back(allan->taus()[i]);
            data.var.push_back(allan->adev()[i] * allan->adev()[i]);
            const auto c = static_cast<double>(allan->counts()[i]);
            const double eff = tau_count > 0.0 ? std::min(c, tau_count / allan->taus()[i]) : c;
            data.allan_weight.push_back(eff > 0.0 ? std::sqrt(eff) : 1.0);
        }
        double a2 = 0.0;
        for (double w : data.allan_weight) a2 += w * w;
        data.allan_norm = a2 > 0.0 ? std::sqrt(a2) : 1.0;
    }
    data.ln_fc_lo = std::log(f_lo / 20.0);
    data.ln_fc_hi = std::log(f_hi * 20.0);

    // Flat start: median level.
    std::vector<double> sorted = data.psd.s;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];

    detail::Layout white_layout;
    Vector p_white(1);
    p_white[0] = std::log(median);
    const detail::Candidate white_only = detail::fit_layout(data, white_layout, p_white);
    if (!std::isfinite(white_only.cost)) throw FitFailure("fit_noise_model: flat model could not be fitted");

    std::vector<detail::Candidate> bases{white_only};
    if (opt.allow_one_over_f) {
        detail::Layout lay;
        lay.one_over_f = true;
        lay.exponent = opt.fit_exponent;
        // Start with 1/f carrying the low-frequency level.
        Vector p0 = detail::extend(white_only.params, white_layout, lay);
        p0[0] = std::log(data.psd.s.back());
        p0[1] = std::log(std::max(data.psd.s.front() - data.psd.s.back(), 0.1 * data.psd.s.front()) * data.psd.f.front());
        detail::Candidate c = detail::fit_layout(data, lay, p0);
        if (std::isfinite(c.cost)) bases.push_back(std::move(c));
    }

    const std::vector<double> seeds = detail::corner_seeds(data, allan);
    detail::Candidate best = white_only;
    std::size_t considered = 0;
    for (const auto& base : bases) {
        detail::Candidate current = base;
        if (current.bic < best.bic) best = current;
        for (std::size_t k = 0; k < opt.max_lorentzians; ++k) {
            considered = std::max(considered, k + 1);
            detail::Candidate next = detail::add_lorentzian(data, current, seeds);
            if (!(next.bic < current.bic)) break;
            current = std::move(next);
            if (current.bic < best.bic) best = current;
        }
    }

    FitReport report;
    report.model = best.layout.model(best.params);
    report.n_lorentzians_considered = considered;
    report.information_criterion = best.bic;
    report.band_lo = f_lo;
    report.band_hi = f_hi;

    std::vector<double> model_s(data.psd.f.size()), model_v(data.taus.size());
    for (std::size_t i = 0; i < data.psd.f.size(); ++i) model_s[i] = best.layout.binned_psd(best.params, data.psd.members[i]);
    for (std::size_t i = 0; i < data.taus.size(); ++i) model_v[i] = best.layout.allan_var(best.params, data.taus[i]);
    report.residual_psd = detail::rms_log(model_s, data.psd.s);
    report.residual_allan = 0.5 * detail::rms_log(model_v, data.var);

    // Standard errors of log parameters propagate as relative errors.
    const auto& p = best.params;
    const auto& e = best.stderr_;
    auto rel = [&](Eigen::Index i) { return std::exp(p[i]) * e[i]; };
    std::size_t idx = 0;
    report.component_errors.push_back({idx++, "level", std::exp(p[0]), rel(0)});
    if (best.layout.one_over_f) {
        report.component_errors.push_back({idx, "amplitude", std::exp(p[1]), rel(1)});
        if (best.layout.exponent) report.component_errors.push_back({idx, "exponent", p[2], e[2]});
        ++idx;
    }
    for (std::size_t k = 0; k < best.layout.lorentzians; ++k, ++idx) {
        const Eigen::Index o = best.layout.lorentz_offset() + 2 * static_cast<Eigen::Index>(k);
        report.component_errors.push_back({idx, "total_power", std::exp(p[o]), rel(o)});
        report.component_errors.push_back({idx, "corner_frequency", std::exp(p[o + 1]), rel(o + 1)});
    }

    if (best.layout.lorentzians == 0 && !best.layout.one_over_f) {
        report.low_confidence = true;
        report.notes.push_back("no component improved on the flat model; white-only fit");
    }
    detail::annotate_corners(report);
    attach_time_domain(report, std::nullopt, std::nullopt);
    return report;
}

/// Weighted linear fit S = w + A / f of a spin-locking spectrum. psd_err, when
/// given, holds the one-sigma errors of each point.
inline FitReport fit_spinlock_spectrum(const PowerSpectrum& spectrum, std::span<const double> psd_err = {}) {
    const auto f = spectrum.frequencies();
    const auto s = spectrum.psd();
    require(f.size() >= 8, "fit_spinlock_spectrum: need at least 8 points");
    require(psd_err.empty() || psd_err.size() == f.size(), "fit_spinlock_spectrum: error length mismatch");
    const double smax = *std::max_element(s.begin(), s.end());
    require(smax > 0.0, "fit_spinlock_spectrum: every point is floored at 0");

    std::vector<double> sigma(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double e = psd_err.empty() ? 0.0 : psd_err[i];
        sigma[i] = std::max({e, 1e-3 * s[i], 1e-9 * smax});
    }

    // Columns: white, 1/f. Either may be pinned to zero if it comes out negative.
    auto solve = [&](bool use_white, bool use_flicker) {
        const Eigen::Index cols = (use_white ? 1 : 0) + (use_flicker ? 1 : 0);
        Matrix x(static_cast<Eigen::Index>(f.size()), cols);
        Vector y(static_cast<Eigen::Index>(f.size()));
        for (std::size_t i = 0; i < f.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            Eigen::Index c = 0;
            if (use_white) x(r, c++) = 1.0 / sigma[i];
            if (use_flicker) x(r, c++) = 1.0 / (f[i] * sigma[i]);
            y[r] = s[i] / sigma[i];
        }
        const Vector beta = x.colPivHouseholderQr().solve(y);
        const Matrix cov = (x.transpose() * x).inverse();
        const Vector r = x * beta - y;
        const Eigen::Index dof = x.rows() - cols;
        const double chi2 = dof > 0 ? r.squaredNorm() / static_cast<double>(dof) : 1.0;
        // Errors scale with the observed scatter but never shrink below the stated errors.
        const Vector se = (cov.diagonal() * std::max(chi2, 1.0)).cwiseSqrt();
        double w = 0.0, ws = 0.0, a = 0.0, as = 0.0;
        Eigen::Index c = 0;
        if (use_white) { w = beta[c]; ws = se[c]; ++c; }
        if (use_flicker) { a = beta[c]; as = se[c]; }
        return std::array<double, 4>{w, ws, a, as};
    };

    auto sol = solve(true, true);
    if (sol[2] < 0.0) sol = solve(true, false);
    else if (sol[0] < 0.0) sol = solve(false, true);
    const double w = std::max(sol[0], 0.0), a = std::max(sol[2], 0.0);

    FitReport report;
    report.model.add(White{w});
    report.model.add(OneOverF{a, 1.0});
    report.component_errors.push_back({0, "level", w, sol[1]});
    report.component_errors.push_back({1, "amplitude", a, sol[3]});
    report.band_lo = f.front();
    report.band_hi = f.back();
    const double center = std::sqrt(f.front() * f.back());
    report.one_over_f_to_white_ratio = w > 0.0 ? (a / center) / w : std::numeric_limits<double>::infinity();

    std::vector<double> model, data;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (s[i] <= 0.0) continue;
        model.push_back(std::max(w + a / f[i], 1e-300));
        data.push_back(s[i]);
    }
    report.residual_psd = detail::rms_log(model, data);
    report.n_lorentzians_considered = 0;
    attach_time_domain(report, std::nullopt, std::nullopt);
    return report;
}

/// Two-state clustering of the values. Bimodal when the two cluster means are
/// more than 4 pooled standard deviations apart; the corner then follows from
/// the mean dwell time in each state.
inline TelegraphDetection detect_telegraph(const TimeSeries& series) {
    require(series.size() >= 100, "detect_telegraph: need at least 100 samples");
    const auto x = series.values();
    const std::size_t n = x.size();
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());

    TelegraphDetection out;
    out.low_level = out.high_level = v.front();
    if (v.back() == v.front()) return out;

    // Exact 1-D 2-means: the optimal split is a cut of the sorted values.
    std::vector<long double> pre(n + 1, 0.0L), pre2(n + 1, 0.0L);
    const double shift = v[n / 2];
    for (std::size_t i = 0; i < n; ++i) {
        const long double d = v[i] - shift;
        pre[i + 1] = pre[i] + d;
        pre2[i + 1] = pre2[i] + d * d;
    }
    auto sse = [&](std::size_t a, std::size_t b) {
        const long double s = pre[b] - pre[a];
        return pre2[b] - pre2[a] - s * s / static_cast<long double>(b - a);
    };
    std::size_t cut = 1;
    long double best = std::numeric_limits<long double>::infinity();
    for (std::size_t k = 1; k < n; ++k) {
        if (v[k] == v[k - 1]) continue;
        const long double cost = sse(0, k) + sse(k, n);
        if (cost < best) {
            best = cost;
            cut = k;
        }
    }
    const double lo = static_cast<double>((pre[cut] - pre[0]) / static_cast<long double>(cut)) + shift;
    const double hi = static_cast<double>((pre[n] - pre[cut]) / static_cast<long double>(n - cut)) + shift;
    const double pooled = std::sqrt(static_cast<double>(std::max(best, 0.0L)) / static_cast<double>(n));
    out.low_level = lo;
    out.high_level = hi;
    out.occupancy_high = static_cast<double>(n - cut) / static_cast<double>(n);
    out.separation_ratio = pooled > 0.0 ? (hi - lo) / pooled : std::numeric_limits<double>::infinity();
    const double min_share = 0.01;
    out.bimodal = out.separation_ratio > 4.0 && out.occupancy_high > min_share && out.occupancy_high < 1.0 - min_share;
    if (!out.bimodal) return out;

    // Hysteresis state assignment at 25% / 75% of the gap.
    const double t_up = lo + 0.75 * (hi - lo), t_down = lo + 0.25 * (hi - lo);
    bool high = x[0] > 0.5 * (lo + hi);
    std::size_t run = 0, low_time = 0, high_time = 0, low_runs = 0, high_runs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool next = high ? x[i] > t_down : x[i] >= t_up;
        if (next != high && run > 0) {
            (high ? high_runs : low_runs) += 1;
            run = 0;
        }
        high = next;
        (high ? high_time : low_time) += 1;
        ++run;
    }
    // The trailing run is censored; count it as a partial dwell only if no
    // complete one was seen.
    if ((high ? high_runs : low_runs) == 0) (high ? high_runs : low_runs) = 1;
    if (low_runs == 0) low_runs = 1;
    if (high_runs == 0) high_runs = 1;
    const double dt = series.dt();
    auto rate = [dt](double mean_dwell_steps) {
        // Geometric dwell in steps: P(stay) = exp(-rate dt).
        const double q = 1.0 / std::max(mean_dwell_steps, 1.0 + 1e-12);
        return -std::log1p(-q) / dt;
    };
    const double r_up = rate(static_cast<double>(low_time) / static_cast<double>(low_runs));
    const double r_down = rate(static_cast<double>(high_time) / static_cast<double>(high_runs));
    out.estimated_corner = (r_up + r_down) / (2.0 * std::numbers::pi);
    return out;
}

/// Linear drift: least squares, then a least-absolute-deviation refinement by
/// iteratively reweighted least squares. The standard error is the larger of
/// the least-squares one and the asymptotic LAD one.
inline DriftEstimate estimate_drift(const TimeSeries& series) {
    require(series.size() >= 10, "estimate_drift: need at least 10 samples");
    const auto y = series.values();
    const std::size_t n = y.size();
    const double dt = series.dt();
    const double tbar = 0.5 * static_cast<double>(n - 1) * dt;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) * dt - tbar;

    auto weighted = [&](const std::vector<double>& w) {
        double sw = 0, st = 0, sy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sw += w[i];
            st += w[i] * t[i];
            sy += w[i] * y[i];
        }
        const double tm = st / sw, ym = sy / sw;
        double stt = 0, sty = 0;
        for (std::size_t i = 0; i < n; ++i) {
            stt += w[i] * (t[i] - tm) * (t[i] - tm);
            sty += w[i] * (t[i] - tm) * (y[i] - ym);
        }
        const double slope = sty / stt;
        return std::pair<double, double>{slope, ym - slope * tm};
    };

    std::vector<double> w(n, 1.0);
    auto [slope, icpt] = weighted(w);
    double ss = 0.0, stt = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - icpt - slope * t[i];
        ss += r * r;
        stt += t[i] * t[i];
        scale = std::max(scale, std::abs(y[i]));
    }
    DriftEstimate out;
    out.duration = static_cast<double>(n) * dt;
    out.stderr_ = std::sqrt(ss / static_cast<double>(n - 2) / stt);

    const double eps = 1e-12 * std::max(scale, std::numeric_limits<double>::min());
    if (std::sqrt(ss / static_cast<double>(n)) > eps) {
        for (int it = 0; it < 50; ++it) {
            for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::max(std::abs(y[i] - icpt - slope * t[i]), eps);
            const auto [s2, i2] = weighted(w);
            const bool done = std::abs(s2 - slope) <= 1e-10 * std::abs(s2) + 1e-300;
            slope = s2;
            icpt = i2;
            if (done) break;
        }
    }
    out.rate = slope;
    if (std::sqrt(ss / static_cast<double>(n)) > eps) {
        // Asymptotic LAD error: sqrt(pi/2) * sigma / sqrt(sum t^2), sigma from the MAD.
        std::vector<double> res(n);
        for (std::size_t i = 0; i < n; ++i) res[i] = std::abs(y[i] - icpt - slope * t[i]);
        std::nth_element(res.begin(), res.begin() + static_cast<std::ptrdiff_t>(n / 2), res.end());
        const double sigma = 1.4826 * res[n / 2];
        out.stderr_ = std::max(out.stderr_, std::sqrt(std::numbers::pi / 2.0) * sigma / std::sqrt(stt));
    }
    return out;
}

} // namespace tlsnoise
