#pragma once

// Allan deviation implied by a noise model:
//
//   sigma^2(tau) = 2 * int_0^inf S(f) * sin^4(pi f tau) / (pi f tau)^2 df
//
// plus rate * tau / sqrt(2) (in quadrature) for a linear drift.
//
// The integral is taken in x = f * tau over [f_lo * tau, f_hi * tau] with
// f_lo = 1 / (1e4 * tau_max), f_hi = 1e4 / tau_min. Three pieces:
//   x < 1          log-spaced Simpson
//   1 <= x < 256   Simpson on every unit period of sin^4
//   x >= 256       log-spaced Simpson on the period-averaged kernel 3/8
// and the whole thing is refined by doubling until the relative change
// drops below 1e-3.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "tlsnoise/errors.hpp"
#include "tlsnoise/noise_model.hpp"
#include "tlsnoise/types.hpp"

namespace tlsnoise {

struct AllanQuadratureOptions {
    double relative_tolerance = 1e-3;
    int max_refinements = 6;
    double decades_below = 4.0; ///< f_lo = 10^-decades_below / tau_max
    double decades_above = 4.0; ///< f_hi = 10^decades_above / tau_min
};

namespace detail {

inline double allan_kernel(double x) {
    const double y = std::numbers::pi * x;
    if (y < 1e-6) return y * y;
    const double s = std::sin(y);
    const double s2 = s * s;
    return s2 * s2 / (y * y);
}

template <typename F>
double simpson_log(const F& g, double a, double b, double per_decade) {
    if (!(b > a)) return 0.0;
    const double ua = std::log(a), ub = std::log(b);
    const double decades = (ub - ua) / std::numbers::ln10;
    int n = static_cast<int>(std::ceil(decades * per_decade));
    n = std::max(n, 2);
    if (n % 2) ++n;
    const double h = (ub - ua) / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double u = ua + h * i;
        const double x = std::exp(u);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * g(x) * x;
    }
    return sum * h / 3.0;
}

template <typename F>
double simpson_linear(const F& g, double a, double b, int n) {
    if (!(b > a)) return 0.0;
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * g(a + h * i);
    }
    return sum * h / 3.0;
}

template <typename Psd>
double allan_integral_level(const Psd& psd, double tau, double x_lo, double x_hi, int level) {
    constexpr double x_osc = 256.0;
    const double per_decade = 16.0 * std::ldexp(1.0, level);
    const int per_period = 4 << level;
    auto g = [&](double x) { return psd(x / tau) * allan_kernel(x); };
    auto g_avg = [&](double x) {
        const double y = std::numbers::pi * x;
        return psd(x / tau) * 0.375 / (y * y);
    };

    double total = simpson_log(g, x_lo, std::min(1.0, x_hi), per_decade);
    const double osc_end = std::min(x_osc, x_hi);
    for (double k = std::max(1.0, std::floor(x_lo)); k < osc_end; k += 1.0) {
        const double a = std::max(k, x_lo);
        const double b = std::min(k + 1.0, osc_end);
        const int n = std::max(2, static_cast<int>(std::ceil(per_period * (b - a))));
        total += simpson_linear(g, a, b, n);
    }
    total += simpson_log(g_avg, std::max(x_osc, x_lo), x_hi, per_decade);
    return 2.0 * total / tau;
}

/// Allan variance of an arbitrary one-sided PSD at a single tau.
template <typename Psd>
double allan_variance_quadrature(const Psd& psd, double tau, double f_lo, double f_hi,
                                 const AllanQuadratureOptions& opt = {}) {
    const double x_lo = f_lo * tau;
    const double x_hi = f_hi * tau;
    double previous = allan_integral_level(psd, tau, x_lo, x_hi, 0);
    for (int level = 1; level <= opt.max_refinements; ++level) {
        const double current = allan_integral_level(psd, tau, x_lo, x_hi, level);
        if (std::abs(current - previous) <= opt.relative_tolerance * std::abs(current)) return current;
        previous = current;
    }
    std::ostringstream msg;
    msg << "model_allan: quadrature did not converge at tau=" << tau << " s after "
        << opt.max_refinements << " refinements (last estimate " << previous << ")";
    throw NumericalError(msg.str());
}

} // namespace detail

/// Model Allan deviation by numerical quadrature of the transfer integral.
inline AllanCurve model_allan(const NoiseModel& model, std::span<const double> taus,
                              const AllanQuadratureOptions& opt = {}) {
    detail::require_increasing_positive(taus, "model_allan");
    const double f_lo = std::pow(10.0, -opt.decades_below) / taus.back();
    const double f_hi = std::pow(10.0, opt.decades_above) / taus.front();
    const double drift = model.drift_rate();
    auto psd = [&model](double f) { return model.psd_at(f); };

    std::vector<double> adev(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double tau = taus[i];
        double var = detail::allan_variance_quadrature(psd, tau, f_lo, f_hi, opt);
        var += 0.5 * (drift * tau) * (drift * tau);
        adev[i] = std::sqrt(std::max(var, 0.0));
    }
    return AllanCurve({taus.begin(), taus.end()}, std::move(adev), std::vector<std::size_t>(taus.size(), 0));
}

namespace detail {

/// Cubic Hermite interpolation on a uniform grid (Catmull-Rom tangents),
/// linear extrapolation beyond the ends.
class UniformCubic {
public:
    UniformCubic() = default;
    UniformCubic(double x0, double step, std::vector<double> y)
        : x0_(x0), step_(step), y_(std::move(y)) {}

    double operator()(double x) const {
        const std::size_t n = y_.size();
        const double s = (x - x0_) / step_;
        if (s <= 0.0) return y_[0] + s * (y_[1] - y_[0]);
        if (s >= static_cast<double>(n - 1)) return y_[n - 1] + (s - (n - 1)) * (y_[n - 1] - y_[n - 2]);
        const auto i = static_cast<std::size_t>(s);
        const double t = s - static_cast<double>(i);
        const double m0 = i == 0 ? y_[1] - y_[0] : 0.5 * (y_[i + 1] - y_[i - 1]);
        const double m1 = i + 2 >= n ? y_[n - 1] - y_[n - 2] : 0.5 * (y_[i + 2] - y_[i]);
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y_[i + 1] +
               (t3 - t2) * m1;
    }

private:
    double x0_ = 0.0;
    double step_ = 1.0;
    std::vector<double> y_;
};

} // namespace detail

/// Scale-invariant Allan kernels, tabulated once from the same quadrature as
/// model_allan. Used by fitting loops that need thousands of evaluations.
///   White:      sigma^2 = level * white / tau
///   1/f^a:      sigma^2 = amplitude * tau^(a-1) * flicker(a)
///   Lorentzian: sigma^2 = P * lorentzian(fc * tau)
class AllanKernels {
public:
    static const AllanKernels& instance() {
        static const AllanKernels kernels;
        return kernels;
    }

    double white() const { return white_; }
    double flicker(double exponent) const { return std::exp(flicker_(exponent)); }
    double lorentzian(double x) const { return std::exp(lorentz_(std::log10(x))); }
    /// tau_peak * fc for any Lorentzian.
    double lorentzian_peak_product() const { return peak_product_; }

private:
    static constexpr double kLogXMin = -5.0;
    static constexpr double kLogXMax = 5.0;
    static constexpr double kLogStep = 0.05;

    AllanKernels() {
        const double f_lo = 1e-4, f_hi = 1e4; // tau = 1
        white_ = detail::allan_variance_quadrature([](double) { return 1.0; }, 1.0, f_lo, f_hi);

        std::vector<double> fl;
        for (int i = 0; i <= 100; ++i) {
            const double a = 0.5 + 0.01 * i;
            fl.push_back(std::log(detail::allan_variance_quadrature(
                [a](double f) { return std::pow(f, -a); }, 1.0, f_lo, f_hi)));
        }
        flicker_ = detail::UniformCubic(0.5, 0.01, std::move(fl));

        std::vector<double> lz;
        const int n = static_cast<int>(std::lround((kLogXMax - kLogXMin) / kLogStep));
        for (int i = 0; i <= n; ++i) lz.push_back(std::log(unit_lorentzian(kLogXMin + kLogStep * i)));
        lorentz_ = detail::UniformCubic(kLogXMin, kLogStep, std::move(lz));

        // Golden-section search for the peak of the unit-power Lorentzian.
        double a = -1.5, b = 0.5;
        const double r = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - r * (b - a), d = a + r * (b - a);
        double fc_val = unit_lorentzian(c), fd_val = unit_lorentzian(d);
        while (b - a > 1e-7) {
            if (fc_val > fd_val) {
                b = d;
                d = c;
                fd_val = fc_val;
                c = b - r * (b - a);
                fc_val = unit_lorentzian(c);
            } else {
                a = c;
                c = d;
                fc_val = fd_val;
                d = a + r * (b - a);
                fd_val = unit_lorentzian(d);
            }
        }
        peak_product_ = std::pow(10.0, 0.5 * (a + b));
    }

    static double unit_lorentzian(double log10_x) {
        const double tau = std::pow(10.0, log10_x);
        auto s = [](double f) { return (2.0 / std::numbers::pi) / (1.0 + f * f); };
        AllanQuadratureOptions tight;
        tight.relative_tolerance = 1e-6;
        tight.max_refinements = 8;
        return detail::allan_variance_quadrature(s, tau, 1e-4 / tau, 1e4 / tau, tight);
    }

    double white_ = 0.5;
    double peak_product_ = 0.3;
    detail::UniformCubic flicker_;
    detail::UniformCubic lorentz_;
};

/// Allan variance from the tabulated kernels; agrees with model_allan to
/// interpolation accuracy (~1e-4 relative).
inline double model_allan_variance_fast(const NoiseModel& model, double tau) {
    const auto& k = AllanKernels::instance();
    double var = 0.0;
    for (const auto& c : model.components()) {
        if (const auto* w = std::get_if<White>(&c)) {
            var += w->level * k.white() / tau;
        } else if (const auto* f = std::get_if<OneOverF>(&c)) {
            var += f->amplitude * std::pow(tau, f->exponent - 1.0) * k.flicker(f->exponent);
        } else if (const auto* l = std::get_if<Lorentzian>(&c)) {
            var += l->total_power * k.lorentzian(l->corner_frequency * tau);
        } else if (const auto* d = std::get_if<Drift>(&c)) {
            var += 0.5 * (d->rate * tau) * (d->rate * tau);
        }
    }
    return var;
}

inline AllanCurve model_allan_fast(const NoiseModel& model, std::span<const double> taus) {
    detail::require_increasing_positive(taus, "model_allan_fast");
    std::vector<double> adev(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i)
        adev[i] = std::sqrt(std::max(model_allan_variance_fast(model, taus[i]), 0.0));
    return AllanCurve({taus.begin(), taus.end()}, std::move(adev), std::vector<std::size_t>(taus.size(), 0));
}

/// tau at which a Lorentzian's Allan deviation peaks.
inline double allan_peak_tau(const Lorentzian& l) {
    return AllanKernels::instance().lorentzian_peak_product() / l.corner_frequency;
}

} // namespace tlsnoise
