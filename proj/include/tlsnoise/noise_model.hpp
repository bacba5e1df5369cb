#pragma once

// Phenomenological noise components and their one-sided spectral densities.
//
// Convention: every PSD is one-sided, so integrating over f > 0 gives the
// variance. A Lorentzian is parameterized by its total power and corner
// frequency:
//   S(f) = (2 P / pi) * fc / (fc^2 + f^2),   int_0^inf S df = P
// A symmetric telegraph process with rates (up, down) maps onto
// fc = (up + down) / (2 pi) and P = variance of the two-level signal.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "tlsnoise/errors.hpp"
#include "tlsnoise/types.hpp"

namespace tlsnoise {

struct White {
    double level = 0.0; ///< units^2 / Hz
};

struct OneOverF {
    double amplitude = 0.0; ///< units^2 at 1 Hz
    double exponent = 1.0;
};

struct Lorentzian {
    double total_power = 0.0;      ///< units^2
    double corner_frequency = 1.0; ///< Hz ("switching frequency")
};

struct Drift {
    double rate = 0.0; ///< units / second
};

using NoiseComponent = std::variant<White, OneOverF, Lorentzian, Drift>;

inline void validate(const NoiseComponent& c) {
    std::visit(
        [](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, White>) {
                require(std::isfinite(x.level) && x.level >= 0.0, "White: level must be >= 0");
            } else if constexpr (std::is_same_v<T, OneOverF>) {
                require(std::isfinite(x.amplitude) && x.amplitude >= 0.0, "OneOverF: amplitude must be >= 0");
                require(x.exponent >= 0.5 && x.exponent <= 1.5, "OneOverF: exponent must lie in [0.5, 1.5]");
            } else if constexpr (std::is_same_v<T, Lorentzian>) {
                require(std::isfinite(x.total_power) && x.total_power >= 0.0,
                        "Lorentzian: total_power must be >= 0");
                require(std::isfinite(x.corner_frequency) && x.corner_frequency > 0.0,
                        "Lorentzian: corner_frequency must be > 0");
            } else {
                require(std::isfinite(x.rate), "Drift: rate must be finite");
            }
        },
        c);
}

/// One-sided PSD of a single component at frequency f > 0. Drift is handled
/// in the time domain and contributes nothing here.
inline double component_psd(const NoiseComponent& c, double f) {
    return std::visit(
        [f](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, White>) {
                return x.level;
            } else if constexpr (std::is_same_v<T, OneOverF>) {
                return x.exponent == 1.0 ? x.amplitude / f : x.amplitude / std::pow(f, x.exponent);
            } else if constexpr (std::is_same_v<T, Lorentzian>) {
                const double fc = x.corner_frequency;
                return (2.0 * x.total_power / std::numbers::pi) * fc / (fc * fc + f * f);
            } else {
                return 0.0;
            }
        },
        c);
}

/// Ordered sum of components. At most one White and one Drift.
class NoiseModel {
public:
    NoiseModel() = default;
    explicit NoiseModel(std::vector<NoiseComponent> components) {
        for (auto& c : components) add(std::move(c));
    }

    NoiseModel& add(NoiseComponent c) {
        validate(c);
        if (std::holds_alternative<White>(c))
            require(!has<White>(), "NoiseModel: at most one White component");
        if (std::holds_alternative<Drift>(c))
            require(!has<Drift>(), "NoiseModel: at most one Drift component");
        components_.push_back(std::move(c));
        return *this;
    }

    std::span<const NoiseComponent> components() const { return components_; }
    bool empty() const { return components_.empty(); }
    std::size_t size() const { return components_.size(); }

    template <typename T>
    bool has() const {
        for (const auto& c : components_)
            if (std::holds_alternative<T>(c)) return true;
        return false;
    }

    template <typename T>
    std::vector<T> all() const {
        std::vector<T> out;
        for (const auto& c : components_)
            if (const T* p = std::get_if<T>(&c)) out.push_back(*p);
        return out;
    }

    double drift_rate() const {
        for (const auto& c : components_)
            if (const Drift* d = std::get_if<Drift>(&c)) return d->rate;
        return 0.0;
    }

    double psd_at(double f) const {
        double s = 0.0;
        for (const auto& c : components_) s += component_psd(c, f);
        return s;
    }

    /// Union of the two component lists (this first).
    NoiseModel merged(const NoiseModel& other) const {
        NoiseModel out = *this;
        for (const auto& c : other.components_) out.add(c);
        return out;
    }

private:
    std::vector<NoiseComponent> components_;
};

inline PowerSpectrum model_psd(const NoiseModel& model, std::span<const double> frequencies) {
    detail::require_increasing_positive(frequencies, "model_psd");
    std::vector<double> psd(frequencies.size());
    for (std::size_t i = 0; i < frequencies.size(); ++i) psd[i] = model.psd_at(frequencies[i]);
    return PowerSpectrum({frequencies.begin(), frequencies.end()}, std::move(psd));
}

/// Closed-form integral of a component's PSD over [f_lo, f_hi].
inline double component_band_power(const NoiseComponent& c, double f_lo, double f_hi) {
    require(f_lo > 0.0 && f_hi > f_lo, "component_band_power: need 0 < f_lo < f_hi");
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, White>) {
                return x.level * (f_hi - f_lo);
            } else if constexpr (std::is_same_v<T, OneOverF>) {
                if (std::abs(x.exponent - 1.0) < 1e-12) return x.amplitude * std::log(f_hi / f_lo);
                const double e = 1.0 - x.exponent;
                return x.amplitude * (std::pow(f_hi, e) - std::pow(f_lo, e)) / e;
            } else if constexpr (std::is_same_v<T, Lorentzian>) {
                const double fc = x.corner_frequency;
                return (2.0 * x.total_power / std::numbers::pi) *
                       (std::atan(f_hi / fc) - std::atan(f_lo / fc));
            } else {
                return 0.0;
            }
        },
        c);
}

inline std::string component_name(const NoiseComponent& c) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, White>) return "white";
            else if constexpr (std::is_same_v<T, OneOverF>) return "one_over_f";
            else if constexpr (std::is_same_v<T, Lorentzian>) return "lorentzian";
            else return "drift";
        },
        c);
}

/// Lorentzian equivalent of a two-level telegraph signal.
inline Lorentzian telegraph_lorentzian(double rate_up, double rate_down, double low, double high) {
    const double total = rate_up + rate_down;
    require(total > 0.0, "telegraph_lorentzian: rates must not both be zero");
    const double p_high = rate_up / total;
    const double gap = high - low;
    return Lorentzian{gap * gap * p_high * (1.0 - p_high), total / (2.0 * std::numbers::pi)};
}

} // namespace tlsnoise
