#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tlsnoise/errors.hpp"

namespace tlsnoise {

enum class Unit { seconds, hertz, dimensionless };

inline std::string_view to_string(Unit u) {
    switch (u) {
    case Unit::seconds: return "seconds";
    case Unit::hertz: return "hertz";
    case Unit::dimensionless: return "dimensionless";
    }
    return "dimensionless";
}

inline Unit parse_unit(std::string_view s) {
    if (s == "seconds" || s == "s") return Unit::seconds;
    if (s == "hertz" || s == "Hz" || s == "hz") return Unit::hertz;
    if (s == "dimensionless" || s == "1") return Unit::dimensionless;
    throw InvalidInput("unknown unit '" + std::string(s) + "'");
}

/// Non-fatal notes attached to generator and protocol outputs.
struct Diagnostics {
    std::vector<std::string> warnings;

    bool empty() const { return warnings.empty(); }
    void warn(std::string message) { warnings.push_back(std::move(message)); }
};

/// Uniformly sampled record of a fluctuating observable.
class TimeSeries {
public:
    TimeSeries(std::vector<double> values, double dt, Unit unit = Unit::dimensionless,
               double start_time = 0.0)
        : values_(std::move(values)), dt_(dt), start_time_(start_time), unit_(unit) {
        require(std::isfinite(dt_) && dt_ > 0.0, "TimeSeries: dt must be finite and > 0");
        require(!values_.empty(), "TimeSeries: values must be non-empty");
        require(std::isfinite(start_time_), "TimeSeries: start_time must be finite");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i]))
                throw InvalidInput("TimeSeries: non-finite value at index " + std::to_string(i));
        }
    }

    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    double dt() const { return dt_; }
    double start_time() const { return start_time_; }
    Unit unit() const { return unit_; }
    double time(std::size_t i) const { return start_time_ + dt_ * static_cast<double>(i); }
    double duration() const { return dt_ * static_cast<double>(values_.size()); }

    /// Same sampling grid and unit, new values.
    TimeSeries with_values(std::vector<double> values) const {
        return TimeSeries(std::move(values), dt_, unit_, start_time_);
    }

private:
    std::vector<double> values_;
    double dt_;
    double start_time_;
    Unit unit_;
};

/// One-sided power spectral density on a strictly increasing positive grid.
class PowerSpectrum {
public:
    PowerSpectrum(std::vector<double> frequencies, std::vector<double> psd)
        : frequencies_(std::move(frequencies)), psd_(std::move(psd)) {
        require(frequencies_.size() == psd_.size(), "PowerSpectrum: length mismatch");
        require(!frequencies_.empty(), "PowerSpectrum: empty grid");
        for (std::size_t i = 0; i < frequencies_.size(); ++i) {
            require(std::isfinite(frequencies_[i]) && frequencies_[i] > 0.0,
                    "PowerSpectrum: frequencies must be finite and > 0");
            require(i == 0 || frequencies_[i] > frequencies_[i - 1],
                    "PowerSpectrum: frequencies must be strictly increasing");
            require(std::isfinite(psd_[i]) && psd_[i] >= 0.0,
                    "PowerSpectrum: psd values must be finite and >= 0");
        }
    }

    std::span<const double> frequencies() const { return frequencies_; }
    std::span<const double> psd() const { return psd_; }
    std::size_t size() const { return psd_.size(); }

private:
    std::vector<double> frequencies_;
    std::vector<double> psd_;
};

/// Allan deviation estimate; counts is 0 for model curves.
class AllanCurve {
public:
    AllanCurve(std::vector<double> taus, std::vector<double> adev, std::vector<std::size_t> counts)
        : taus_(std::move(taus)), adev_(std::move(adev)), counts_(std::move(counts)) {
        require(taus_.size() == adev_.size() && taus_.size() == counts_.size(),
                "AllanCurve: length mismatch");
        for (std::size_t i = 0; i < taus_.size(); ++i) {
            require(std::isfinite(taus_[i]) && taus_[i] > 0.0, "AllanCurve: taus must be > 0");
            require(i == 0 || taus_[i] > taus_[i - 1], "AllanCurve: taus must be strictly increasing");
            require(std::isfinite(adev_[i]) && adev_[i] >= 0.0, "AllanCurve: adev must be >= 0");
        }
    }

    std::span<const double> taus() const { return taus_; }
    std::span<const double> adev() const { return adev_; }
    std::span<const std::size_t> counts() const { return counts_; }
    std::size_t size() const { return taus_.size(); }

    /// 1/sqrt(count) relative error bar; 0 for model curves.
    double relative_error(std::size_t i) const {
        return counts_[i] > 0 ? 1.0 / std::sqrt(static_cast<double>(counts_[i])) : 0.0;
    }

private:
    std::vector<double> taus_;
    std::vector<double> adev_;
    std::vector<std::size_t> counts_;
};

namespace detail {

inline void require_increasing_positive(std::span<const double> xs, const char* what) {
    require(!xs.empty(), std::string(what) + ": grid must be non-empty");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        require(std::isfinite(xs[i]) && xs[i] > 0.0, std::string(what) + ": grid values must be > 0");
        require(i == 0 || xs[i] > xs[i - 1], std::string(what) + ": grid must be strictly increasing");
    }
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

} // namespace detail

using detail::logspace;

} // namespace tlsnoise
