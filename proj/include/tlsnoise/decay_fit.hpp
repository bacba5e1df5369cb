#pragma once

// Curve fits for relaxation, Ramsey and spin-locking traces.
//
// All fits work in normalized time u = t / t_max so that rescaling the delays
// by k rescales fitted times by k along the same solver path.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "tlsnoise/errors.hpp"
#include "tlsnoise/least_squares.hpp"
#include "tlsnoise/qubit.hpp"
#include "tlsnoise/types.hpp"

namespace tlsnoise {

struct ExponentialFit {
    double t1 = 0.0; ///< decay time, s
    double amplitude = 0.0;
    double offset = 0.0;
    double t1_stderr = 0.0;
    double amplitude_stderr = 0.0;
    double offset_stderr = 0.0;
    double rms_residual = 0.0;
};

struct RamseyFit {
    double t2 = 0.0;               ///< s
    double frequency_offset = 0.0; ///< Hz, |detuning| of the fringe
    double amplitude = 0.0;
    double offset = 0.0;
    double t2_stderr = 0.0;
    double frequency_stderr = 0.0;
    double rms_residual = 0.0;
};

struct RamseyBeatsFit {
    double g = 0.0;        ///< Hz
    double detuning = 0.0; ///< Hz, reported as |delta|
    double t2 = 0.0;       ///< s
    double g_stderr = 0.0;
    double detuning_stderr = 0.0;
    double t2_stderr = 0.0;
    std::array<double, 2> tone_frequencies{}; ///< Hz, ascending
    std::array<double, 2> tone_amplitudes{};
    double rms_residual = 0.0;
};

namespace detail {

struct NormalizedCurve {
    std::vector<double> u;
    std::vector<double> y;
    std::vector<double> sigma;
    double t_scale = 1.0;
};

inline NormalizedCurve normalize(const DecayCurve& c, std::size_t min_points) {
    validate(c);
    require(c.size() >= min_points, "fit: need at least " + std::to_string(min_points) + " points");
    NormalizedCurve n;
    n.t_scale = c.delays.back();
    require(n.t_scale > 0.0, "fit: delays must span a positive interval");
    n.u.resize(c.size());
    n.y = c.populations;
    n.sigma.assign(c.size(), 1.0);
    for (std::size_t i = 0; i < c.size(); ++i) n.u[i] = c.delays[i] / n.t_scale;
    if (!c.ideal()) {
        const double shots = static_cast<double>(c.shots);
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double p = (c.populations[i] * shots + 0.5) / (shots + 1.0);
            n.sigma[i] = std::sqrt(p * (1.0 - p) / shots);
        }
    }
    return n;
}

inline double rms(const Vector& r, const std::vector<double>& sigma) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) s += (r[i] * sigma[i]) * (r[i] * sigma[i]);
    return std::sqrt(s / static_cast<double>(r.size()));
}

/// Weighted linear least squares y ~ X beta; returns (beta, weighted SSR).
inline std::pair<Vector, double> weighted_linear(const Matrix& x, const std::vector<double>& y,
                                                 const std::vector<double>& sigma) {
    Matrix xw = x;
    Vector yw(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) {
        xw.row(i) /= sigma[i];
        yw[i] = y[i] / sigma[i];
    }
    Vector beta = xw.colPivHouseholderQr().solve(yw);
    return {beta, (xw * beta - yw).squaredNorm()};
}

/// |sum_i w_i (y_i - mean) exp(-2 pi i nu u_i)| on a grid of nu (cycles per
/// unit of u).
inline std::vector<double> tone_spectrum(const std::vector<double>& u, const std::vector<double>& y,
                                         const std::vector<double>& weight, const std::vector<double>& grid) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    std::vector<double> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double ph = 2.0 * std::numbers::pi * grid[g] * u[i];
            const double v = (y[i] - mean) * weight[i];
            re += v * std::cos(ph);
            im -= v * std::sin(ph);
        }
        out[g] = std::hypot(re, im);
    }
    return out;
}

inline std::vector<double> frequency_grid(const std::vector<double>& u) {
    double min_step = 1.0;
    for (std::size_t i = 1; i < u.size(); ++i) min_step = std::min(min_step, u[i] - u[i - 1]);
    const double nyquist = 0.5 / std::max(min_step, 1e-6);
    const double span = u.back() - u.front();
    const double step = 0.125 / std::max(span, 1e-12);
    std::vector<double> grid;
    for (double f = 0.0; f <= nyquist; f += step) grid.push_back(f);
    return grid;
}

/// Local maxima of a spectrum, strongest first.
inline std::vector<std::size_t> peaks(const std::vector<double>& s) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool left = i == 0 || s[i] >= s[i - 1];
        const bool right = i + 1 == s.size() || s[i] >= s[i + 1];
        if (left && right) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    return idx;
}

/// Damped multi-tone model y = B + exp(-u/tau) * sum_j (a_j cos 2 pi nu_j u + b_j sin 2 pi nu_j u).
/// Parameter layout: [B, tau, (nu_j, a_j, b_j)...].
struct DampedTones {
    const NormalizedCurve& data;
    int tones;

    Eigen::Index size() const { return 2 + 3 * tones; }

    bool residuals(const Vector& p, Vector& r) const {
        if (!(p[1] > 0.0)) return false;
        for (std::size_t i = 0; i < data.u.size(); ++i) {
            const double u = data.u[i];
            const double env = std::exp(-u / p[1]);
            double m = 0.0;
            for (int j = 0; j < tones; ++j) {
                const double ph = 2.0 * std::numbers::pi * p[2 + 3 * j] * u;
                m += p[3 + 3 * j] * std::cos(ph) + p[4 + 3 * j] * std::sin(ph);
            }
            r[i] = (p[0] + env * m - data.y[i]) / data.sigma[i];
        }
        return true;
    }

    void jacobian(const Vector& p, Matrix& jac) const {
        jac.resize(static_cast<Eigen::Index>(data.u.size()), size());
        for (std::size_t i = 0; i < data.u.size(); ++i) {
            const double u = data.u[i];
            const double s = 1.0 / data.sigma[i];
            const double env = std::exp(-u / p[1]);
            double m = 0.0;
            jac(i, 0) = s;
            for (int j = 0; j < tones; ++j) {
                const double w = 2.0 * std::numbers::pi * u;
                const double ph = w * p[2 + 3 * j];
                const double c = std::cos(ph), sn = std::sin(ph);
                const double a = p[3 + 3 * j], b = p[4 + 3 * j];
                m += a * c + b * sn;
                jac(i, 2 + 3 * j) = s * env * w * (-a * sn + b * c);
                jac(i, 3 + 3 * j) = s * env * c;
                jac(i, 4 + 3 * j) = s * env * sn;
            }
            jac(i, 1) = s * env * m * u / (p[1] * p[1]);
        }
    }

    LmResult solve(Vector p0) const {
        return levenberg_marquardt([this](const Vector& p, Vector& r) { return residuals(p, r); },
                                   JacobianFn([this](const Vector& p, Matrix& j) { jacobian(p, j); }),
                                   std::move(p0), static_cast<Eigen::Index>(data.u.size()));
    }
};

/// Best linear (B, a_j, b_j) for fixed (tau, nu_j), used for seeding.
inline std::pair<Vector, double> project_tones(const NormalizedCurve& d, double tau, const std::vector<double>& nus) {
    const auto n = static_cast<Eigen::Index>(d.u.size());
    Matrix x(n, 1 + 2 * static_cast<Eigen::Index>(nus.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = d.u[i];
        const double env = std::exp(-u / tau);
        x(i, 0) = 1.0;
        for (std::size_t j = 0; j < nus.size(); ++j) {
            const double ph = 2.0 * std::numbers::pi * nus[j] * u;
            x(i, 1 + 2 * j) = env * std::cos(ph);
            x(i, 2 + 2 * j) = env * std::sin(ph);
        }
    }
    auto [beta, ssr] = weighted_linear(x, d.y, d.sigma);
    Vector p(2 + 3 * static_cast<Eigen::Index>(nus.size()));
    p[0] = beta[0];
    p[1] = tau;
    for (std::size_t j = 0; j < nus.size(); ++j) {
        p[2 + 3 * j] = nus[j];
        p[3 + 3 * j] = beta[1 + 2 * j];
        p[4 + 3 * j] = beta[2 + 2 * j];
    }
    return {p, ssr};
}

inline LmResult fit_single_tone(const NormalizedCurve& d) {
    const std::vector<double> grid = frequency_grid(d.u);
    const std::vector<double> spec = tone_spectrum(d.u, d.y, std::vector<double>(d.u.size(), 1.0), grid);
    std::vector<double> nus{0.0};
    for (std::size_t k : peaks(spec)) {
        if (nus.size() >= 4) break;
        nus.push_back(grid[k]);
    }
    const std::vector<double> taus = logspace(0.02, 20.0, 24);
    DampedTones model{d, 1};
    LmResult best;
    best.cost = std::numeric_limits<double>::infinity();
    for (double nu : nus) {
        Vector seed;
        double seed_ssr = std::numeric_limits<double>::infinity();
        for (double tau : taus) {
            auto [p, ssr] = project_tones(d, tau, {nu});
            if (ssr < seed_ssr) {
                seed_ssr = ssr;
                seed = p;
            }
        }
        LmResult r = model.solve(seed);
        if (r.cost < best.cost) best = std::move(r);
    }
    return best;
}

} // namespace detail

/// Weighted least squares of A * exp(-t/T1) + B.
inline ExponentialFit fit_exponential(const DecayCurve& curve) {
    const detail::NormalizedCurve d = detail::normalize(curve, 5);
    const auto [lo, hi] = std::minmax_element(d.y.begin(), d.y.end());
    if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi)))
        throw FitFailure("fit_exponential: constant curve, no decay resolvable");

    const auto n = static_cast<Eigen::Index>(d.u.size());
    // Seed by variable projection over a grid of decay times.
    Vector seed(3);
    double best_ssr = std::numeric_limits<double>::infinity();
    for (double tau : logspace(0.01, 10.0, 61)) {
        Matrix x(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            x(i, 0) = std::exp(-d.u[i] / tau);
            x(i, 1) = 1.0;
        }
        auto [beta, ssr] = detail::weighted_linear(x, d.y, d.sigma);
        if (ssr < best_ssr) {
            best_ssr = ssr;
            seed << beta[0], beta[1], tau;
        }
    }

    auto residual = [&d](const Vector& p, Vector& r) {
        if (!(p[2] > 0.0)) return false;
        for (std::size_t i = 0; i < d.u.size(); ++i)
            r[i] = (p[0] * std::exp(-d.u[i] / p[2]) + p[1] - d.y[i]) / d.sigma[i];
        return true;
    };
    auto jacobian = [&d](const Vector& p, Matrix& j) {
        j.resize(static_cast<Eigen::Index>(d.u.size()), 3);
        for (std::size_t i = 0; i < d.u.size(); ++i) {
            const double e = std::exp(-d.u[i] / p[2]);
            j(i, 0) = e / d.sigma[i];
            j(i, 1) = 1.0 / d.sigma[i];
            j(i, 2) = p[0] * e * d.u[i] / (p[2] * p[2]) / d.sigma[i];
        }
    };
    const LmResult r = levenberg_marquardt(residual, JacobianFn(jacobian), seed, n);
    std::ostringstream why;
    if (!r.converged) {
        why << "fit_exponential: " << r.message << " (cost " << r.cost << ")";
        throw FitFailure(why.str());
    }
    const double tau = r.params[2];
    if (tau > 1e3 || !(std::abs(r.params[0]) > 2.0 * r.stderr_[0])) {
        why << "fit_exponential: no decay resolvable (tau/t_max = " << tau << ", A = " << r.params[0] << " +- "
            << r.stderr_[0] << ")";
        throw FitFailure(why.str());
    }
    ExponentialFit out;
    out.t1 = tau * d.t_scale;
    out.amplitude = r.params[0];
    out.offset = r.params[1];
    out.t1_stderr = r.stderr_[2] * d.t_scale;
    out.amplitude_stderr = r.stderr_[0];
    out.offset_stderr = r.stderr_[1];
    out.rms_residual = detail::rms(r.residuals, d.sigma);
    return out;
}

/// Single damped cosine B + A exp(-t/T2) cos(2 pi f t + phi).
inline RamseyFit fit_ramsey(const DecayCurve& curve) {
    const detail::NormalizedCurve d = detail::normalize(curve, 6);
    const LmResult r = detail::fit_single_tone(d);
    if (!r.converged) throw FitFailure("fit_ramsey: " + r.message);
    RamseyFit out;
    out.offset = r.params[0];
    out.t2 = r.params[1] * d.t_scale;
    out.t2_stderr = r.stderr_[1] * d.t_scale;
    out.frequency_offset = std::abs(r.params[2]) / d.t_scale;
    out.frequency_stderr = r.stderr_[2] / d.t_scale;
    out.amplitude = std::hypot(r.params[3], r.params[4]);
    out.rms_residual = detail::rms(r.residuals, d.sigma);
    return out;
}

/// Two damped tones sharing one envelope, inverted onto the exchange model:
/// splitting = sqrt(delta^2 + 4 g^2), amplitude weights (1 +- delta/splitting)/2.
/// Both tones must lie on the same side of zero frequency, i.e. the drive
/// detuning must exceed (|delta| + splitting) / 2.
inline RamseyBeatsFit fit_ramsey_beats(const DecayCurve& curve) {
    const detail::NormalizedCurve d = detail::normalize(curve, 12);
    const LmResult single = detail::fit_single_tone(d);
    if (!single.converged) throw FitFailure("fit_ramsey_beats: single-tone seed failed: " + single.message);

    const double tau1 = single.params[1];
    const double nu1 = std::abs(single.params[2]);
    const double span = d.u.back() - d.u.front();

    // Second tone from the envelope-matched spectrum of the residual.
    std::vector<double> resid(d.u.size()), env(d.u.size());
    for (std::size_t i = 0; i < d.u.size(); ++i) {
        resid[i] = -single.residuals[i] * d.sigma[i];
        env[i] = std::exp(-d.u[i] / tau1);
    }
    const std::vector<double> grid = detail::frequency_grid(d.u);
    std::vector<double> spec = detail::tone_spectrum(d.u, resid, env, grid);
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (std::abs(grid[k] - nu1) < 1.0 / span) spec[k] = 0.0;
    const auto pk = detail::peaks(spec);
    if (pk.empty()) throw AmbiguityError("fit_ramsey_beats: no second tone found");
    const double nu2 = grid[pk.front()];

    detail::DampedTones model{d, 2};
    const std::array<std::array<double, 2>, 5> perturb{{{0.0, 1.0}, {0.3, 1.0}, {-0.3, 1.0}, {0.0, 0.7}, {0.0, 1.4}}};
    LmResult best;
    best.cost = std::numeric_limits<double>::infinity();
    for (const auto& [dnu, ftau] : perturb) {
        auto [p0, ssr] = detail::project_tones(d, tau1 * ftau, {nu1, nu2 + dnu / span});
        (void)ssr;
        LmResult r = model.solve(p0);
        if (r.converged && r.cost < best.cost) best = std::move(r);
    }
    if (!std::isfinite(best.cost)) throw FitFailure("fit_ramsey_beats: two-tone fit did not converge");
    if (!curve.ideal()) {
        // chi^2 gain of the second tone against the largest gain expected from
        // noise alone when searching ~grid/8 independent frequencies (1e-3 false-alarm).
        const double gain = 2.0 * (single.cost - best.cost);
        const double trials = std::max(1.0, static_cast<double>(grid.size()) / 8.0);
        const double threshold = 2.0 * std::log(trials / 1e-3);
        if (gain < threshold) {
            std::ostringstream msg;
            msg << "fit_ramsey_beats: second tone not significant (chi2 gain " << gain << " < " << threshold << ")";
            throw AmbiguityError(msg.str());
        }
    }

    const Vector& p = best.params;
    const double fa = std::abs(p[2]), fb = std::abs(p[5]);
    if (std::abs(fa - fb) < 2.0 / span)
        throw AmbiguityError("fit_ramsey_beats: tones closer than 2/duration, cannot separate");

    auto invert = [&](const Vector& q) {
        const double a1 = std::hypot(q[3], q[4]);
        const double a2 = std::hypot(q[6], q[7]);
        const double split = std::abs(std::abs(q[2]) - std::abs(q[5])) / d.t_scale;
        const double sum = a1 + a2;
        return std::array<double, 2>{split * std::sqrt(a1 * a2) / sum, split * std::abs(a1 - a2) / sum};
    };
    const auto gd = invert(p);

    // Propagate the parameter covariance through the inversion.
    Matrix grad(2, p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        Vector q = p;
        const double h = 1e-7 * std::max(std::abs(p[j]), 1e-6);
        q[j] += h;
        const auto up = invert(q);
        q[j] = p[j] - h;
        const auto dn = invert(q);
        grad(0, j) = (up[0] - dn[0]) / (2 * h);
        grad(1, j) = (up[1] - dn[1]) / (2 * h);
    }
    Matrix cov = best.covariance;
    for (Eigen::Index i = 0; i < cov.size(); ++i)
        if (!std::isfinite(cov.data()[i])) cov.data()[i] = 1e300;
    const Matrix gcov = grad * cov * grad.transpose();

    const double a1 = std::hypot(p[3], p[4]), a2 = std::hypot(p[6], p[7]);
    const double a_err1 = std::sqrt(std::max(0.0, cov(3, 3) + cov(4, 4)));
    const double a_err2 = std::sqrt(std::max(0.0, cov(6, 6) + cov(7, 7)));
    if (a1 <= 2.0 * a_err1 || a2 <= 2.0 * a_err2)
        throw AmbiguityError("fit_ramsey_beats: one tone is not resolved above noise");

    RamseyBeatsFit out;
    out.g = gd[0];
    out.detuning = gd[1];
    out.g_stderr = std::sqrt(std::max(0.0, gcov(0, 0)));
    out.detuning_stderr = std::sqrt(std::max(0.0, gcov(1, 1)));
    out.t2 = p[1] * d.t_scale;
    out.t2_stderr = best.stderr_[1] * d.t_scale;
    out.tone_frequencies = {std::min(fa, fb) / d.t_scale, std::max(fa, fb) / d.t_scale};
    out.tone_amplitudes = fa < fb ? std::array<double, 2>{a1, a2} : std::array<double, 2>{a2, a1};
    out.rms_residual = detail::rms(best.residuals, d.sigma);
    return out;
}

} // namespace tlsnoise
