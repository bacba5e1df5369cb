#pragma once

// Ramsey experiment: Rx(pi/2) - free evolution - Rx(pi/2), readout of the
// qubit excited-state population.
//
// With a coupled defect the free evolution is the exchange Hamiltonian in the
// frame rotating at the drive frequency (energies in Hz):
//
//   H/h = dq sz_q / 2 + (dq - delta) sz_d / 2 + g (s+_q s-_d + s-_q s+_d)
//
// with dq the qubit-drive detuning and delta the qubit-defect detuning. The
// qubit coherences are multiplied by exp(-t/T2) before the second pulse.
// Basis index = 2 * qubit + defect, 1 = excited.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "tlsnoise/errors.hpp"
#include "tlsnoise/qubit.hpp"

namespace tlsnoise {

using Complex = std::complex<double>;
using Matrix4c = Eigen::Matrix4cd;
using Vector4c = Eigen::Vector4cd;

struct RamseyOptions {
    double norm_tolerance = 1e-9;
};

namespace detail {

inline Matrix4c exchange_hamiltonian(double drive_detuning, const TlsCoupling& tls) {
    const double w = 2.0 * std::numbers::pi;
    Matrix4c h = Matrix4c::Zero();
    for (int q = 0; q < 2; ++q)
        for (int d = 0; d < 2; ++d)
            h(2 * q + d, 2 * q + d) = w * (drive_detuning * (q - 0.5) + (drive_detuning - tls.detuning) * (d - 0.5));
    h(2, 1) = w * tls.g; // |1,0><0,1|
    h(1, 2) = w * tls.g;
    return h;
}

/// Rx(pi/2) on the qubit, identity on the defect.
inline Matrix4c qubit_half_pi_x() {
    const double c = std::sqrt(0.5);
    const Complex mi(0.0, -c);
    Matrix4c r = Matrix4c::Zero();
    for (int d = 0; d < 2; ++d) {
        r(d, d) = c;
        r(2 + d, 2 + d) = c;
        r(d, 2 + d) = mi;
        r(2 + d, d) = mi;
    }
    return r;
}

/// Excited population after the closing pulse, given the pre-pulse state.
inline double ramsey_readout(Matrix4c rho, double coherence_factor) {
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            if ((a >> 1) != (b >> 1)) rho(a, b) *= coherence_factor;
    const Matrix4c r = qubit_half_pi_x();
    const Matrix4c out = r * rho * r.adjoint();
    return out(2, 2).real() + out(3, 3).real();
}

/// Liouvillian (row-major vectorization) for unitary evolution plus pure
/// dephasing of the defect at rate gamma.
inline Eigen::Matrix<Complex, 16, 16> exchange_liouvillian(const Matrix4c& h, double gamma) {
    Eigen::Matrix<Complex, 16, 16> l;
    Matrix4c sz = Matrix4c::Zero();
    for (int i = 0; i < 4; ++i) sz(i, i) = (i & 1) ? 1.0 : -1.0;
    const Complex mi(0.0, -1.0);
    for (int col = 0; col < 16; ++col) {
        Matrix4c e = Matrix4c::Zero();
        e(col / 4, col % 4) = 1.0;
        const Matrix4c out = mi * (h * e - e * h) + 0.5 * gamma * (sz * e * sz - e);
        for (int k = 0; k < 16; ++k) l(k, col) = out(k / 4, k % 4);
    }
    return l;
}

} // namespace detail

/// Noiseless Ramsey population curve.
inline std::vector<double> ramsey_ideal(const QubitSpec& q, double drive_detuning, const std::optional<TlsCoupling>& tls,
                                        std::span<const double> delays, const RamseyOptions& opt = {}) {
    validate(q);
    detail::require_delays(delays);
    std::vector<double> p(delays.size());
    if (!tls) {
        for (std::size_t i = 0; i < delays.size(); ++i) {
            const double t = delays[i];
            p[i] = 0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * drive_detuning * t) * std::exp(-t / q.t2);
        }
        return p;
    }
    validate(*tls);
    const Matrix4c h = detail::exchange_hamiltonian(drive_detuning, *tls);
    Vector4c psi0 = Vector4c::Zero();
    psi0(0) = 1.0;
    psi0 = detail::qubit_half_pi_x() * psi0;

    if (!tls->tls_t2) {
        Eigen::SelfAdjointEigenSolver<Matrix4c> eig(h);
        const Matrix4c& v = eig.eigenvectors();
        const Vector4c coeff = v.adjoint() * psi0;
        for (std::size_t i = 0; i < delays.size(); ++i) {
            const double t = delays[i];
            Vector4c phase;
            for (int k = 0; k < 4; ++k) phase(k) = std::exp(Complex(0.0, -eig.eigenvalues()(k) * t)) * coeff(k);
            const Vector4c psi = v * phase;
            const double norm_drift = std::abs(psi.squaredNorm() - 1.0);
            if (norm_drift > opt.norm_tolerance) {
                std::ostringstream msg;
                msg << "sim_ramsey: norm drift " << norm_drift << " at t=" << t << " s exceeds tolerance";
                throw NumericalError(msg.str());
            }
            p[i] = detail::ramsey_readout(psi * psi.adjoint(), std::exp(-t / q.t2));
        }
        return p;
    }

    const auto liou = detail::exchange_liouvillian(h, 1.0 / *tls->tls_t2);
    Eigen::Matrix<Complex, 16, 1> rho0;
    const Matrix4c r0 = psi0 * psi0.adjoint();
    for (int k = 0; k < 16; ++k) rho0(k) = r0(k / 4, k % 4);
    for (std::size_t i = 0; i < delays.size(); ++i) {
        const double t = delays[i];
        const Eigen::Matrix<Complex, 16, 16> prop = (liou * Complex(t, 0.0)).exp();
        const Eigen::Matrix<Complex, 16, 1> rv = prop * rho0;
        Matrix4c rho;
        for (int k = 0; k < 16; ++k) rho(k / 4, k % 4) = rv(k);
        const double trace_drift = std::abs(rho.trace() - Complex(1.0, 0.0));
        if (trace_drift > opt.norm_tolerance) {
            std::ostringstream msg;
            msg << "sim_ramsey: trace drift " << trace_drift << " at t=" << t << " s exceeds tolerance";
            throw NumericalError(msg.str());
        }
        p[i] = detail::ramsey_readout(rho, std::exp(-t / q.t2));
    }
    return p;
}

inline DecayCurve sim_ramsey(const QubitSpec& q, double drive_detuning, const std::optional<TlsCoupling>& tls,
                             std::span<const double> delays, const Shots& shots, std::uint64_t seed,
                             const RamseyOptions& opt = {}) {
    detail::require_shots(shots);
    return detail::sample_curve(delays, ramsey_ideal(q, drive_detuning, tls, delays, opt), shots, seed);
}

/// Largest deviation of |psi(t)|^2 from 1 over the given delays (unitary
/// evolution in the single-excitation manifold).
inline double ramsey_norm_drift(double drive_detuning, const TlsCoupling& tls, std::span<const double> delays) {
    const Matrix4c h = detail::exchange_hamiltonian(drive_detuning, tls);
    Eigen::SelfAdjointEigenSolver<Matrix4c> eig(h);
    Vector4c psi0 = Vector4c::Zero();
    psi0(0) = 1.0;
    psi0 = detail::qubit_half_pi_x() * psi0;
    const Vector4c coeff = eig.eigenvectors().adjoint() * psi0;
    double worst = 0.0;
    for (double t : delays) {
        Vector4c phase;
        for (int k = 0; k < 4; ++k) phase(k) = std::exp(Complex(0.0, -eig.eigenvalues()(k) * t)) * coeff(k);
        const Vector4c psi = eig.eigenvectors() * phase;
        // Excitation number: qubit + defect excitations, conserved by the exchange term.
        double excitations = 0.0;
        for (int k = 0; k < 4; ++k) excitations += std::norm(psi(k)) * ((k >> 1) + (k & 1));
        worst = std::max({worst, std::abs(psi.squaredNorm() - 1.0), std::abs(excitations - 0.5)});
    }
    return worst;
}

} // namespace tlsnoise
