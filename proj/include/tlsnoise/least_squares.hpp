#pragma once

// Damped least squares (Levenberg-Marquardt with Marquardt diagonal scaling).
// Residual callbacks may reject a parameter vector by returning false, which
// the solver treats as an infinitely bad step.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace tlsnoise {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ResidualFn = std::function<bool(const Vector& params, Vector& residuals)>;
using JacobianFn = std::function<void(const Vector& params, Matrix& jacobian)>;

struct LmOptions {
    int max_iterations = 300;
    double ftol = 1e-14;  ///< relative cost decrease
    double xtol = 1e-13;  ///< relative step size
    double gtol = 1e-14;  ///< scaled gradient
    double initial_lambda = 1e-3;
    /// Residuals already carry their true standard deviations: do not rescale
    /// the covariance by the reduced chi-square.
    bool absolute_sigma = false;
};

struct LmResult {
    Vector params;
    Vector residuals;
    Matrix covariance;
    Vector stderr_;
    double cost = 0.0; ///< 0.5 * |r|^2
    int iterations = 0;
    bool converged = false;
    std::string message;
};

namespace detail {

inline void numeric_jacobian(const ResidualFn& f, const Vector& p, const Vector& r0, Matrix& jac) {
    const double eps = std::cbrt(std::numeric_limits<double>::epsilon());
    jac.resize(r0.size(), p.size());
    Vector plus(r0.size()), minus(r0.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        const double h = eps * std::max(std::abs(p[j]), 1e-3);
        Vector q = p;
        q[j] = p[j] + h;
        const bool ok_plus = f(q, plus);
        q[j] = p[j] - h;
        const bool ok_minus = f(q, minus);
        if (ok_plus && ok_minus) jac.col(j) = (plus - minus) / (2.0 * h);
        else if (ok_plus) jac.col(j) = (plus - r0) / h;
        else if (ok_minus) jac.col(j) = (r0 - minus) / h;
        else jac.col(j).setZero();
    }
}

inline Matrix pseudo_inverse_normal(const Matrix& jac) {
    Eigen::JacobiSVD<Matrix> svd(jac, Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double cutoff = s.size() ? s[0] * 1e-13 : 0.0;
    Vector inv2(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        inv2[i] = s[i] > cutoff ? 1.0 / (s[i] * s[i]) : std::numeric_limits<double>::infinity();
    const Matrix& v = svd.matrixV();
    Matrix cov = Matrix::Zero(jac.cols(), jac.cols());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (std::isinf(inv2[i])) {
            // Unresolved direction: every parameter touching it is undetermined.
            for (Eigen::Index a = 0; a < v.rows(); ++a)
                if (std::abs(v(a, i)) > 1e-8) cov(a, a) = std::numeric_limits<double>::infinity();
            continue;
        }
        cov += inv2[i] * v.col(i) * v.col(i).transpose();
    }
    return cov;
}

} // namespace detail

inline LmResult levenberg_marquardt(const ResidualFn& residual, const std::optional<JacobianFn>& jacobian,
                                    Vector p0, Eigen::Index n_residuals, const LmOptions& opt = {}) {
    LmResult out;
    Vector p = std::move(p0);
    Vector r(n_residuals);
    if (!residual(p, r) || !r.allFinite()) {
        out.params = p;
        out.message = "initial parameters rejected by the model";
        return out;
    }
    double cost = 0.5 * r.squaredNorm();
    Matrix jac;
    auto eval_jac = [&] {
        if (jacobian) (*jacobian)(p, jac);
        else detail::numeric_jacobian(residual, p, r, jac);
    };
    eval_jac();

    double lambda = opt.initial_lambda;
    double nu = 2.0;
    Vector r_new(n_residuals);
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const Matrix a = jac.transpose() * jac;
        const Vector g = jac.transpose() * r;
        Vector diag = a.diagonal().cwiseMax(1e-12 * std::max(1.0, a.diagonal().maxCoeff()));
        if ((g.cwiseAbs().array() / (diag.array().sqrt() * std::sqrt(std::max(2.0 * cost, 1e-300))))
                .maxCoeff() < opt.gtol) {
            out.converged = true;
            out.message = "gradient tolerance reached";
            break;
        }
        if (cost < 1e-32) {
            out.converged = true;
            out.message = "exact fit";
            break;
        }
        Matrix damped = a;
        damped.diagonal() += lambda * diag;
        const Vector step = damped.ldlt().solve(-g);
        if (!step.allFinite()) {
            lambda *= 10.0;
            continue;
        }
        if (step.norm() <= opt.xtol * (p.norm() + opt.xtol)) {
            out.converged = true;
            out.message = "step tolerance reached";
            break;
        }
        const Vector p_new = p + step;
        const bool ok = residual(p_new, r_new) && r_new.allFinite();
        const double cost_new = ok ? 0.5 * r_new.squaredNorm() : std::numeric_limits<double>::infinity();
        const double predicted = -(step.dot(g) + 0.5 * step.dot(a * step));
        if (cost_new < cost) {
            const double rho = predicted > 0 ? (cost - cost_new) / predicted : 1.0;
            const double relative_drop = (cost - cost_new) / cost;
            p = p_new;
            r = r_new;
            cost = cost_new;
            eval_jac();
            lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
            nu = 2.0;
            if (relative_drop < opt.ftol) {
                out.converged = true;
                out.message = "cost tolerance reached";
                ++it;
                break;
            }
        } else {
            lambda *= nu;
            nu *= 2.0;
            if (lambda > 1e16) {
                out.converged = true;
                out.message = "no further decrease possible";
                break;
            }
        }
    }
    if (!out.converged) out.message = "iteration limit reached";

    out.params = p;
    out.residuals = r;
    out.cost = cost;
    out.iterations = it;
    out.covariance = detail::pseudo_inverse_normal(jac);
    const auto dof = n_residuals - p.size();
    if (!opt.absolute_sigma && dof > 0) {
        const double s2 = 2.0 * cost / static_cast<double>(dof);
        out.covariance = out.covariance.unaryExpr(
            [s2](double c) { return std::isinf(c) ? c : c * s2; });
    }
    out.stderr_ = out.covariance.diagonal().cwiseAbs().cwiseSqrt();
    return out;
}

} // namespace tlsnoise
