#pragma once

// Test-side oracles: finite differences against forward() only, an
// independently coded noise-calibration evaluation in extended precision,
// and small statistical bounds. These deliberately do not call the analytic
// gradient/Hessian or calibrate_noise internals they are used to check.

#include <cmath>

#include <Eigen/Core>

#include "kan/model.hpp"

namespace oracle {

inline double forward_at(const kan::ModelSpec& spec, const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& x) {
    return kan::forward(spec, kan::ParamVector::unflatten(spec, theta), x);
}

inline Eigen::VectorXd fd_gradient(const kan::ModelSpec& spec, const kan::ParamVector& params,
                                   const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd theta = params.flatten();
    Eigen::VectorXd grad(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double save = theta[i];
        theta[i] = save + h;
        const double fp = forward_at(spec, theta, x);
        theta[i] = save - h;
        const double fm = forward_at(spec, theta, x);
        theta[i] = save;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

inline Eigen::MatrixXd fd_hessian(const kan::ModelSpec& spec, const kan::ParamVector& params,
                                  const Eigen::VectorXd& x, double h = 5e-4) {
    Eigen::VectorXd theta = params.flatten();
    const Eigen::Index P = theta.size();
    const double f0 = forward_at(spec, theta, x);
    Eigen::MatrixXd H(P, P);
    for (Eigen::Index i = 0; i < P; ++i) {
        for (Eigen::Index j = i; j < P; ++j) {
            double v;
            if (i == j) {
                const double s = theta[i];
                theta[i] = s + h;
                const double fp = forward_at(spec, theta, x);
                theta[i] = s - h;
                const double fm = forward_at(spec, theta, x);
                theta[i] = s;
                v = (fp - 2.0 * f0 + fm) / (h * h);
            } else {
                const double si = theta[i], sj = theta[j];
                theta[i] = si + h; theta[j] = sj + h;
                const double fpp = forward_at(spec, theta, x);
                theta[j] = sj - h;
                const double fpm = forward_at(spec, theta, x);
                theta[i] = si - h; theta[j] = sj + h;
                const double fmp = forward_at(spec, theta, x);
                theta[j] = sj - h;
                const double fmm = forward_at(spec, theta, x);
                theta[i] = si; theta[j] = sj;
                v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            }
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    return H;
}

/// Independently coded calibration arithmetic (long double, different
/// grouping than the implementation).
struct CalibrationOracle {
    long double sigma_tilde2;
    long double c1;
    long double c2;
    long double sigma1_2;
    long double sigma2_2;
    long double delta_a;
    long double delta_c;
};

inline CalibrationOracle calibration_oracle(long double epsilon, long double delta, long double T,
                                            long double n, long double p, long double m,
                                            long double r2, long double b_b, long double b1_s,
                                            long double b1_b, long double b1_l = 1.0L) {
    CalibrationOracle out;
    const long double log_term = logl((2.0L * T) / delta);
    out.sigma_tilde2 = (T / (n * n * epsilon)) * (1.0L + log_term / epsilon);
    const long double radius = 4.0L * sqrtl(p) + (2.0L * sqrtl(logl(2.0L / delta)) + r2) / sqrtl(m);
    const long double lead = b1_l * b1_s * b1_b * b_b;
    out.c1 = 8.0L * lead * lead * p * p * radius * radius;
    out.c2 = 8.0L * (b1_l * b_b) * (b1_l * b_b) * p;
    out.sigma1_2 = out.c1 * out.sigma_tilde2;
    out.sigma2_2 = out.c2 * out.sigma_tilde2;
    out.delta_a = (2.0L * b1_l * b1_s * b1_b * b_b * p / n) * radius;
    out.delta_c = 2.0L * b1_l * b_b * sqrtl(p) / n;
    return out;
}

inline double rel_err(double got, long double want) {
    const long double diff = fabsl(static_cast<long double>(got) - want);
    const long double denom = fabsl(want) > 1e-300L ? fabsl(want) : 1e-300L;
    return static_cast<double>(diff / denom);
}

} // namespace oracle
