#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hga {

inline double expit(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) {
    const double eps = 1e-12;
    p = std::clamp(p, eps, 1.0 - eps);
    return std::log(p / (1.0 - p));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488016887242097); }

inline double two_sided_p(double z) { return std::erfc(std::abs(z) / 1.4142135623730950488016887242097); }

// Solves A x = b for symmetric positive definite A (dense, row-major).
inline std::vector<double> solve_spd(std::vector<std::vector<double>> a, std::vector<double> b) {
    const size_t n = b.size();
    // Cholesky A = L L^T
    for (size_t j = 0; j < n; ++j) {
        double d = a[j][j];
        for (size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
        if (d <= 0) throw std::runtime_error("solve_spd: matrix not positive definite");
        a[j][j] = std::sqrt(d);
        for (size_t i = j + 1; i < n; ++i) {
            double s = a[i][j];
            for (size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
            a[i][j] = s / a[j][j];
        }
    }
    // forward then backward substitution
    for (size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (size_t k = 0; k < i; ++k) s -= a[i][k] * b[k];
        b[i] = s / a[i][i];
    }
    for (size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (size_t k = ii + 1; k < n; ++k) s -= a[k][ii] * b[k];
        b[ii] = s / a[ii][ii];
    }
    return b;
}

struct LogisticFit {
    std::vector<double> beta;       // beta[0] is the intercept
    std::vector<bool> active;       // per input column; constant columns are dropped
    bool converged = false;
    bool ridge_fallback = false;    // refit with a small penalty after separation
    int iterations = 0;
};

inline double predict_logit(const LogisticFit& fit, const std::vector<double>& z) {
    double eta = fit.beta[0];
    size_t k = 1;
    for (size_t j = 0; j < z.size(); ++j) {
        if (fit.active[j]) eta += fit.beta[k++] * z[j];
    }
    return eta;
}

inline double predict_prob(const LogisticFit& fit, const std::vector<double>& z) {
    return expit(predict_logit(fit, z));
}

namespace detail {

inline LogisticFit fit_logistic_impl(const std::vector<std::vector<double>>& x,
                                     const std::vector<int>& y,
                                     const std::vector<bool>& active,
                                     size_t p,
                                     double ridge,
                                     int max_iter,
                                     double tol) {
    const size_t n = x.size();
    LogisticFit fit;
    fit.active = active;
    fit.beta.assign(p + 1, 0.0);
    std::vector<double> row(p + 1);
    for (int it = 0; it < max_iter; ++it) {
        std::vector<std::vector<double>> hess(p + 1, std::vector<double>(p + 1, 0.0));
        std::vector<double> grad(p + 1, 0.0);
        for (size_t i = 0; i < n; ++i) {
            row[0] = 1.0;
            size_t k = 1;
            for (size_t j = 0; j < x[i].size(); ++j) {
                if (active[j]) row[k++] = x[i][j];
            }
            double eta = 0;
            for (size_t a = 0; a <= p; ++a) eta += fit.beta[a] * row[a];
            double mu = expit(eta);
            double w = std::max(mu * (1.0 - mu), 1e-10);
            double r = y[i] - mu;
            for (size_t a = 0; a <= p; ++a) {
                grad[a] += row[a] * r;
                for (size_t b = a; b <= p; ++b) hess[a][b] += w * row[a] * row[b];
            }
        }
        for (size_t a = 0; a <= p; ++a) {
            for (size_t b = 0; b < a; ++b) hess[a][b] = hess[b][a];
        }
        if (ridge > 0) {
            for (size_t a = 1; a <= p; ++a) {
                hess[a][a] += ridge;
                grad[a] -= ridge * fit.beta[a];
            }
        }
        std::vector<double> step;
        try {
            step = solve_spd(hess, grad);
        } catch (const std::runtime_error&) {
            fit.converged = false;
            return fit;
        }
        double max_change = 0;
        for (size_t a = 0; a <= p; ++a) {
            fit.beta[a] += step[a];
            max_change = std::max(max_change, std::abs(step[a]));
            if (!std::isfinite(fit.beta[a])) {
                fit.converged = false;
                return fit;
            }
        }
        fit.iterations = it + 1;
        if (max_change < tol) {
            fit.converged = true;
            return fit;
        }
    }
    fit.converged = false;
    return fit;
}

} // namespace detail

// Maximum-likelihood logistic regression via damped Newton iteration.
// Constant covariates are dropped; separation falls back to a ridge penalty.
inline LogisticFit fit_logistic(const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y,
                                double ridge = 0.0,
                                int max_iter = 100,
                                double tol = 1e-8) {
    if (x.empty()) throw std::invalid_argument("fit_logistic: empty data");
    const size_t d = x[0].size();
    std::vector<bool> active(d, false);
    size_t p = 0;
    for (size_t j = 0; j < d; ++j) {
        double lo = x[0][j], hi = x[0][j];
        for (size_t i = 1; i < x.size(); ++i) {
            lo = std::min(lo, x[i][j]);
            hi = std::max(hi, x[i][j]);
        }
        if (hi - lo > 1e-12) {
            active[j] = true;
            ++p;
        }
    }
    LogisticFit fit = detail::fit_logistic_impl(x, y, active, p, ridge, max_iter, tol);
    double max_beta = 0;
    for (double b : fit.beta) max_beta = std::max(max_beta, std::abs(b));
    if (!fit.converged || max_beta > 30.0) {
        // perfect or quasi separation: coefficients diverge
        double fallback = std::max(ridge, 1e-4);
        fit = detail::fit_logistic_impl(x, y, active, p, fallback, max_iter, tol);
        fit.ridge_fallback = true;
    }
    return fit;
}

inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// lower-median on even counts
inline double lower_median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("lower_median: empty");
    size_t k = (v.size() - 1) / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end());
    return v[k];
}

inline double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace hga
