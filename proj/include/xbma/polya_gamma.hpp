#pragma once

#include <cmath>
#include <numbers>

#include "xbma/numerics.hpp"
#include "xbma/rng.hpp"

namespace xbma {

// Exact PG(1, c) sampler: Devroye-style alternating-series accept/reject on
// the Jacobi J*(1, c/2) density (Polson, Scott and Windle 2013). Draws
// J*(1, z) with a proposal that is a truncated inverse Gaussian below the
// switch point t = 0.64 and a truncated exponential above it; PG(1, c) is
// J*(1, c/2) / 4.
namespace detail {

inline constexpr double kPgTrunc = 0.64;
inline constexpr double kPi = std::numbers::pi;

// n-th term of the alternating series for the J*(1, 0) density.
inline double pg_series_coef(int n, double x) {
    const double k = (n + 0.5) * kPi;
    if (x > kPgTrunc) return k * std::exp(-0.5 * k * k * x);
    if (x <= 0.0) return 0.0;
    const double log_term = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) -
                            2.0 * (n + 0.5) * (n + 0.5) / x;
    return std::exp(log_term);
}

inline double log_normal_cdf(double x) {
    if (x > -30.0) return std::log(normal_cdf(x));
    // Asymptotic expansion of the lower tail.
    return -0.5 * x * x - std::log(-x) - 0.5 * kLog2Pi + std::log1p(-1.0 / (x * x));
}

// Probability of proposing from the exponential (right) piece.
inline double pg_right_mass(double z) {
    const double t = kPgTrunc;
    const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
    const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
    const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
    const double x0 = std::log(fz) + fz * t;
    const double xb = x0 - z + log_normal_cdf(b);
    const double xa = x0 + z + log_normal_cdf(a);
    const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
    return 1.0 / (1.0 + q_over_p);
}

// Inverse Gaussian IG(mean 1/z, shape 1) truncated to (0, t).
inline double truncated_inverse_gaussian(double z, Rng& rng) {
    const double t = kPgTrunc;
    double x = t + 1.0;
    if (z < 1.0 / t) {
        // Mean beyond the truncation point: proposal from the z = 0 law
        // (a truncated 1/chi^2), accepted with probability exp(-z^2 x / 2).
        double accept = 0.0;
        do {
            double e1 = std_exponential(rng);
            double e2 = std_exponential(rng);
            while (e1 * e1 > 2.0 * e2 / t) {
                e1 = std_exponential(rng);
                e2 = std_exponential(rng);
            }
            x = 1.0 + e1 * t;
            x = t / (x * x);
            accept = std::exp(-0.5 * z * z * x);
        } while (uniform01(rng) > accept);
    } else {
        const double mu = 1.0 / z;
        while (x > t) {
            double y = std_normal(rng);
            y *= y;
            const double half_mu = 0.5 * mu;
            const double mu_y = mu * y;
            x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
            if (uniform01(rng) > mu / (mu + x)) x = mu * mu / x;
        }
    }
    return x;
}

} // namespace detail

inline double sample_polya_gamma(double c, Rng& rng) {
    using namespace detail;
    const double z = 0.5 * std::abs(c);
    const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
    const double right_mass = pg_right_mass(z);
    for (;;) {
        const double x = uniform01(rng) < right_mass ? kPgTrunc + std_exponential(rng) / fz
                                                     : truncated_inverse_gaussian(z, rng);
        double s = pg_series_coef(0, x);
        const double y = uniform01(rng) * s;
        for (int n = 1;; ++n) {
            if (n % 2 == 1) {
                s -= pg_series_coef(n, x);
                if (y <= s) return 0.25 * x;
            } else {
                s += pg_series_coef(n, x);
                if (y > s) break;
            }
        }
    }
}

// E[PG(1, c)] = tanh(c/2) / (2c), with limit 1/4 at c = 0.
inline double polya_gamma_mean(double c) {
    if (std::abs(c) < 1e-6) return 0.25 - c * c / 48.0;
    return std::tanh(0.5 * c) / (2.0 * c);
}

} // namespace xbma
