#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include "xbma/error.hpp"

namespace xbma {

inline constexpr double kLn10 = std::numbers::ln10;
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Finds x in [lo, hi] with f(x) = 0 given f(lo), f(hi) of opposite sign.
// Bisects until the bracket cannot shrink further in double precision.
template <class F>
double bisect_root(F&& f, double lo, double hi, const char* what = "root") {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw NumericError(std::string(what) + ": bracket [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "] does not straddle a sign change (f=" +
                           std::to_string(flo) + ", " + std::to_string(fhi) + ")");
    }
    for (int it = 0; it < 2000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Fixed-size symmetric matrix of dimension 1 or 2 with closed-form
// determinant, inverse and quadratic forms.
template <std::size_t P>
struct SymMat {
    static_assert(P == 1 || P == 2);
    std::array<double, P * P> a{};

    double& operator()(std::size_t i, std::size_t j) { return a[i * P + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * P + j]; }

    static SymMat identity() {
        SymMat m;
        for (std::size_t i = 0; i < P; ++i) m(i, i) = 1.0;
        return m;
    }

    double det() const {
        if constexpr (P == 1) return a[0];
        else return a[0] * a[3] - a[1] * a[2];
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < P; ++i) t += (*this)(i, i);
        return t;
    }

    SymMat inverse() const {
        const double d = det();
        SymMat r;
        if constexpr (P == 1) {
            r.a[0] = 1.0 / d;
        } else {
            r.a = {a[3] / d, -a[1] / d, -a[2] / d, a[0] / d};
        }
        return r;
    }

    std::array<double, P> mul(const std::array<double, P>& v) const {
        std::array<double, P> r{};
        for (std::size_t i = 0; i < P; ++i)
            for (std::size_t j = 0; j < P; ++j) r[i] += (*this)(i, j) * v[j];
        return r;
    }

    double quad(const std::array<double, P>& v) const {
        const auto mv = mul(v);
        double s = 0.0;
        for (std::size_t i = 0; i < P; ++i) s += v[i] * mv[i];
        return s;
    }

    // Positive definite within a relative tolerance of 1e-12.
    bool positive_definite() const {
        const double scale = std::max(1.0, std::abs(trace()));
        return trace() > 1e-12 * scale && det() > 1e-12 * scale * scale;
    }

    SymMat operator+(const SymMat& o) const {
        SymMat r;
        for (std::size_t i = 0; i < P * P; ++i) r.a[i] = a[i] + o.a[i];
        return r;
    }

    SymMat operator*(double s) const {
        SymMat r;
        for (std::size_t i = 0; i < P * P; ++i) r.a[i] = a[i] * s;
        return r;
    }
};

// Lower Cholesky factor of a 2x2 SPD matrix, as (l11, l21, l22).
inline std::array<double, 3> cholesky2(const SymMat<2>& m) {
    const double l11 = std::sqrt(m(0, 0));
    const double l21 = m(1, 0) / l11;
    const double l22 = std::sqrt(m(1, 1) - l21 * l21);
    return {l11, l21, l22};
}

inline double mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

} // namespace xbma
