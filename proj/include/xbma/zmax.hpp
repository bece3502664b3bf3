#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "xbma/error.hpp"
#include "xbma/geno.hpp"
#include "xbma/numerics.hpp"

namespace xbma {

enum class TraitType { Linear, Binary };

struct WaldPair {
    double z1 = 0.0;
    double z2 = 0.0;
    double r = 1.0;
    double p1 = 1.0;
    double p2 = 1.0;
};

struct ZmaxResult {
    double zmax = 0.0;
    double pvalue = 1.0;
};

inline double two_sided_p(double z) { return 2.0 * normal_cdf(-std::abs(z)); }

struct SlopeEstimate {
    double beta = 0.0;
    double se = 0.0;
    double z() const { return beta / se; }
};

// Ordinary least squares slope of y on (1, g).
inline SlopeEstimate ols_slope(std::span<const double> g, std::span<const double> y) {
    const std::size_t n = g.size();
    if (n < 3) throw ValidationError("ols_slope: need at least 3 observations");
    const double mg = mean(g);
    const double my = mean(y);
    double sgg = 0.0, sgy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dg = g[i] - mg;
        const double dy = y[i] - my;
        sgg += dg * dg;
        sgy += dg * dy;
        syy += dy * dy;
    }
    if (!(sgg > 0.0)) throw NumericError("ols_slope: genotype column has no variance");
    SlopeEstimate s;
    s.beta = sgy / sgg;
    const double rss = std::max(0.0, syy - s.beta * sgy);
    s.se = std::sqrt(rss / static_cast<double>(n - 2) / sgg);
    return s;
}

// Logistic maximum likelihood for y on (1, g) by iteratively reweighted
// least squares (Newton). Converges when the largest step is below tol.
inline SlopeEstimate logistic_mle_slope(std::span<const double> g, std::span<const double> y, double tol = 1e-10,
                                        int max_iter = 50) {
    std::map<double, std::pair<double, double>> groups;  // value -> (cases, total)
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto& [c, t] = groups[g[i]];
        c += y[i];
        t += 1.0;
    }
    if (groups.size() < 2) throw NumericError("logistic_mle_slope: genotype column has no variance");
    double a = 0.0, b = 0.0;
    SymMat<2> info;
    for (int it = 0; it < max_iter; ++it) {
        double u0 = 0.0, u1 = 0.0;
        info = SymMat<2>{};
        for (const auto& [x, ct] : groups) {
            const double p = sigmoid(a + b * x);
            const double w = ct.second * p * (1.0 - p);
            const double resid = ct.first - ct.second * p;
            u0 += resid;
            u1 += resid * x;
            info(0, 0) += w;
            info(0, 1) += w * x;
            info(1, 1) += w * x * x;
        }
        info(1, 0) = info(0, 1);
        if (!(info.det() > 0.0)) throw NumericError("logistic_mle_slope: singular information (separation)");
        const auto step = info.inverse().mul({u0, u1});
        a += step[0];
        b += step[1];
        if (!std::isfinite(a) || !std::isfinite(b) || std::abs(b) > 1e6)
            throw NumericError("logistic_mle_slope: IRLS diverged (separation)");
        if (std::max(std::abs(step[0]), std::abs(step[1])) < tol) {
            // Information at the converged estimate.
            info = SymMat<2>{};
            for (const auto& [x, ct] : groups) {
                const double p = sigmoid(a + b * x);
                const double w = ct.second * p * (1.0 - p);
                info(0, 0) += w;
                info(0, 1) += w * x;
                info(1, 1) += w * x * x;
            }
            info(1, 0) = info(0, 1);
            return SlopeEstimate{b, std::sqrt(info.inverse()(1, 1))};
        }
    }
    throw NumericError("logistic_mle_slope: IRLS did not converge in " + std::to_string(max_iter) + " iterations");
}

inline WaldPair wald_stats(std::span<const double> g1, std::span<const double> g2, std::span<const double> y,
                           TraitType trait) {
    if (g1.size() != y.size() || g2.size() != y.size())
        throw ValidationError("wald_stats: genotype and phenotype lengths differ");
    WaldPair w;
    if (trait == TraitType::Linear) {
        w.z1 = ols_slope(g1, y).z();
        w.z2 = ols_slope(g2, y).z();
    } else {
        w.z1 = logistic_mle_slope(g1, y).z();
        w.z2 = logistic_mle_slope(g2, y).z();
    }
    w.r = pearson({g1.begin(), g1.end()}, {g2.begin(), g2.end()});
    w.p1 = two_sided_p(w.z1);
    w.p2 = two_sided_p(w.z2);
    return w;
}

// P(max(|Z1|, |Z2|) > z) for a standard bivariate normal with correlation r:
//   P(|Z1| > z) + int_{-z}^{z} phi(x) P(|Z2| > z | Z1 = x) dx,
// integrated adaptively. Every term is non-negative, so small p-values keep
// their relative accuracy.
inline double bvn_max_abs_tail(double z, double r) {
    z = std::abs(z);
    const double marginal = 2.0 * normal_cdf(-z);
    if (std::abs(r) >= 1.0 - 1e-12) return marginal;
    const double s = std::sqrt((1.0 - r) * (1.0 + r));
    auto integrand = [z, r, s](double x) {
        return normal_pdf(x) * (normal_cdf((r * x - z) / s) + normal_cdf((-r * x - z) / s));
    };
    double err = 0.0;
    // Integrand is even in x.
    const double half =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, z, 20, 1e-13, &err);
    return std::min(1.0, marginal + 2.0 * half);
}

inline ZmaxResult zmax_pvalue(double z1, double z2, double r) {
    ZmaxResult out;
    out.zmax = std::max(std::abs(z1), std::abs(z2));
    out.pvalue = bvn_max_abs_tail(out.zmax, r);
    return out;
}

} // namespace xbma
