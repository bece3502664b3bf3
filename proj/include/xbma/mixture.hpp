#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "xbma/error.hpp"
#include "xbma/linear.hpp"
#include "xbma/numerics.hpp"
#include "xbma/rng.hpp"

namespace xbma {

inline double t_log_density(const TComponent& c, double x) {
    const double z = (x - c.loc) / c.scale;
    const double h = 0.5 * (c.df + 1.0);
    return std::lgamma(h) - std::lgamma(0.5 * c.df) - 0.5 * std::log(c.df * std::numbers::pi) -
           std::log(c.scale) - h * std::log1p(z * z / c.df);
}

inline double t_density(const TComponent& c, double x) { return std::exp(t_log_density(c, x)); }

inline double t_cdf(const TComponent& c, double x) {
    boost::math::students_t dist(c.df);
    return boost::math::cdf(dist, (x - c.loc) / c.scale);
}

// Posterior model weights (BF12/(1+BF12), 1/(1+BF12)) from log BF12.
inline std::pair<double, double> bma_weights(double log_bf12) {
    const double w1 = sigmoid(log_bf12);
    const double w2 = sigmoid(-log_bf12);
    return {w1, w2};
}

// Model-averaged posterior of the slope: w1 * t1 + w2 * t2.
struct MixtureT {
    TComponent comp1;
    TComponent comp2;
    double w1 = 0.5;
    double w2 = 0.5;

    static MixtureT from_log_bf12(const TComponent& c1, const TComponent& c2, double log_bf12) {
        const auto [w1, w2] = bma_weights(log_bf12);
        return MixtureT{c1, c2, w1, w2};
    }

    // Same mixture for -beta.
    MixtureT mirrored() const {
        MixtureT m = *this;
        m.comp1.loc = -m.comp1.loc;
        m.comp2.loc = -m.comp2.loc;
        return m;
    }
};

inline double mixture_density(const MixtureT& mix, double beta) {
    double d = 0.0;
    if (mix.w1 > 0.0) d += mix.w1 * t_density(mix.comp1, beta);
    if (mix.w2 > 0.0) d += mix.w2 * t_density(mix.comp2, beta);
    return d;
}

inline double mixture_cdf(const MixtureT& mix, double beta) {
    double p = 0.0;
    if (mix.w1 > 0.0) p += mix.w1 * t_cdf(mix.comp1, beta);
    if (mix.w2 > 0.0) p += mix.w2 * t_cdf(mix.comp2, beta);
    return p;
}

namespace detail {

inline double t_density_derivative(const TComponent& c, double x) {
    const double z = (x - c.loc) / c.scale;
    return -t_density(c, x) * (c.df + 1.0) * z / (c.scale * (c.df + z * z));
}

inline double mixture_derivative(const MixtureT& mix, double beta) {
    double d = 0.0;
    if (mix.w1 > 0.0) d += mix.w1 * t_density_derivative(mix.comp1, beta);
    if (mix.w2 > 0.0) d += mix.w2 * t_density_derivative(mix.comp2, beta);
    return d;
}

struct CriticalPoint {
    double x;
    bool is_max;
};

// Stationary points of the mixture density. Each component is symmetric and
// unimodal, so all of them lie between the two locations; the density
// increases to their left and decreases to their right.
inline std::vector<CriticalPoint> critical_points(const MixtureT& mix) {
    std::vector<CriticalPoint> out;
    if (mix.w2 <= 0.0 || mix.w1 <= 0.0 || mix.comp1.loc == mix.comp2.loc) {
        out.push_back({mix.w1 > 0.0 ? mix.comp1.loc : mix.comp2.loc, true});
        return out;
    }
    const double lo = std::min(mix.comp1.loc, mix.comp2.loc);
    const double hi = std::max(mix.comp1.loc, mix.comp2.loc);
    constexpr int kGrid = 1024;
    const double step = (hi - lo) / kGrid;
    auto deriv = [&](double x) { return mixture_derivative(mix, x); };
    double x_prev = lo;
    double d_prev = deriv(lo);
    // A far-away light component can leave the derivative exactly zero at
    // an endpoint; the endpoint itself is then the mode.
    if (d_prev <= 0.0) out.push_back({lo, true});
    // Grid points where the derivative is exactly zero are skipped; the
    // bracket runs from the last point with a nonzero derivative.
    for (int i = 1; i <= kGrid; ++i) {
        const double x = i == kGrid ? hi : lo + step * i;
        const double d = deriv(x);
        if (d == 0.0 && i < kGrid) continue;
        if (d_prev > 0.0 && d <= 0.0) {
            out.push_back({d == 0.0 ? x : bisect_root(deriv, x_prev, x, "mixture mode"), true});
        } else if (d_prev < 0.0 && d > 0.0) {
            out.push_back({bisect_root(deriv, x_prev, x, "mixture antimode"), false});
        }
        x_prev = x;
        d_prev = d;
    }
    if (d_prev > 0.0) out.push_back({hi, true});
    if (out.empty()) {
        // Derivative vanishes to working precision over the whole span.
        out.push_back({mix.w1 >= mix.w2 ? mix.comp1.loc : mix.comp2.loc, true});
    }
    return out;
}

} // namespace detail

// Global maximiser of the mixture density; ties go to the heavier component.
inline double posterior_mode(const MixtureT& mix) {
    const auto cps = detail::critical_points(mix);
    double best_x = 0.0;
    double best_d = -1.0;
    const double heavy_loc = mix.w1 >= mix.w2 ? mix.comp1.loc : mix.comp2.loc;
    for (const auto& cp : cps) {
        if (!cp.is_max) continue;
        const double d = mixture_density(mix, cp.x);
        const bool tie = std::abs(d - best_d) <= 1e-14 * std::max(d, best_d);
        if (d > best_d && !tie) {
            best_d = d;
            best_x = cp.x;
        } else if (tie && std::abs(cp.x - heavy_loc) < std::abs(best_x - heavy_loc)) {
            best_x = cp.x;
        }
    }
    return best_x;
}

struct HpdRegion {
    std::vector<std::pair<double, double>> intervals;
    double level = 0.95;
    double threshold = 0.0;
    double total_mass = 0.0;

    bool disconnected() const { return intervals.size() > 1; }
    double lower() const { return intervals.front().first; }
    double upper() const { return intervals.back().second; }
};

namespace detail {

// Super-level set {beta : density(beta) >= c} as sorted disjoint intervals.
inline std::vector<std::pair<double, double>> super_level_set(const MixtureT& mix,
                                                              const std::vector<CriticalPoint>& cps,
                                                              double c) {
    auto f = [&](double x) { return mixture_density(mix, x) - c; };
    const double spread = std::max(mix.comp1.scale, mix.comp2.scale);
    const double left_anchor = cps.front().x;
    const double right_anchor = cps.back().x;

    // Breakpoints between which the density is monotone.
    std::vector<double> pts;
    double left = left_anchor - spread;
    for (int i = 0; f(left) >= 0.0; ++i) {
        if (i > 200) throw NumericError("hpd: cannot bracket the left tail");
        left = left_anchor - (left_anchor - left) * 2.0;
    }
    double right = right_anchor + spread;
    for (int i = 0; f(right) >= 0.0; ++i) {
        if (i > 200) throw NumericError("hpd: cannot bracket the right tail");
        right = right_anchor + (right - right_anchor) * 2.0;
    }
    pts.push_back(left);
    for (const auto& cp : cps) pts.push_back(cp.x);
    pts.push_back(right);

    std::vector<double> crossings;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double fa = f(pts[i]);
        const double fb = f(pts[i + 1]);
        if ((fa >= 0.0) != (fb >= 0.0)) crossings.push_back(bisect_root(f, pts[i], pts[i + 1], "hpd endpoint"));
    }
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i + 1 < crossings.size(); i += 2) out.emplace_back(crossings[i], crossings[i + 1]);
    return out;
}

inline double region_mass(const MixtureT& mix, const std::vector<std::pair<double, double>>& iv) {
    double m = 0.0;
    for (const auto& [l, u] : iv) m += mixture_cdf(mix, u) - mixture_cdf(mix, l);
    return m;
}

} // namespace detail

// Exact highest-posterior-density region of the t mixture at level 1 - alpha.
// Bisects on the density threshold c (mass above c is decreasing in c) and
// solves density = c for the region endpoints.
inline HpdRegion hpd_exact(const MixtureT& mix, double alpha) {
    if (!(alpha > 0.0 && alpha <= 0.5)) throw ValidationError("hpd_exact: alpha must lie in (0, 0.5]");
    const double level = 1.0 - alpha;
    const auto cps = detail::critical_points(mix);
    double c_hi = 0.0;
    for (const auto& cp : cps) c_hi = std::max(c_hi, mixture_density(mix, cp.x));
    double c_lo = 0.0;
    std::vector<std::pair<double, double>> best;
    double best_mass = 0.0;
    double c = 0.0;
    for (int it = 0; it < 200; ++it) {
        c = 0.5 * (c_lo + c_hi);
        if (c <= c_lo || c >= c_hi) break;
        auto iv = detail::super_level_set(mix, cps, c);
        const double mass = detail::region_mass(mix, iv);
        best = std::move(iv);
        best_mass = mass;
        if (std::abs(mass - level) < 1e-13) break;
        if (mass > level) c_lo = c;
        else c_hi = c;
    }
    if (best.empty()) throw NumericError("hpd_exact: empty super-level set");
    HpdRegion r;
    r.intervals = std::move(best);
    r.level = level;
    r.threshold = c;
    r.total_mass = best_mass;
    return r;
}

// Shortest window containing ceil((1 - alpha) * J) order statistics.
inline std::pair<double, double> hpd_from_samples(std::span<const double> draws, double alpha) {
    if (draws.size() < 100) throw ValidationError("hpd_from_samples: need at least 100 draws");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("hpd_from_samples: alpha must lie in (0, 1)");
    std::vector<double> s(draws.begin(), draws.end());
    std::sort(s.begin(), s.end());
    const std::size_t J = s.size();
    const auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(J) - 1e-9));
    const std::size_t span_len = std::clamp<std::size_t>(k, 1, J);
    std::size_t best = 0;
    double width = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + span_len <= J; ++i) {
        const double w = s[i + span_len - 1] - s[i];
        if (w < width) {
            width = w;
            best = i;
        }
    }
    return {s[best], s[best + span_len - 1]};
}

// Draws J slopes from the model-averaged posterior: row j comes from the M1
// chain with probability w1, otherwise from the M2 chain.
inline std::vector<double> bma_pool_samples(std::span<const double> beta1, std::span<const double> beta2,
                                            double log_bf12, std::uint64_t seed,
                                            std::vector<bool>* from_m1 = nullptr) {
    if (beta1.size() != beta2.size()) throw ValidationError("bma_pool_samples: chains differ in length");
    const double w1 = bma_weights(log_bf12).first;
    Rng rng = make_rng(seed);
    std::vector<double> out(beta1.size());
    if (from_m1) from_m1->assign(beta1.size(), false);
    for (std::size_t j = 0; j < beta1.size(); ++j) {
        const bool pick1 = uniform01(rng) < w1;
        out[j] = pick1 ? beta1[j] : beta2[j];
        if (from_m1) (*from_m1)[j] = pick1;
    }
    return out;
}

} // namespace xbma
