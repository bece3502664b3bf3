#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xbma/error.hpp"
#include "xbma/linear.hpp"
#include "xbma/numerics.hpp"
#include "xbma/polya_gamma.hpp"
#include "xbma/rng.hpp"

namespace xbma {

// Gaussian prior N(mu0, precision^-1) on the regression coefficients. For
// the null model only the leading entries are used.
struct LogisticPrior {
    std::size_t dim = 2;
    std::array<double, 2> mu0{0.0, 0.0};
    SymMat<2> precision;
    double lambda = 1.0;

    // (lambda / n) X'X for a genotype design, lambda for the intercept-only model.
    static LogisticPrior g_prior(const DesignMatrix& X, double lambda) {
        if (!(lambda > 0.0)) throw ValidationError("logistic prior: lambda must be positive");
        LogisticPrior p;
        p.lambda = lambda;
        p.dim = X.cols();
        const double n = static_cast<double>(X.rows());
        if (X.is_null()) {
            p.precision(0, 0) = lambda;
            return p;
        }
        double sg = 0.0, sgg = 0.0;
        for (double g : X.genotype()) {
            sg += g;
            sgg += g * g;
        }
        p.precision(0, 0) = lambda;
        p.precision(0, 1) = p.precision(1, 0) = lambda * sg / n;
        p.precision(1, 1) = lambda * sgg / n;
        return p;
    }

    double log_density(std::span<const double> theta) const {
        if (dim == 1) {
            const double d = theta[0] - mu0[0];
            return 0.5 * std::log(precision(0, 0)) - 0.5 * kLog2Pi - 0.5 * precision(0, 0) * d * d;
        }
        const std::array<double, 2> d{theta[0] - mu0[0], theta[1] - mu0[1]};
        return 0.5 * std::log(precision.det()) - kLog2Pi - 0.5 * precision.quad(d);
    }
};

enum class ModelTag { M1, M2, Null };

inline const char* to_string(ModelTag m) {
    switch (m) {
    case ModelTag::M1: return "M1";
    case ModelTag::M2: return "M2";
    case ModelTag::Null: return "Null";
    }
    return "?";
}

// J posterior draws, row-major with `dim` columns: (alpha, beta) or (alpha).
struct PosteriorSamples {
    std::size_t dim = 2;
    std::size_t J = 0;
    std::size_t burn_in = 0;
    std::uint64_t seed = 0;
    ModelTag model = ModelTag::M1;
    std::vector<double> draws;

    std::span<const double> row(std::size_t j) const { return {draws.data() + j * dim, dim}; }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(J);
        for (std::size_t j = 0; j < J; ++j) out[j] = draws[j * dim + c];
        return out;
    }
};

struct BridgeEstimate {
    double log_value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double rel_change_final = 0.0;
};

// Unnormalised log posterior log pi(theta) + log f(Y | theta) of a logistic
// model. Individuals sharing a covariate value are pooled into (value,
// cases, total) groups, so one evaluation costs O(#distinct values).
class LogisticTarget {
public:
    LogisticTarget(const DesignMatrix& X, std::span<const double> y, LogisticPrior prior)
        : prior_(std::move(prior)), null_(X.is_null()) {
        if (y.size() != X.rows()) throw ValidationError("logistic target: outcome length differs from design rows");
        std::map<double, std::pair<double, double>> groups;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double g = null_ ? 0.0 : X.genotype()[i];
            auto& [cases, total] = groups[g];
            cases += y[i];
            total += 1.0;
        }
        for (const auto& [g, ct] : groups) groups_.push_back({g, ct.first, ct.second});
    }

    double operator()(std::span<const double> theta) const {
        double ll = prior_.log_density(theta);
        for (const auto& grp : groups_) {
            const double eta = null_ ? theta[0] : theta[0] + theta[1] * grp.value;
            ll += grp.cases * eta - grp.total * log1p_exp(eta);
        }
        return ll;
    }

    std::size_t dim() const { return null_ ? 1 : 2; }

private:
    struct Group {
        double value;
        double cases;
        double total;
    };
    LogisticPrior prior_;
    bool null_;
    std::vector<Group> groups_;
};

inline void check_binary_outcome(std::span<const double> y) {
    std::size_t cases = 0;
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw ValidationError("binary outcome must be coded 0/1");
        cases += v == 1.0;
    }
    if (cases == 0 || cases == y.size())
        throw ValidationError("binary outcome has a single class (degenerate outcome)");
}

// Polya-Gamma data-augmentation Gibbs sampler for Bayesian logistic
// regression. Alternates omega_i | theta ~ PG(1, x_i' theta) and
// theta | omega ~ N(m, V) with V^-1 = X' Omega X + Lambda0 and
// V^-1 m = X'(Y - 1/2) + Lambda0 mu0.
inline PosteriorSamples pg_gibbs(const DesignMatrix& X, std::span<const double> y, const LogisticPrior& prior,
                                 std::size_t J, std::size_t burn_in, std::uint64_t seed,
                                 ModelTag model = ModelTag::M1) {
    check_binary_outcome(y);
    if (y.size() != X.rows()) throw ValidationError("pg_gibbs: outcome length differs from design rows");
    if (J < 100) throw ValidationError("pg_gibbs: need at least 100 retained draws");
    const std::size_t n = X.rows();
    const std::size_t dim = X.cols();
    if (dim != prior.dim) throw ValidationError("pg_gibbs: prior dimension does not match the design");
    if (!X.is_null()) {
        const auto g = X.genotype();
        const auto [mn, mx] = std::minmax_element(g.begin(), g.end());
        if (*mn == *mx) throw NumericError("pg_gibbs: singular design (genotype column has no variance)");
    }

    std::array<double, 2> kappa_sum{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double k = y[i] - 0.5;
        kappa_sum[0] += k;
        if (dim == 2) kappa_sum[1] += k * X.genotype()[i];
    }
    std::array<double, 2> prior_shift{0.0, 0.0};
    if (dim == 1) {
        prior_shift[0] = prior.precision(0, 0) * prior.mu0[0];
    } else {
        prior_shift = prior.precision.mul(prior.mu0);
    }

    PosteriorSamples out;
    out.dim = dim;
    out.J = J;
    out.burn_in = burn_in;
    out.seed = seed;
    out.model = model;
    out.draws.resize(J * dim);

    Rng rng = make_rng(seed);
    std::array<double, 2> theta{prior.mu0[0], dim == 2 ? prior.mu0[1] : 0.0};
    for (std::size_t it = 0; it < burn_in + J; ++it) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double eta = X.eta(i, theta);
            const double w = sample_polya_gamma(eta, rng);
            s0 += w;
            if (dim == 2) {
                const double g = X.genotype()[i];
                s1 += w * g;
                s2 += w * g * g;
            }
        }
        if (dim == 1) {
            const double prec = s0 + prior.precision(0, 0);
            const double m = (kappa_sum[0] + prior_shift[0]) / prec;
            theta[0] = m + std_normal(rng) / std::sqrt(prec);
        } else {
            SymMat<2> prec;
            prec(0, 0) = s0 + prior.precision(0, 0);
            prec(0, 1) = prec(1, 0) = s1 + prior.precision(0, 1);
            prec(1, 1) = s2 + prior.precision(1, 1);
            const auto m = prec.inverse().mul({kappa_sum[0] + prior_shift[0], kappa_sum[1] + prior_shift[1]});
            // theta = m + L'^-1 z with prec = L L'.
            const auto [l11, l21, l22] = cholesky2(prec);
            const double z1 = std_normal(rng);
            const double z2 = std_normal(rng);
            const double x2 = z2 / l22;
            const double x1 = (z1 - l21 * x2) / l11;
            theta[0] = m[0] + x1;
            theta[1] = m[1] + x2;
        }
        if (it >= burn_in) {
            const std::size_t j = it - burn_in;
            for (std::size_t c = 0; c < dim; ++c) out.draws[j * dim + c] = theta[c];
        }
    }
    return out;
}

namespace detail {

template <class LogQA, class LogQB>
std::vector<double> log_ratios(const PosteriorSamples& s, const LogQA& qa, const LogQB& qb) {
    std::vector<double> l(s.J);
    for (std::size_t j = 0; j < s.J; ++j) {
        const auto th = s.row(j);
        const double a = qa(th);
        const double b = qb(th);
        if (!std::isfinite(a) || !std::isfinite(b))
            throw NumericError("bridge sampling: non-finite density at draw " + std::to_string(j));
        l[j] = a - b;
    }
    return l;
}

} // namespace detail

struct BridgeOptions {
    double tolerance = 1e-8;
    std::size_t max_iterations = 1000;
};

// Iterative bridge-sampling estimate of log(c_a / c_b), the ratio of the
// normalising constants of q_a and q_b, from equally many draws of each
// normalised density. Starts at ratio 1 and iterates
//   r <- sum_j l_bj / (l_bj + r)  /  sum_j 1 / (l_aj + r),
// with l = q_a / q_b, entirely in log space.
template <class LogQA, class LogQB>
BridgeEstimate bridge_ratio(const PosteriorSamples& samples_a, const PosteriorSamples& samples_b,
                            const LogQA& log_q_a, const LogQB& log_q_b, BridgeOptions opts = {}) {
    if (samples_a.J != samples_b.J || samples_a.J == 0)
        throw ValidationError("bridge_ratio: sample sets must be non-empty and of equal size");
    if (samples_a.dim != samples_b.dim) throw ValidationError("bridge_ratio: sample dimensions differ");
    const auto la = detail::log_ratios(samples_a, log_q_a, log_q_b);
    const auto lb = detail::log_ratios(samples_b, log_q_a, log_q_b);
    std::vector<double> num(lb.size()), den(la.size());

    BridgeEstimate est;
    double log_r = 0.0;
    for (std::size_t t = 1; t <= opts.max_iterations; ++t) {
        for (std::size_t j = 0; j < lb.size(); ++j) num[j] = lb[j] - log_sum_exp(lb[j], log_r);
        for (std::size_t j = 0; j < la.size(); ++j) den[j] = -log_sum_exp(la[j], log_r);
        const double next = log_sum_exp(num) - log_sum_exp(den);
        if (!std::isfinite(next)) throw NumericError("bridge_ratio: iteration produced a non-finite ratio");
        const double rel = std::abs(std::expm1(next - log_r));
        log_r = next;
        est.iterations = t;
        est.rel_change_final = rel;
        if (rel < opts.tolerance) {
            est.converged = true;
            break;
        }
    }
    est.log_value = log_r;
    return est;
}

struct AnchorEstimate {
    double log_marginal = 0.0;     // log of the normalising constant of q
    double log_anchor_constant = 0.0;
    BridgeEstimate bridge;         // log(c_q / c_anchor)
};

// Normalising constant of q by bridging its posterior draws to an
// independent-component Gaussian fitted to their means and variances. The
// anchor exp(-sum (theta_i - m_i)^2 / (2 s_i^2)) has constant
// prod sqrt(2 pi) s_i (2 pi s_a s_b in two dimensions).
template <class LogQ>
AnchorEstimate marginal_via_anchor(const PosteriorSamples& samples, const LogQ& log_q, std::uint64_t seed,
                                   BridgeOptions opts = {}) {
    const std::size_t d = samples.dim;
    std::array<double, 2> m{0.0, 0.0}, sd{1.0, 1.0};
    for (std::size_t c = 0; c < d; ++c) {
        const auto col = samples.column(c);
        m[c] = mean(col);
        sd[c] = std::sqrt(variance(col));
        if (!(sd[c] > 0.0)) throw NumericError("marginal_via_anchor: zero posterior sample variance (degenerate anchor)");
    }
    auto log_anchor = [m, sd, d](std::span<const double> th) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double z = (th[c] - m[c]) / sd[c];
            s -= 0.5 * z * z;
        }
        return s;
    };
    PosteriorSamples anchor;
    anchor.dim = d;
    anchor.J = samples.J;
    anchor.seed = seed;
    anchor.model = samples.model;
    anchor.draws.resize(anchor.J * d);
    Rng rng = make_rng(seed);
    for (std::size_t j = 0; j < anchor.J; ++j)
        for (std::size_t c = 0; c < d; ++c) anchor.draws[j * d + c] = m[c] + sd[c] * std_normal(rng);

    AnchorEstimate out;
    out.log_anchor_constant = 0.5 * static_cast<double>(d) * kLog2Pi;
    for (std::size_t c = 0; c < d; ++c) out.log_anchor_constant += std::log(sd[c]);
    out.bridge = bridge_ratio(samples, anchor, log_q, log_anchor, opts);
    out.log_marginal = out.bridge.log_value + out.log_anchor_constant;
    return out;
}

struct McmcConfig {
    std::size_t J = 1000;
    std::size_t burn_in = 500;
    std::uint64_t seed = 1;
    BridgeOptions bridge{};
};

struct LogisticFit {
    double log_bf12 = 0.0;
    double log_bf1n = 0.0;
    double log_bf2n = 0.0;
    double log_bfan = 0.0;
    double log_marginal1 = 0.0;
    double log_marginal2 = 0.0;
    double log_marginal_null = 0.0;
    PosteriorSamples samples1;
    PosteriorSamples samples2;
    PosteriorSamples samples_null;
    bool converged = true;

    double bf12() const { return std::exp(log_bf12); }
    double bf1n() const { return std::exp(log_bf1n); }
    double bf2n() const { return std::exp(log_bf2n); }
    double bfan() const { return std::exp(log_bfan); }
};

// Full binary-trait pipeline for one SNP: Gibbs chains under M1, M2 and
// the null; BF12 by bridging the two posteriors directly; BF1N and BF2N
// from Gaussian-anchor marginals (BF_kN = BF_k / BF_N * c_k / c_N); BF_AN
// as their average.
inline LogisticFit bf_logistic(std::span<const double> g1, std::span<const double> g2, std::span<const double> y,
                               double lambda, const McmcConfig& cfg) {
    const auto X1 = DesignMatrix::with_genotype({g1.begin(), g1.end()});
    const auto X2 = DesignMatrix::with_genotype({g2.begin(), g2.end()});
    const auto XN = DesignMatrix::intercept_only(y.size());
    const auto p1 = LogisticPrior::g_prior(X1, lambda);
    const auto p2 = LogisticPrior::g_prior(X2, lambda);
    const auto pN = LogisticPrior::g_prior(XN, lambda);

    LogisticFit fit;
    fit.samples1 = pg_gibbs(X1, y, p1, cfg.J, cfg.burn_in, derive_seed(cfg.seed, Stream::GibbsM1), ModelTag::M1);
    fit.samples2 = pg_gibbs(X2, y, p2, cfg.J, cfg.burn_in, derive_seed(cfg.seed, Stream::GibbsM2), ModelTag::M2);
    fit.samples_null =
        pg_gibbs(XN, y, pN, cfg.J, cfg.burn_in, derive_seed(cfg.seed, Stream::GibbsNull), ModelTag::Null);

    const LogisticTarget q1(X1, y, p1);
    const LogisticTarget q2(X2, y, p2);
    const LogisticTarget qN(XN, y, pN);

    const auto b12 = bridge_ratio(fit.samples1, fit.samples2, q1, q2, cfg.bridge);
    const auto a1 = marginal_via_anchor(fit.samples1, q1, derive_seed(cfg.seed, Stream::AnchorM1), cfg.bridge);
    const auto a2 = marginal_via_anchor(fit.samples2, q2, derive_seed(cfg.seed, Stream::AnchorM2), cfg.bridge);
    const auto aN =
        marginal_via_anchor(fit.samples_null, qN, derive_seed(cfg.seed, Stream::AnchorNull), cfg.bridge);

    fit.log_bf12 = b12.log_value;
    fit.log_marginal1 = a1.log_marginal;
    fit.log_marginal2 = a2.log_marginal;
    fit.log_marginal_null = aN.log_marginal;
    fit.log_bf1n = a1.log_marginal - aN.log_marginal;
    fit.log_bf2n = a2.log_marginal - aN.log_marginal;
    fit.log_bfan = log_bf_an(fit.log_bf1n, fit.log_bf2n);
    fit.converged = b12.converged && a1.bridge.converged && a2.bridge.converged && aN.bridge.converged;
    return fit;
}

} // namespace xbma
