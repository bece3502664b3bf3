#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "xbma/error.hpp"
#include "xbma/numerics.hpp"

namespace xbma {

enum class PriorPrecision {
    GPrior,    // Lambda0 = (lambda / n) X'X
    Identity,  // Lambda0 = lambda I; scale-dependent, kept for calibration diagnostics
};

struct NIGPrior {
    std::array<double, 2> mu0{0.0, 0.0};
    double lambda = 1.0;
    double a0 = 0.1;
    double b0 = 0.1;
    PriorPrecision precision = PriorPrecision::GPrior;

    void validate() const {
        if (!(lambda > 0.0) || !(a0 > 0.0) || !(b0 > 0.0))
            throw ValidationError("NIG prior: lambda, a0 and b0 must be strictly positive");
    }
};

// Intercept column plus an optional genotype column. Without a genotype
// column the design is the intercept-only null model.
class DesignMatrix {
public:
    static DesignMatrix intercept_only(std::size_t n) { return DesignMatrix(n, {}); }
    static DesignMatrix with_genotype(std::vector<double> g) {
        const std::size_t n = g.size();
        return DesignMatrix(n, std::move(g));
    }

    std::size_t rows() const { return n_; }
    std::size_t cols() const { return genotype_.empty() ? 1 : 2; }
    bool is_null() const { return genotype_.empty(); }
    std::span<const double> genotype() const { return genotype_; }

    // Linear predictor x_i' theta.
    double eta(std::size_t i, std::span<const double> theta) const {
        return is_null() ? theta[0] : theta[0] + genotype_[i] * theta[1];
    }

private:
    DesignMatrix(std::size_t n, std::vector<double> g) : n_(n), genotype_(std::move(g)) {}
    std::size_t n_;
    std::vector<double> genotype_;
};

// Normal-inverse-gamma posterior of (theta, sigma^2) for one model. For the
// null model only the leading 1x1 block of the matrices is meaningful.
struct NIGPosterior {
    std::size_t dim = 2;
    std::size_t n = 0;
    std::array<double, 2> mu{0.0, 0.0};
    SymMat<2> precision;        // Lambda_k
    SymMat<2> prior_precision;  // Lambda_0k
    double a = 0.0;
    double b = 0.0;
    double log_det_precision = 0.0;
    double log_det_prior_precision = 0.0;
    double log_marginal = 0.0;
};

// Location-scale Student t.
struct TComponent {
    double df = 1.0;
    double loc = 0.0;
    double scale = 1.0;
};

namespace detail {

template <std::size_t P>
struct CrossProducts {
    SymMat<P> xtx;
    std::array<double, P> xty{};
    double yty = 0.0;
};

template <std::size_t P>
CrossProducts<P> cross_products(const DesignMatrix& X, std::span<const double> y) {
    CrossProducts<P> c;
    const std::size_t n = X.rows();
    double sy = 0.0, yy = 0.0;
    for (double v : y) {
        sy += v;
        yy += v * v;
    }
    c.xtx(0, 0) = static_cast<double>(n);
    c.xty[0] = sy;
    c.yty = yy;
    if constexpr (P == 2) {
        const auto g = X.genotype();
        double sg = 0.0, sgg = 0.0, sgy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sg += g[i];
            sgg += g[i] * g[i];
            sgy += g[i] * y[i];
        }
        c.xtx(0, 1) = c.xtx(1, 0) = sg;
        c.xtx(1, 1) = sgg;
        c.xty[1] = sgy;
    }
    return c;
}

template <std::size_t P>
NIGPosterior fit_nig_impl(const DesignMatrix& X, std::span<const double> y, const NIGPrior& prior) {
    const std::size_t n = X.rows();
    const double nd = static_cast<double>(n);
    const auto cp = cross_products<P>(X, y);
    if constexpr (P == 2) {
        // Rank check on the centred genotype sum of squares.
        const double centred = cp.xtx(1, 1) - cp.xtx(0, 1) * cp.xtx(0, 1) / nd;
        if (!(centred > 1e-12 * std::max(1.0, cp.xtx(1, 1))))
            throw NumericError("fit_nig: singular design (genotype column has no variance)");
    }

    SymMat<P> prior_prec = prior.precision == PriorPrecision::GPrior
                               ? cp.xtx * (prior.lambda / nd)
                               : SymMat<P>::identity() * prior.lambda;
    const SymMat<P> prec = cp.xtx + prior_prec;
    if (!prec.positive_definite()) throw NumericError("fit_nig: posterior precision is not positive definite");

    std::array<double, P> mu0{};
    for (std::size_t i = 0; i < P; ++i) mu0[i] = prior.mu0[i];
    std::array<double, P> rhs = prior_prec.mul(mu0);
    for (std::size_t i = 0; i < P; ++i) rhs[i] += cp.xty[i];
    const std::array<double, P> mu = prec.inverse().mul(rhs);

    NIGPosterior post;
    post.dim = P;
    post.n = n;
    for (std::size_t i = 0; i < P; ++i) post.mu[i] = mu[i];
    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < P; ++j) {
            post.precision(i, j) = prec(i, j);
            post.prior_precision(i, j) = prior_prec(i, j);
        }
    post.a = prior.a0 + 0.5 * nd;
    post.b = prior.b0 + 0.5 * (cp.yty + prior_prec.quad(mu0) - prec.quad(mu));
    if (!(post.b > 0.0)) throw NumericError("fit_nig: non-positive posterior scale b");
    post.log_det_precision = std::log(prec.det());
    post.log_det_prior_precision = std::log(prior_prec.det());
    post.log_marginal = -0.5 * nd * kLog2Pi +
                        0.5 * (post.log_det_prior_precision - post.log_det_precision) +
                        prior.a0 * std::log(prior.b0) - post.a * std::log(post.b) +
                        std::lgamma(post.a) - std::lgamma(prior.a0);
    return post;
}

} // namespace detail

// Conjugate fit of Y = X theta + eps under the normal-inverse-gamma prior.
// The null design uses the leading entry of mu0 and the scalar precision
// lambda (g-prior: (lambda/n) * 1'1 = lambda).
inline NIGPosterior fit_nig(const DesignMatrix& X, std::span<const double> y, const NIGPrior& prior) {
    prior.validate();
    if (y.size() != X.rows())
        throw ValidationError("fit_nig: phenotype length " + std::to_string(y.size()) +
                              " differs from design rows " + std::to_string(X.rows()));
    if (X.rows() < 3) throw ValidationError("fit_nig: need at least 3 observations");
    return X.is_null() ? detail::fit_nig_impl<1>(X, y, prior) : detail::fit_nig_impl<2>(X, y, prior);
}

// Marginal posterior of the slope: t with 2a df, location mu_2 and
// scale sqrt(b/a * (Lambda^-1)_22).
inline TComponent beta_posterior(const NIGPosterior& post) {
    if (post.dim != 2) throw ValidationError("beta_posterior: null model has no slope");
    const double inv22 = post.precision(0, 0) / post.precision.det();
    return TComponent{2.0 * post.a, post.mu[1], std::sqrt(post.b / post.a * inv22)};
}

// log BF12 in the closed form
//   sqrt(|L2|/|L1| * |L01|/|L02|) * (b2/b1)^a.
inline double log_bf12_linear(const NIGPosterior& post1, const NIGPosterior& post2) {
    return 0.5 * (post2.log_det_precision - post1.log_det_precision + post1.log_det_prior_precision -
                  post2.log_det_prior_precision) +
           post1.a * (std::log(post2.b) - std::log(post1.b));
}

inline double bf12_linear(const NIGPosterior& post1, const NIGPosterior& post2) {
    return std::exp(log_bf12_linear(post1, post2));
}

inline double log_bf_vs_null_linear(const NIGPosterior& post_k, const NIGPosterior& post_null) {
    return post_k.log_marginal - post_null.log_marginal;
}

inline double bf_vs_null_linear(const NIGPosterior& post_k, const NIGPosterior& post_null) {
    return std::exp(log_bf_vs_null_linear(post_k, post_null));
}

// log of (BF1N + BF2N) / 2, the averaged-model Bayes factor against the null.
inline double log_bf_an(double log_bf1n, double log_bf2n) {
    return log_sum_exp(log_bf1n, log_bf2n) - std::numbers::ln2;
}

inline double bf_an(double bf1n, double bf2n) {
    if (!(bf1n >= 0.0) || !(bf2n >= 0.0)) throw ValidationError("bf_an: Bayes factors must be non-negative");
    return std::exp(log_bf_an(std::log(bf1n), std::log(bf2n)));
}

// Everything the linear engine produces for one SNP.
struct LinearFit {
    NIGPosterior m1;
    NIGPosterior m2;
    NIGPosterior null;
    double log_bf12 = 0.0;
    double log_bf1n = 0.0;
    double log_bf2n = 0.0;
    double log_bfan = 0.0;
};

inline LinearFit fit_linear_models(std::span<const double> g1, std::span<const double> g2,
                                   std::span<const double> y, const NIGPrior& prior) {
    LinearFit f;
    f.m1 = fit_nig(DesignMatrix::with_genotype({g1.begin(), g1.end()}), y, prior);
    f.m2 = fit_nig(DesignMatrix::with_genotype({g2.begin(), g2.end()}), y, prior);
    f.null = fit_nig(DesignMatrix::intercept_only(y.size()), y, prior);
    f.log_bf12 = log_bf12_linear(f.m1, f.m2);
    f.log_bf1n = log_bf_vs_null_linear(f.m1, f.null);
    f.log_bf2n = log_bf_vs_null_linear(f.m2, f.null);
    f.log_bfan = log_bf_an(f.log_bf1n, f.log_bf2n);
    return f;
}

} // namespace xbma
