#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "xbma/geno.hpp"
#include "xbma/logistic.hpp"

using namespace xbma;

namespace {

struct BinarySample {
    std::vector<double> g1, g2, y;
};

BinarySample binary_sample(std::size_t n, double beta, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u;
    std::vector<GenotypeRecord> r;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 2) r.push_back(GenotypeRecord::called(Sex::Male, u(rng) < 0.4));
        else r.push_back(GenotypeRecord::called(Sex::Female, (u(rng) < 0.4) + (u(rng) < 0.4)));
    }
    r[0] = GenotypeRecord::called(Sex::Female, 2);
    r[1] = GenotypeRecord::called(Sex::Male, 0);
    const auto d = code_genotypes(r);
    BinarySample s{d.g1, d.g2, {}};
    for (std::size_t i = 0; i < n; ++i) s.y.push_back(u(rng) < 1 / (1 + std::exp(-(-0.2 + beta * d.g1[i]))));
    s.y[0] = 1;
    s.y[1] = 0;
    return s;
}

PosteriorSamples gaussian_draws(double m, double s, std::size_t J, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(m, s);
    PosteriorSamples p;
    p.dim = 1;
    p.J = J;
    p.draws.resize(J);
    for (auto& v : p.draws) v = nd(rng);
    return p;
}

} // namespace

TEST(Bridge, IdenticalDensitiesGiveUnitRatio) {
    const auto a = gaussian_draws(0, 1, 2000, 1);
    const auto b = gaussian_draws(0, 1, 2000, 2);
    auto q = [](std::span<const double> t) { return -0.5 * t[0] * t[0]; };
    const auto est = bridge_ratio(a, b, q, q);
    EXPECT_NEAR(est.log_value, 0.0, 0.02);
    EXPECT_TRUE(est.converged);
}

TEST(Bridge, KnownGaussianConstants) {
    // q_a = exp(-x^2/2): c_a = sqrt(2 pi). q_b = 3 exp(-(x - 0.5)^2 / (2 * 1.44)): c_b = 3 sqrt(2 pi) 1.2.
    const auto a = gaussian_draws(0.0, 1.0, 5000, 3);
    const auto b = gaussian_draws(0.5, 1.2, 5000, 4);
    auto qa = [](std::span<const double> t) { return -0.5 * t[0] * t[0]; };
    auto qb = [](std::span<const double> t) { return std::log(3.0) - 0.5 * (t[0] - 0.5) * (t[0] - 0.5) / 1.44; };
    const auto est = bridge_ratio(a, b, qa, qb);
    EXPECT_NEAR(est.log_value, -std::log(3.0 * 1.2), 0.02);
}

TEST(Bridge, HugeLogScaleDoesNotOverflow) {
    const auto a = gaussian_draws(0.0, 1.0, 2000, 5);
    const auto b = gaussian_draws(0.0, 1.0, 2000, 6);
    auto qa = [](std::span<const double> t) { return 5000.0 - 0.5 * t[0] * t[0]; };
    auto qb = [](std::span<const double> t) { return -0.5 * t[0] * t[0]; };
    EXPECT_NEAR(bridge_ratio(a, b, qa, qb).log_value, 5000.0, 0.02);
}

TEST(Bridge, RejectsUnequalSampleSizes) {
    const auto a = gaussian_draws(0, 1, 200, 1);
    const auto b = gaussian_draws(0, 1, 300, 2);
    auto q = [](std::span<const double> t) { return -0.5 * t[0] * t[0]; };
    EXPECT_THROW(bridge_ratio(a, b, q, q), ValidationError);
}

TEST(Anchor, RecoversGaussianNormalisingConstant) {
    const auto s = gaussian_draws(1.3, 0.4, 3000, 8);
    auto q = [](std::span<const double> t) { return 2.0 - 0.5 * (t[0] - 1.3) * (t[0] - 1.3) / 0.16; };
    const auto est = marginal_via_anchor(s, q, 99);
    EXPECT_NEAR(est.log_marginal, 2.0 + 0.5 * std::log(2 * oracle::kPi) + std::log(0.4), 0.02);
}

TEST(Anchor, TwoDimensionalGaussianConstant) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> nd;
    PosteriorSamples s;
    s.dim = 2;
    s.J = 3000;
    for (std::size_t j = 0; j < s.J; ++j) {
        s.draws.push_back(0.5 + 0.3 * nd(rng));
        s.draws.push_back(-1.0 + 2.0 * nd(rng));
    }
    auto q = [](std::span<const double> t) {
        const double a = (t[0] - 0.5) / 0.3, b = (t[1] + 1.0) / 2.0;
        return -0.5 * (a * a + b * b);
    };
    const auto est = marginal_via_anchor(s, q, 7);
    EXPECT_NEAR(est.log_marginal, std::log(2 * oracle::kPi * 0.3 * 2.0), 0.02);
}

TEST(Gibbs, PosteriorMeanMatchesQuadrature) {
    const auto s = binary_sample(30, 1.0, 12);
    const auto X = DesignMatrix::with_genotype(s.g2);
    const auto prior = LogisticPrior::g_prior(X, 1.0);
    const auto draws = pg_gibbs(X, s.y, prior, 20000, 500, 3);
    // Posterior mean of beta by 2-D quadrature of the unnormalised posterior.
    const LogisticTarget q(X, s.y, prior);
    auto post = [&](double a, double b) {
        const double th[2] = {a, b};
        return std::exp(q(th));
    };
    double z = 0, zb = 0, za = 0;
    for (int k = -40; k < 40; ++k) {
        auto outer_z = [&](double b) { return oracle::gk([&](double a) { return post(a, b); }, -8, 8, 1e-9); };
        auto outer_b = [&](double b) { return b * outer_z(b); };
        auto outer_a = [&](double b) {
            return oracle::gk([&](double a) { return a * post(a, b); }, -8, 8, 1e-9);
        };
        z += oracle::gk(outer_z, 0.2 * k, 0.2 * (k + 1), 1e-9);
        zb += oracle::gk(outer_b, 0.2 * k, 0.2 * (k + 1), 1e-9);
        za += oracle::gk(outer_a, 0.2 * k, 0.2 * (k + 1), 1e-9);
    }
    const auto beta = draws.column(1);
    const auto alpha = draws.column(0);
    const double sd = std::sqrt(variance(beta));
    // Autocorrelated chain: allow about 5 naive standard errors of 20000 draws times 3.
    EXPECT_NEAR(mean(beta), zb / z, 0.05 * sd + 15 * sd / std::sqrt(20000.0));
    EXPECT_NEAR(mean(alpha), za / z, 15 * std::sqrt(variance(alpha)) / std::sqrt(20000.0));
}

TEST(Gibbs, DeterministicForSeed) {
    const auto s = binary_sample(50, 0.5, 4);
    const auto X = DesignMatrix::with_genotype(s.g1);
    const auto prior = LogisticPrior::g_prior(X, 1.0);
    const auto a = pg_gibbs(X, s.y, prior, 200, 50, 77);
    const auto b = pg_gibbs(X, s.y, prior, 200, 50, 77);
    const auto c = pg_gibbs(X, s.y, prior, 200, 50, 78);
    EXPECT_EQ(a.draws, b.draws);
    EXPECT_NE(a.draws, c.draws);
}

TEST(Gibbs, InputValidation) {
    const std::vector<double> g{0, 1, 2, 1};
    const auto X = DesignMatrix::with_genotype(g);
    const auto prior = LogisticPrior::g_prior(X, 1.0);
    EXPECT_THROW(pg_gibbs(X, std::vector<double>{1, 1, 1, 1}, prior, 200, 10, 1), ValidationError);
    EXPECT_THROW(pg_gibbs(X, std::vector<double>{0, 1, 2, 1}, prior, 200, 10, 1), ValidationError);
    const std::vector<double> flat{1, 1, 1, 1};
    const auto Xf = DesignMatrix::with_genotype(flat);
    EXPECT_THROW(pg_gibbs(Xf, std::vector<double>{0, 1, 0, 1}, LogisticPrior::g_prior(Xf, 1.0), 200, 10, 1),
                 NumericError);
}

TEST(LogisticOracle, PipelineMarginalsMatchQuadrature) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto s = binary_sample(20, 0.8, 300 + seed);
        McmcConfig cfg;
        cfg.J = 4000;
        cfg.burn_in = 500;
        cfg.seed = seed;
        const auto fit = bf_logistic(s.g1, s.g2, s.y, 1.0, cfg);
        const double m1 = oracle::logistic_log_marginal_quadrature({s.g1, s.y}, 1.0);
        const double m2 = oracle::logistic_log_marginal_quadrature({s.g2, s.y}, 1.0);
        const double mn = oracle::logistic_log_marginal_quadrature({{}, s.y}, 1.0);
        EXPECT_NEAR(fit.log_marginal1, m1, 0.05);
        EXPECT_NEAR(fit.log_marginal2, m2, 0.05);
        EXPECT_NEAR(fit.log_marginal_null, mn, 0.05);
        EXPECT_NEAR(fit.log_bf12, m1 - m2, 0.05);
        EXPECT_TRUE(fit.converged);
    }
}

TEST(LogisticOracle, NullMarginalMatchesClosedBinomialIntegral) {
    // Intercept-only: the integral over the intercept is one-dimensional;
    // check the quadrature oracle itself against a direct midpoint sum.
    const std::vector<double> y{1, 0, 0, 1, 1, 0, 0, 0, 1, 0};
    double acc = 0;
    const double h = 1e-4;
    for (double a = -12; a < 12; a += h) {
        const double x = a + h / 2;
        const double ll = 4 * x - 10 * std::log1p(std::exp(x));
        acc += std::exp(ll - 0.5 * x * x) / std::sqrt(2 * oracle::kPi) * h;
    }
    EXPECT_NEAR(oracle::logistic_log_marginal_quadrature({{}, y}, 1.0), std::log(acc), 1e-6);
}

// Invariant: swapping the roles of the two sample sets negates the log ratio.
TEST(LogisticProperty, BridgeSelfConsistency) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto s = binary_sample(200, 0.6, 40 + seed);
        const auto X1 = DesignMatrix::with_genotype(s.g1);
        const auto X2 = DesignMatrix::with_genotype(s.g2);
        const auto p1 = LogisticPrior::g_prior(X1, 1.0);
        const auto p2 = LogisticPrior::g_prior(X2, 1.0);
        const auto a = pg_gibbs(X1, s.y, p1, 1000, 500, seed);
        const auto b = pg_gibbs(X2, s.y, p2, 1000, 500, seed + 100);
        const LogisticTarget q1(X1, s.y, p1), q2(X2, s.y, p2);
        const auto ab = bridge_ratio(a, b, q1, q2);
        const auto ba = bridge_ratio(b, a, q2, q1);
        EXPECT_NEAR(ab.log_value + ba.log_value, 0.0, 0.03);
    }
}

// The direct M1-to-M2 bridge and the two anchor marginals estimate the same
// quantity with independent Monte Carlo error.
TEST(LogisticProperty, DirectBridgeAgreesWithAnchorMarginals) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto s = binary_sample(200, 0.6, 40 + seed);
        McmcConfig cfg;
        cfg.J = 2000;
        cfg.seed = seed;
        const auto fit = bf_logistic(s.g1, s.g2, s.y, 1.0, cfg);
        EXPECT_NEAR(fit.log_bf12, fit.log_marginal1 - fit.log_marginal2, 0.1);
    }
}

TEST(LogisticProperty, AllMaleSampleHasUnitBf12) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u;
    std::vector<double> g, y;
    for (int i = 0; i < 300; ++i) {
        g.push_back(u(rng) < 0.3);
        y.push_back(u(rng) < sigmoid(-0.1 + 0.5 * g.back()));
    }
    McmcConfig cfg;
    cfg.seed = 4;
    const auto fit = bf_logistic(g, g, y, 1.0, cfg);
    EXPECT_NEAR(std::exp(fit.log_bf12), 1.0, 0.05);
}

TEST(Gibbs, ChainHalvesAgree) {
    const auto s = binary_sample(200, 0.5, 77);
    const auto X = DesignMatrix::with_genotype(s.g1);
    const auto draws = pg_gibbs(X, s.y, LogisticPrior::g_prior(X, 1.0), 4000, 500, 12);
    const auto beta = draws.column(1);
    const std::vector<double> first(beta.begin(), beta.begin() + 2000), second(beta.begin() + 2000, beta.end());
    // Batch-means standard error to account for autocorrelation.
    auto batch_se = [](const std::vector<double>& v) {
        std::vector<double> means;
        for (std::size_t b = 0; b < 20; ++b)
            means.push_back(mean(std::vector<double>(v.begin() + b * 100, v.begin() + (b + 1) * 100)));
        return std::sqrt(variance(means) / 20.0);
    };
    const double se = std::hypot(batch_se(first), batch_se(second));
    EXPECT_NEAR(mean(first), mean(second), 3 * se);
}

TEST(Gibbs, NullSlopeIntervalsCoverZero) {
    int covered = 0;
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        std::mt19937_64 rng(5000 + rep);
        std::uniform_real_distribution<double> u;
        std::vector<double> g, y;
        for (int i = 0; i < 500; ++i) {
            g.push_back(i % 2 ? (u(rng) < 0.3) : 0.5 * ((u(rng) < 0.3) + (u(rng) < 0.3)));
            y.push_back(i < 250 ? 1.0 : 0.0);
        }
        const auto X = DesignMatrix::with_genotype(g);
        auto beta = pg_gibbs(X, y, LogisticPrior::g_prior(X, 1.0), 1000, 500, rep).column(1);
        std::sort(beta.begin(), beta.end());
        covered += beta[25] <= 0.0 && 0.0 <= beta[974];
    }
    EXPECT_GE(covered, 45);
}

TEST(Anchor, NullModelMatchesOneDimensionalQuadrature) {
    std::vector<double> y(100, 0.0);
    for (int i = 0; i < 50; ++i) y[2 * i] = 1.0;
    const auto X = DesignMatrix::intercept_only(100);
    const auto prior = LogisticPrior::g_prior(X, 1.0);
    const auto draws = pg_gibbs(X, y, prior, 1000, 500, 3, ModelTag::Null);
    const auto est = marginal_via_anchor(draws, LogisticTarget(X, y, prior), 4);
    EXPECT_NEAR(est.log_marginal, oracle::logistic_log_marginal_quadrature({{}, y}, 1.0), 0.02);
}

TEST(LogisticPipeline, DeterministicForSeed) {
    const auto s = binary_sample(100, 0.6, 5);
    McmcConfig cfg;
    cfg.J = 300;
    cfg.burn_in = 100;
    cfg.seed = 42;
    const auto a = bf_logistic(s.g1, s.g2, s.y, 1.0, cfg);
    const auto b = bf_logistic(s.g1, s.g2, s.y, 1.0, cfg);
    EXPECT_EQ(a.log_bf12, b.log_bf12);
    EXPECT_EQ(a.log_bfan, b.log_bfan);
    EXPECT_EQ(a.samples1.draws, b.samples1.draws);
}

TEST(LogisticPrior, GPriorMatrix) {
    const std::vector<double> g{0, 1, 2, 1};
    const auto p = LogisticPrior::g_prior(DesignMatrix::with_genotype(g), 2.0);
    EXPECT_DOUBLE_EQ(p.precision(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(p.precision(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(p.precision(1, 1), 3.0);
    const auto pn = LogisticPrior::g_prior(DesignMatrix::intercept_only(4), 2.0);
    EXPECT_EQ(pn.dim, 1u);
    const double th[1] = {0.5};
    EXPECT_NEAR(pn.log_density(th), -0.5 * std::log(2 * oracle::kPi / 2.0) - 0.25, 1e-14);
}
