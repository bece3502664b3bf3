#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "xbma/error.hpp"
#include "xbma/geno.hpp"
#include "xbma/linear.hpp"
#include "xbma/logistic.hpp"
#include "xbma/mixture.hpp"
#include "xbma/numerics.hpp"
#include "xbma/parallel.hpp"
#include "xbma/rng.hpp"
#include "xbma/zmax.hpp"

namespace xbma {

enum class Coding { G1, G2 };

struct SimConfig {
    std::size_t n = 1000;
    double male_fraction = 0.5;
    double pm = 0.3;
    double pf = 0.3;
    double ev = 0.0;
    ModelTag true_model = ModelTag::Null;
    TraitType trait = TraitType::Linear;
    std::size_t replicates = 1000;
    std::uint64_t seed = 1;
    std::size_t mcmc_J = 1000;
    std::size_t burn_in = 500;
    double alpha = 0.05;  // credible level of the HPD regions is 1 - alpha
    double sigma = 1.0;   // residual sd, linear traits
    double intercept = 0.0;
    NIGPrior prior{};
    std::size_t threads = 1;

    void validate() const {
        if (n < 4) throw ValidationError("simulation: n must be at least 4");
        if (!(male_fraction >= 0.0 && male_fraction <= 1.0))
            throw ValidationError("simulation: male_fraction must lie in [0, 1]");
        if (!(pm > 0.0 && pm < 1.0 && pf > 0.0 && pf < 1.0))
            throw ValidationError("simulation: pm and pf must lie in (0, 1)");
        if (!((pm <= 0.5 && pf <= 0.5) || (pm >= 0.5 && pf >= 0.5)))
            throw ValidationError("simulation: pm and pf must be both <= 0.5 or both >= 0.5");
        if (!(ev >= 0.0 && ev < 1.0)) throw ValidationError("simulation: ev must lie in [0, 1)");
        if ((ev == 0.0) != (true_model == ModelTag::Null))
            throw ValidationError("simulation: ev = 0 exactly when the true model is Null");
        if (trait == TraitType::Binary && n % 2 != 0)
            throw ValidationError("simulation: binary traits need an even n (n/2 cases and controls)");
        if (trait == TraitType::Binary && prior.precision != PriorPrecision::GPrior)
            throw ValidationError("simulation: binary traits support only the g-prior");
        if (!(alpha > 0.0 && alpha <= 0.5)) throw ValidationError("simulation: alpha must lie in (0, 0.5]");
        if (replicates == 0) throw ValidationError("simulation: replicates must be positive");
        prior.validate();
    }
};

inline Coding coding_of(ModelTag m) { return m == ModelTag::M2 ? Coding::G2 : Coding::G1; }

inline double code_value(Coding c, Sex sex, int count) {
    const double g2 = static_cast<double>(count);
    return c == Coding::G1 && sex == Sex::Female ? 0.5 * g2 : g2;
}

inline int draw_genotype(Sex sex, double pm, double pf, Rng& rng) {
    if (sex == Sex::Male) return uniform01(rng) < pm ? 1 : 0;
    return (uniform01(rng) < pf ? 1 : 0) + (uniform01(rng) < pf ? 1 : 0);
}

// floor(n * male_fraction) males with Bernoulli(pm) genotypes followed by
// females in Hardy-Weinberg proportions.
inline std::vector<GenotypeRecord> gen_genotypes(const SimConfig& cfg, Rng& rng) {
    const auto n_male = static_cast<std::size_t>(std::floor(static_cast<double>(cfg.n) * cfg.male_fraction));
    std::vector<GenotypeRecord> out;
    out.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const Sex sex = i < n_male ? Sex::Male : Sex::Female;
        out.push_back(GenotypeRecord::called(sex, draw_genotype(sex, cfg.pm, cfg.pf, rng)));
    }
    return out;
}

// Population variance of a coding, by enumeration over the five states.
inline double var_g(Coding coding, double pm, double pf, double male_fraction) {
    const auto m = coding_moments(pm, pf, male_fraction);
    return coding == Coding::G1 ? m.var_g1 : m.var_g2;
}

// beta = sigma / sigma_G * sqrt(EV / (1 - EV)).
inline double beta_from_ev_linear(double ev, double sigma, double sigma_g) {
    if (!(sigma_g > 0.0)) throw ValidationError("beta_from_ev_linear: sigma_G must be positive");
    if (!(ev >= 0.0 && ev < 1.0)) throw ValidationError("beta_from_ev_linear: ev must lie in [0, 1)");
    return sigma / sigma_g * std::sqrt(ev / (1.0 - ev));
}

struct LogisticEffect {
    double beta = 0.0;
    double alpha = 0.0;
};

namespace detail {

inline double logistic_prevalence(const std::array<GenotypeState, 5>& states, Coding c, double alpha, double beta) {
    double p = 0.0;
    for (const auto& s : states) p += s.prob * sigmoid(alpha + beta * (c == Coding::G1 ? s.g1 : s.g2));
    return p;
}

inline double intercept_for_half_prevalence(const std::array<GenotypeState, 5>& states, Coding c, double beta) {
    return bisect_root([&](double a) { return logistic_prevalence(states, c, a, beta) - 0.5; }, -60.0, 60.0,
                       "logistic intercept");
}

} // namespace detail

// Observed-scale explained variance Var(E[Y|G]) / Var(Y) of a logistic
// model whose intercept is chosen so that P(Y = 1) = 1/2.
inline double logistic_ev(double beta, double pm, double pf, double male_fraction, Coding c) {
    const auto states = genotype_states(pm, pf, male_fraction);
    const double a = detail::intercept_for_half_prevalence(states, c, beta);
    double v = 0.0;
    for (const auto& s : states) {
        const double p = sigmoid(a + beta * (c == Coding::G1 ? s.g1 : s.g2));
        v += s.prob * (p - 0.5) * (p - 0.5);
    }
    return v / 0.25;
}

// Solves for (beta, alpha) with prevalence 1/2 and observed-scale EV = ev.
inline LogisticEffect beta_from_ev_logistic(double ev, double pm, double pf, double male_fraction, Coding c) {
    if (!(ev >= 0.0 && ev <= 0.2)) throw ValidationError("beta_from_ev_logistic: ev must lie in [0, 0.2]");
    const auto states = genotype_states(pm, pf, male_fraction);
    if (ev == 0.0) return {0.0, detail::intercept_for_half_prevalence(states, c, 0.0)};
    auto f = [&](double b) { return logistic_ev(b, pm, pf, male_fraction, c) - ev; };
    if (f(20.0) < 0.0) throw NumericError("beta_from_ev_logistic: infeasible EV (no root for beta in (0, 20])");
    LogisticEffect e;
    e.beta = bisect_root(f, 0.0, 20.0, "logistic effect size");
    e.alpha = detail::intercept_for_half_prevalence(states, c, e.beta);
    return e;
}

struct SimulatedData {
    std::vector<GenotypeRecord> records;
    std::vector<double> y;
};

// Linear: Y = alpha + beta G_k + N(0, sigma^2). Binary: individuals
// (genotype, then outcome) are drawn until n/2 cases and n/2 controls are
// collected; surplus draws of a full class are discarded.
inline SimulatedData gen_outcome(const SimConfig& cfg, double beta, double alpha, Rng& geno_rng, Rng& y_rng) {
    SimulatedData d;
    const Coding c = coding_of(cfg.true_model);
    if (cfg.trait == TraitType::Linear) {
        d.records = gen_genotypes(cfg, geno_rng);
        d.y.reserve(cfg.n);
        for (const auto& r : d.records)
            d.y.push_back(alpha + beta * code_value(c, r.sex, r.d_allele_count) + cfg.sigma * std_normal(y_rng));
        return d;
    }
    const std::size_t half = cfg.n / 2;
    if (beta == 0.0) {
        // Null: outcome independent of genotype; label a random half as cases.
        d.records = gen_genotypes(cfg, geno_rng);
        d.y.assign(cfg.n, 0.0);
        std::fill(d.y.begin(), d.y.begin() + static_cast<std::ptrdiff_t>(half), 1.0);
        for (std::size_t i = cfg.n - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(uniform01(y_rng) * static_cast<double>(i + 1));
            std::swap(d.y[i], d.y[std::min(j, i)]);
        }
        return d;
    }
    std::size_t cases = 0, controls = 0;
    d.records.reserve(cfg.n);
    d.y.reserve(cfg.n);
    for (std::size_t draws = 0; cases < half || controls < half; ++draws) {
        if (draws >= 10'000'000) throw NumericError("gen_outcome: rejection cap of 1e7 draws exceeded");
        const Sex sex = uniform01(geno_rng) < cfg.male_fraction ? Sex::Male : Sex::Female;
        const int count = draw_genotype(sex, cfg.pm, cfg.pf, geno_rng);
        const bool is_case = uniform01(y_rng) < sigmoid(alpha + beta * code_value(c, sex, count));
        if (is_case ? cases >= half : controls >= half) continue;
        (is_case ? cases : controls) += 1;
        d.records.push_back(GenotypeRecord::called(sex, count));
        d.y.push_back(is_case ? 1.0 : 0.0);
    }
    return d;
}

struct TrueEffect {
    double beta = 0.0;
    double alpha = 0.0;
};

inline TrueEffect true_effect(const SimConfig& cfg) {
    if (cfg.true_model == ModelTag::Null) return {0.0, cfg.trait == TraitType::Linear ? cfg.intercept : 0.0};
    const Coding c = coding_of(cfg.true_model);
    if (cfg.trait == TraitType::Linear) {
        const double sg = std::sqrt(var_g(c, cfg.pm, cfg.pf, cfg.male_fraction));
        return {beta_from_ev_linear(cfg.ev, cfg.sigma, sg), cfg.intercept};
    }
    const auto e = beta_from_ev_logistic(cfg.ev, cfg.pm, cfg.pf, cfg.male_fraction, c);
    return {e.beta, e.alpha};
}

struct ReplicateResult {
    double log10_bf12 = 0.0;
    double log10_bf1n = 0.0;
    double log10_bf2n = 0.0;
    double log10_bfan = 0.0;
    std::pair<double, double> hpd{0.0, 0.0};
    bool disconnected = false;
    bool covers_truth = false;
    bool contains_zero = false;
    double pval_m1 = 1.0;
    double pval_m2 = 1.0;
    double pval_zmax = 1.0;
    bool ok = true;
    std::string error;
};

inline bool region_contains(const HpdRegion& r, double x) {
    for (const auto& [l, u] : r.intervals)
        if (l <= x && x <= u) return true;
    return false;
}

// One replicate: simulate, fit both codings and the null, form the
// model-averaged posterior and its HPD region, and compute the Zmax p-value.
inline ReplicateResult run_replicate(const SimConfig& cfg, const TrueEffect& truth, std::size_t index) {
    ReplicateResult res;
    const std::uint64_t rep_seed = derive_seed(cfg.seed, index);
    Rng geno_rng = make_rng(derive_seed(rep_seed, Stream::Genotypes));
    Rng y_rng = make_rng(derive_seed(rep_seed, Stream::Outcome));
    try {
        const auto data = gen_outcome(cfg, truth.beta, truth.alpha, geno_rng, y_rng);
        const auto design = code_genotypes(data.records);
        if (cfg.trait == TraitType::Linear) {
            const auto fit = fit_linear_models(design.g1, design.g2, data.y, cfg.prior);
            res.log10_bf12 = fit.log_bf12 / kLn10;
            res.log10_bf1n = fit.log_bf1n / kLn10;
            res.log10_bf2n = fit.log_bf2n / kLn10;
            res.log10_bfan = fit.log_bfan / kLn10;
            const auto mix = MixtureT::from_log_bf12(beta_posterior(fit.m1), beta_posterior(fit.m2), fit.log_bf12);
            const auto region = hpd_exact(mix, cfg.alpha);
            res.hpd = {region.lower(), region.upper()};
            res.disconnected = region.disconnected();
            res.covers_truth = region_contains(region, truth.beta);
            res.contains_zero = region_contains(region, 0.0);
        } else {
            McmcConfig mc;
            mc.J = cfg.mcmc_J;
            mc.burn_in = cfg.burn_in;
            mc.seed = rep_seed;
            const auto fit = bf_logistic(design.g1, design.g2, data.y, cfg.prior.lambda, mc);
            res.log10_bf12 = fit.log_bf12 / kLn10;
            res.log10_bf1n = fit.log_bf1n / kLn10;
            res.log10_bf2n = fit.log_bf2n / kLn10;
            res.log10_bfan = fit.log_bfan / kLn10;
            const auto pooled = bma_pool_samples(fit.samples1.column(1), fit.samples2.column(1), fit.log_bf12,
                                                 derive_seed(rep_seed, Stream::Pooling));
            res.hpd = hpd_from_samples(pooled, cfg.alpha);
            res.covers_truth = res.hpd.first <= truth.beta && truth.beta <= res.hpd.second;
            res.contains_zero = res.hpd.first <= 0.0 && 0.0 <= res.hpd.second;
            if (!fit.converged) {
                res.ok = false;
                res.error = "bridge sampling did not converge";
            }
        }
        const auto w = wald_stats(design.g1, design.g2, data.y, cfg.trait);
        res.pval_m1 = w.p1;
        res.pval_m2 = w.p2;
        res.pval_zmax = zmax_pvalue(w.z1, w.z2, w.r).pvalue;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    return res;
}

struct StudySummary {
    std::size_t replicates = 0;
    std::size_t ok = 0;
    std::size_t failed = 0;
    double beta_true = 0.0;
    double mean_log10_bf12 = 0.0;
    double mean_log10_bf1n = 0.0;
    double mean_log10_bf2n = 0.0;
    double mean_log10_bfan = 0.0;
    double median_log10_bfan = 0.0;
    double frac_bf12_gt_1 = 0.0;
    double hpd_coverage = 0.0;
    double frac_hpd_contains_zero = 0.0;
    double frac_bfan_gt_1 = 0.0;  // BF_AN > 1, i.e. log10 BF_AN > 0
};

struct Study {
    SimConfig config;
    StudySummary summary;
    std::vector<ReplicateResult> results;
};

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline StudySummary summarize(const std::vector<ReplicateResult>& results, double beta_true) {
    StudySummary s;
    s.replicates = results.size();
    s.beta_true = beta_true;
    std::vector<double> bfan;
    for (const auto& r : results) {
        if (!r.ok) {
            ++s.failed;
            continue;
        }
        ++s.ok;
        s.mean_log10_bf12 += r.log10_bf12;
        s.mean_log10_bf1n += r.log10_bf1n;
        s.mean_log10_bf2n += r.log10_bf2n;
        s.mean_log10_bfan += r.log10_bfan;
        s.frac_bf12_gt_1 += r.log10_bf12 > 0.0;
        s.frac_bfan_gt_1 += r.log10_bfan > 0.0;
        s.hpd_coverage += r.covers_truth;
        s.frac_hpd_contains_zero += r.contains_zero;
        bfan.push_back(r.log10_bfan);
    }
    if (s.ok > 0) {
        const double k = static_cast<double>(s.ok);
        s.mean_log10_bf12 /= k;
        s.mean_log10_bf1n /= k;
        s.mean_log10_bf2n /= k;
        s.mean_log10_bfan /= k;
        s.frac_bf12_gt_1 /= k;
        s.frac_bfan_gt_1 /= k;
        s.hpd_coverage /= k;
        s.frac_hpd_contains_zero /= k;
    }
    s.median_log10_bfan = median(std::move(bfan));
    return s;
}

// Runs all replicates (in parallel, each on its own seeded streams) and
// aggregates them. Fails when more than 5% of replicates fail.
inline Study run_study(const SimConfig& cfg) {
    cfg.validate();
    const TrueEffect truth = true_effect(cfg);
    Study study;
    study.config = cfg;
    study.results.resize(cfg.replicates);
    parallel_for(cfg.replicates, cfg.threads,
                 [&](std::size_t i) { study.results[i] = run_replicate(cfg, truth, i); });
    study.summary = summarize(study.results, truth.beta);
    if (static_cast<double>(study.summary.failed) > 0.05 * static_cast<double>(cfg.replicates)) {
        std::string first;
        for (const auto& r : study.results)
            if (!r.ok) {
                first = r.error;
                break;
            }
        throw NumericError("run_study: " + std::to_string(study.summary.failed) + " of " +
                           std::to_string(cfg.replicates) + " replicates failed (first: " + first + ")");
    }
    return study;
}

// ---------------------------------------------------------------------------
// Configuration file: one `key = value` per line, '#' starts a comment.

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

inline ModelTag parse_model(const std::string& v) {
    if (v == "M1" || v == "m1") return ModelTag::M1;
    if (v == "M2" || v == "m2") return ModelTag::M2;
    if (v == "null" || v == "Null" || v == "N") return ModelTag::Null;
    throw ValidationError("unknown model '" + v + "' (expected M1, M2 or null)");
}

inline TraitType parse_trait(const std::string& v) {
    if (v == "linear") return TraitType::Linear;
    if (v == "binary") return TraitType::Binary;
    throw ValidationError("unknown trait '" + v + "' (expected linear or binary)");
}

inline SimConfig parse_sim_config(std::istream& in) {
    SimConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        auto num = [&]() {
            try {
                std::size_t used = 0;
                const double d = std::stod(val, &used);
                if (used != val.size()) throw std::invalid_argument(val);
                return d;
            } catch (const std::exception&) {
                throw ValidationError("config line " + std::to_string(lineno) + ": '" + key +
                                      "' expects a number, got '" + val + "'");
            }
        };
        auto count = [&]() {
            const double d = num();
            if (d < 0.0 || d != std::floor(d))
                throw ValidationError("config line " + std::to_string(lineno) + ": '" + key +
                                      "' expects a non-negative integer");
            return static_cast<std::size_t>(d);
        };
        if (key == "n") cfg.n = count();
        else if (key == "male_fraction") cfg.male_fraction = num();
        else if (key == "pm") cfg.pm = num();
        else if (key == "pf") cfg.pf = num();
        else if (key == "ev") cfg.ev = num();
        else if (key == "true_model") cfg.true_model = parse_model(val);
        else if (key == "trait") cfg.trait = parse_trait(val);
        else if (key == "replicates") cfg.replicates = count();
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(val));
        else if (key == "mcmc_samples" || key == "mcmc_J") cfg.mcmc_J = count();
        else if (key == "burn_in") cfg.burn_in = count();
        else if (key == "alpha") cfg.alpha = num();
        else if (key == "sigma") cfg.sigma = num();
        else if (key == "intercept") cfg.intercept = num();
        else if (key == "lambda") cfg.prior.lambda = num();
        else if (key == "a0") cfg.prior.a0 = num();
        else if (key == "b0") cfg.prior.b0 = num();
        else if (key == "threads") cfg.threads = std::max<std::size_t>(1, count());
        else if (key == "prior") {
            if (val == "gprior") cfg.prior.precision = PriorPrecision::GPrior;
            else if (val == "identity") cfg.prior.precision = PriorPrecision::Identity;
            else throw ValidationError("config line " + std::to_string(lineno) + ": prior must be gprior or identity");
        } else {
            throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

inline std::string format_double(double x, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

inline void write_summary_tsv(std::ostream& out, const Study& study) {
    const auto& c = study.config;
    const auto& s = study.summary;
    out << "n\tpm\tpf\tev\ttrue_model\ttrait\treplicates\tok\tfailed\tbeta_true"
           "\tmean_log10_bf12\tmean_log10_bf1n\tmean_log10_bf2n\tmean_log10_bfan\tmedian_log10_bfan"
           "\tmean_ln_bf1n\tmean_ln_bf2n\tmean_ln_bfan\tfrac_bf12_gt_1\thpd_coverage\tfrac_hpd_contains_zero\n";
    out << c.n << '\t' << format_double(c.pm) << '\t' << format_double(c.pf) << '\t' << format_double(c.ev) << '\t'
        << to_string(c.true_model) << '\t' << (c.trait == TraitType::Linear ? "linear" : "binary") << '\t'
        << s.replicates << '\t' << s.ok << '\t' << s.failed << '\t' << format_double(s.beta_true) << '\t'
        << format_double(s.mean_log10_bf12) << '\t' << format_double(s.mean_log10_bf1n) << '\t'
        << format_double(s.mean_log10_bf2n) << '\t' << format_double(s.mean_log10_bfan) << '\t'
        << format_double(s.median_log10_bfan) << '\t' << format_double(s.mean_log10_bf1n * kLn10) << '\t'
        << format_double(s.mean_log10_bf2n * kLn10) << '\t' << format_double(s.mean_log10_bfan * kLn10) << '\t'
        << format_double(s.frac_bf12_gt_1) << '\t' << format_double(s.hpd_coverage) << '\t'
        << format_double(s.frac_hpd_contains_zero) << '\n';
}

inline void write_replicates_tsv(std::ostream& out, const Study& study) {
    out << "replicate\tstatus\tlog10_bf12\tlog10_bf1n\tlog10_bf2n\tlog10_bfan\thpd_lower\thpd_upper"
           "\tdisconnected\tcovers_truth\tcontains_zero\tpval_m1\tpval_m2\tpval_zmax\n";
    for (std::size_t i = 0; i < study.results.size(); ++i) {
        const auto& r = study.results[i];
        out << i << '\t' << (r.ok ? "ok" : "failed") << '\t' << format_double(r.log10_bf12) << '\t'
            << format_double(r.log10_bf1n) << '\t' << format_double(r.log10_bf2n) << '\t'
            << format_double(r.log10_bfan) << '\t' << format_double(r.hpd.first) << '\t'
            << format_double(r.hpd.second) << '\t' << r.disconnected << '\t' << r.covers_truth << '\t'
            << r.contains_zero << '\t' << format_double(r.pval_m1) << '\t' << format_double(r.pval_m2) << '\t'
            << format_double(r.pval_zmax) << '\n';
    }
}

} // namespace xbma
