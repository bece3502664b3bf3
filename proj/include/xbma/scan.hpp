#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "xbma/error.hpp"
#include "xbma/geno.hpp"
#include "xbma/linear.hpp"
#include "xbma/logistic.hpp"
#include "xbma/mixture.hpp"
#include "xbma/parallel.hpp"
#include "xbma/simulate.hpp"
#include "xbma/zmax.hpp"

namespace xbma {

struct ScanConfig {
    std::string pheno_path;
    std::string geno_path;
    TraitType trait = TraitType::Linear;
    double alpha = 0.05;
    double lambda = 1.0;
    double a0 = 0.1;
    double b0 = 0.1;
    std::size_t mcmc_J = 1000;
    std::size_t burn_in = 500;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    double min_maf = 0.01;
    std::string out_prefix = "xbma";

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 0.5)) throw ValidationError("scan: --alpha must lie in (0, 0.5]");
        if (!(min_maf >= 0.0 && min_maf < 0.5)) throw ValidationError("scan: --min-maf must lie in [0, 0.5)");
        if (mcmc_J < 100) throw ValidationError("scan: --mcmc-samples must be at least 100");
        NIGPrior{{0.0, 0.0}, lambda, a0, b0, PriorPrecision::GPrior}.validate();
    }

    NIGPrior prior() const { return NIGPrior{{0.0, 0.0}, lambda, a0, b0, PriorPrecision::GPrior}; }
};

// Individuals in phenotype-file order; genotypes SNP-major with -1 for NA.
struct Dataset {
    std::vector<std::string> iids;
    std::vector<Sex> sexes;
    std::vector<double> y;
    std::vector<std::string> snp_ids;
    std::vector<std::vector<std::int8_t>> genotypes;

    std::size_t individuals() const { return iids.size(); }
    std::size_t snps() const { return snp_ids.size(); }

    std::vector<GenotypeRecord> records(std::size_t snp) const {
        std::vector<GenotypeRecord> out;
        out.reserve(individuals());
        const auto& g = genotypes[snp];
        for (std::size_t i = 0; i < individuals(); ++i)
            out.push_back(g[i] < 0 ? GenotypeRecord::absent(sexes[i]) : GenotypeRecord::called(sexes[i], g[i]));
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string f;
    while (ss >> f) out.push_back(f);
    return out;
}

inline std::string where(const std::string& path, std::size_t line) {
    return path + ":" + std::to_string(line) + ": ";
}

} // namespace detail

// Reads the phenotype table (`iid sex y`) and the genotype table
// (`iid snp_1 ... snp_K`, entries 0/1/2/NA) and aligns rows by iid.
inline Dataset load_dataset(const std::string& pheno_path, const std::string& geno_path, TraitType trait) {
    using detail::where;
    Dataset d;
    std::ifstream pin(pheno_path);
    if (!pin) throw ValidationError("cannot open phenotype file '" + pheno_path + "'");
    std::string line;
    std::size_t lineno = 0;
    std::unordered_map<std::string, std::size_t> row_of;
    bool header = true;
    while (std::getline(pin, line)) {
        ++lineno;
        const auto f = detail::split_fields(line);
        if (f.empty()) continue;
        if (header) {
            if (f.size() != 3 || f[0] != "iid" || f[1] != "sex" || f[2] != "y")
                throw ValidationError(where(pheno_path, lineno) + "header must be 'iid sex y'");
            header = false;
            continue;
        }
        if (f.size() != 3)
            throw ValidationError(where(pheno_path, lineno) + "expected 3 fields, found " + std::to_string(f.size()));
        if (!row_of.emplace(f[0], d.iids.size()).second)
            throw ValidationError(where(pheno_path, lineno) + "duplicated individual '" + f[0] + "'");
        Sex sex;
        if (f[1] == "F") sex = Sex::Female;
        else if (f[1] == "M") sex = Sex::Male;
        else throw ValidationError(where(pheno_path, lineno) + "sex must be F or M, got '" + f[1] + "'");
        double y = 0.0;
        try {
            std::size_t used = 0;
            y = std::stod(f[2], &used);
            if (used != f[2].size() || !std::isfinite(y)) throw std::invalid_argument(f[2]);
        } catch (const std::exception&) {
            throw ValidationError(where(pheno_path, lineno) + "phenotype '" + f[2] + "' is not a number");
        }
        if (trait == TraitType::Binary && y != 0.0 && y != 1.0)
            throw ValidationError(where(pheno_path, lineno) + "binary phenotype must be 0 or 1, got '" + f[2] + "'");
        d.iids.push_back(f[0]);
        d.sexes.push_back(sex);
        d.y.push_back(y);
    }
    if (header) throw ValidationError(pheno_path + ": empty phenotype file");
    if (d.iids.empty()) throw ValidationError(pheno_path + ": no individuals");

    std::ifstream gin(geno_path);
    if (!gin) throw ValidationError("cannot open genotype file '" + geno_path + "'");
    lineno = 0;
    header = true;
    std::vector<bool> seen(d.iids.size(), false);
    while (std::getline(gin, line)) {
        ++lineno;
        const auto f = detail::split_fields(line);
        if (f.empty()) continue;
        if (header) {
            if (f.empty() || f[0] != "iid")
                throw ValidationError(where(geno_path, lineno) + "header must start with 'iid'");
            std::unordered_set<std::string> ids;
            for (std::size_t c = 1; c < f.size(); ++c) {
                if (!ids.insert(f[c]).second)
                    throw ValidationError(where(geno_path, lineno) + "duplicated SNP id '" + f[c] + "'");
                d.snp_ids.push_back(f[c]);
            }
            if (d.snp_ids.empty()) throw ValidationError(where(geno_path, lineno) + "no SNP columns");
            d.genotypes.assign(d.snp_ids.size(), std::vector<std::int8_t>(d.iids.size(), -1));
            header = false;
            continue;
        }
        if (f.size() != d.snp_ids.size() + 1)
            throw ValidationError(where(geno_path, lineno) + "expected " + std::to_string(d.snp_ids.size() + 1) +
                                  " fields, found " + std::to_string(f.size()));
        const auto it = row_of.find(f[0]);
        if (it == row_of.end())
            throw ValidationError(where(geno_path, lineno) + "individual '" + f[0] + "' is not in the phenotype file");
        const std::size_t row = it->second;
        if (seen[row]) throw ValidationError(where(geno_path, lineno) + "duplicated individual '" + f[0] + "'");
        seen[row] = true;
        for (std::size_t c = 1; c < f.size(); ++c) {
            const std::string& v = f[c];
            std::int8_t code;
            if (v == "NA") code = -1;
            else if (v == "0") code = 0;
            else if (v == "1") code = 1;
            else if (v == "2") code = 2;
            else
                throw ValidationError(where(geno_path, lineno) + "column " + std::to_string(c + 1) + " (" +
                                      d.snp_ids[c - 1] + "): malformed genotype code '" + v + "'");
            if (code == 2 && d.sexes[row] == Sex::Male)
                throw ValidationError(where(geno_path, lineno) + "column " + std::to_string(c + 1) + " (" +
                                      d.snp_ids[c - 1] + "): male '" + f[0] + "' has genotype 2");
            d.genotypes[c - 1][row] = code;
        }
    }
    if (header) throw ValidationError(geno_path + ": empty genotype file");
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw ValidationError(geno_path + ": individual '" + d.iids[i] + "' has no genotype row");
    return d;
}

enum class SnpStatus { Ok, Monomorphic, FilteredMaf, Failed };

inline const char* to_string(SnpStatus s) {
    switch (s) {
    case SnpStatus::Ok: return "ok";
    case SnpStatus::Monomorphic: return "monomorphic";
    case SnpStatus::FilteredMaf: return "filtered_maf";
    case SnpStatus::Failed: return "failed";
    }
    return "?";
}

struct ScanRow {
    std::size_t index = 0;
    std::string snp_id;
    double maf = 0.0;
    std::size_t n_called = 0;
    double log10_bf12 = 0.0;
    double log10_bfan = 0.0;
    double hpd_lower = 0.0;
    double hpd_upper = 0.0;
    bool disconnected = false;
    bool mirrored = false;
    double mode = 0.0;
    double pval_m1 = 1.0;
    double pval_m2 = 1.0;
    double pval_zmax = 1.0;
    std::size_t rank_hpd = 0;  // 0 when not analysed
    std::size_t rank_bfan = 0;
    SnpStatus status = SnpStatus::Ok;
    std::string message;
};

struct ScanCounts {
    std::size_t total = 0;
    std::size_t analyzed = 0;
    std::size_t monomorphic = 0;
    std::size_t filtered_maf = 0;
    std::size_t failed = 0;
};

struct ScanResult {
    std::vector<ScanRow> rows;  // input SNP order
    ScanCounts counts;
};

// Point estimate for pooled draws: centre of the shortest window holding
// 10% of them.
inline double sample_mode(std::span<const double> draws) {
    const auto [l, u] = hpd_from_samples(draws, 0.9);
    return 0.5 * (l + u);
}

inline ScanRow analyze_snp(const Dataset& data, std::size_t snp, const ScanConfig& cfg) {
    ScanRow row;
    row.index = snp;
    row.snp_id = data.snp_ids[snp];
    const auto records = data.records(snp);
    const auto meta = snp_meta(row.snp_id, records);
    row.maf = meta.maf;
    row.n_called = meta.n_called;
    if (meta.monomorphic) {
        row.status = SnpStatus::Monomorphic;
        return row;
    }
    if (meta.maf < cfg.min_maf) {
        row.status = SnpStatus::FilteredMaf;
        return row;
    }
    try {
        // The minor allele is counted as the risk allele D.
        const auto orientation =
            d_allele_frequency(records) > 0.5 ? AlleleOrientation::RefLittleD : AlleleOrientation::RefD;
        const auto design = code_genotypes(records, orientation);
        std::vector<double> y;
        y.reserve(design.n_used);
        for (std::size_t r : design.kept_rows) y.push_back(data.y[r]);

        if (cfg.trait == TraitType::Linear) {
            const auto fit = fit_linear_models(design.g1, design.g2, y, cfg.prior());
            row.log10_bf12 = fit.log_bf12 / kLn10;
            row.log10_bfan = fit.log_bfan / kLn10;
            const auto mix = MixtureT::from_log_bf12(beta_posterior(fit.m1), beta_posterior(fit.m2), fit.log_bf12);
            const auto region = hpd_exact(mix, cfg.alpha);
            row.hpd_lower = region.lower();
            row.hpd_upper = region.upper();
            row.disconnected = region.disconnected();
            row.mode = posterior_mode(mix);
        } else {
            McmcConfig mc;
            mc.J = cfg.mcmc_J;
            mc.burn_in = cfg.burn_in;
            mc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(snp));
            const auto fit = bf_logistic(design.g1, design.g2, y, cfg.lambda, mc);
            row.log10_bf12 = fit.log_bf12 / kLn10;
            row.log10_bfan = fit.log_bfan / kLn10;
            const auto pooled = bma_pool_samples(fit.samples1.column(1), fit.samples2.column(1), fit.log_bf12,
                                                 derive_seed(mc.seed, Stream::Pooling));
            const auto [l, u] = hpd_from_samples(pooled, cfg.alpha);
            row.hpd_lower = l;
            row.hpd_upper = u;
            row.mode = sample_mode(pooled);
            if (!fit.converged) {
                row.status = SnpStatus::Failed;
                row.message = "bridge sampling did not converge";
            }
        }
        if (row.mode < 0.0) {
            row.mirrored = true;
            row.mode = -row.mode;
            const double l = row.hpd_lower;
            row.hpd_lower = -row.hpd_upper;
            row.hpd_upper = -l;
        }
        const auto w = wald_stats(design.g1, design.g2, y, cfg.trait);
        row.pval_m1 = w.p1;
        row.pval_m2 = w.p2;
        row.pval_zmax = zmax_pvalue(w.z1, w.z2, w.r).pvalue;
    } catch (const std::exception& e) {
        row.status = SnpStatus::Failed;
        row.message = e.what();
    }
    return row;
}

inline void assign_ranks(std::vector<ScanRow>& rows) {
    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].status == SnpStatus::Ok) ok.push_back(i);
    auto by_hpd = ok;
    std::stable_sort(by_hpd.begin(), by_hpd.end(),
                     [&](std::size_t a, std::size_t b) { return rows[a].hpd_lower > rows[b].hpd_lower; });
    for (std::size_t r = 0; r < by_hpd.size(); ++r) rows[by_hpd[r]].rank_hpd = r + 1;
    auto by_bf = ok;
    std::stable_sort(by_bf.begin(), by_bf.end(),
                     [&](std::size_t a, std::size_t b) { return rows[a].log10_bfan > rows[b].log10_bfan; });
    for (std::size_t r = 0; r < by_bf.size(); ++r) rows[by_bf[r]].rank_bfan = r + 1;
}

// Analyses every SNP (in parallel; each SNP's randomness depends only on
// the master seed and the SNP index) and ranks the analysed ones.
inline ScanResult scan(const Dataset& data, const ScanConfig& cfg) {
    cfg.validate();
    if (cfg.trait == TraitType::Binary) check_binary_outcome(data.y);
    ScanResult res;
    res.rows.resize(data.snps());
    parallel_for(data.snps(), cfg.threads, [&](std::size_t s) { res.rows[s] = analyze_snp(data, s, cfg); });
    assign_ranks(res.rows);
    res.counts.total = res.rows.size();
    for (const auto& r : res.rows) {
        switch (r.status) {
        case SnpStatus::Ok: ++res.counts.analyzed; break;
        case SnpStatus::Monomorphic: ++res.counts.monomorphic; break;
        case SnpStatus::FilteredMaf: ++res.counts.filtered_maf; break;
        case SnpStatus::Failed: ++res.counts.failed; break;
        }
    }
    if (res.counts.analyzed == 0) throw ValidationError("scan: no analysable SNP after MAF and monomorphic filters");
    return res;
}

namespace detail {

inline std::string fmt(double x) { return format_double(x, 6); }

inline std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    return s;
}

} // namespace detail

// Analysed SNPs by rank_hpd, then the rest in input order.
inline std::vector<std::size_t> display_order(const ScanResult& res) {
    std::vector<std::size_t> order(res.rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = res.rows[a];
        const auto& rb = res.rows[b];
        const bool oka = ra.status == SnpStatus::Ok;
        const bool okb = rb.status == SnpStatus::Ok;
        if (oka != okb) return oka;
        return oka && ra.rank_hpd < rb.rank_hpd;
    });
    return order;
}

inline void write_scan_tsv(std::ostream& out, const ScanResult& res) {
    using detail::fmt;
    out << "snp_id\tmaf\tn_called\tlog10_bf12\tlog10_bfan\thpd_lower\thpd_upper\tdisconnected\tmirrored\tmode"
           "\tpval_m1\tpval_m2\tpval_zmax\trank_hpd\trank_bfan\tstatus\n";
    for (std::size_t i : display_order(res)) {
        const auto& r = res.rows[i];
        out << r.snp_id << '\t' << fmt(r.maf) << '\t' << r.n_called << '\t';
        if (r.status == SnpStatus::Ok) {
            out << fmt(r.log10_bf12) << '\t' << fmt(r.log10_bfan) << '\t' << fmt(r.hpd_lower) << '\t'
                << fmt(r.hpd_upper) << '\t' << r.disconnected << '\t' << r.mirrored << '\t' << fmt(r.mode) << '\t'
                << fmt(r.pval_m1) << '\t' << fmt(r.pval_m2) << '\t' << fmt(r.pval_zmax) << '\t' << r.rank_hpd
                << '\t' << r.rank_bfan << '\t' << "ok\n";
        } else {
            out << "NA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\t" << to_string(r.status);
            if (!r.message.empty()) out << ':' << detail::sanitize(r.message);
            out << '\n';
        }
    }
}

// Sorted observed -log10 p against uniform expected quantiles (i - 0.5) / m,
// one block per method.
inline void write_qq_tsv(std::ostream& out, const ScanResult& res) {
    using detail::fmt;
    out << "method\tsnp_id\tobserved\texpected\n";
    const char* names[] = {"M1", "M2", "Zmax"};
    for (int m = 0; m < 3; ++m) {
        std::vector<std::pair<double, std::size_t>> ps;
        for (std::size_t i = 0; i < res.rows.size(); ++i) {
            const auto& r = res.rows[i];
            if (r.status != SnpStatus::Ok) continue;
            const double p = m == 0 ? r.pval_m1 : m == 1 ? r.pval_m2 : r.pval_zmax;
            ps.emplace_back(p, i);
        }
        std::stable_sort(ps.begin(), ps.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        const double total = static_cast<double>(ps.size());
        for (std::size_t k = 0; k < ps.size(); ++k) {
            const double observed = -std::log10(std::max(ps[k].first, 1e-300));
            const double expected = -std::log10((static_cast<double>(k) + 0.5) / total);
            out << names[m] << '\t' << res.rows[ps[k].second].snp_id << '\t' << fmt(observed) << '\t' << fmt(expected)
                << '\n';
        }
    }
}

// Counts and configuration echo. The thread count is omitted so that the
// file is identical for any degree of parallelism.
inline void write_scan_log(std::ostream& out, const ScanResult& res, const ScanConfig& cfg) {
    using detail::fmt;
    out << "xbma scan\n";
    out << "pheno\t" << cfg.pheno_path << '\n';
    out << "geno\t" << cfg.geno_path << '\n';
    out << "trait\t" << (cfg.trait == TraitType::Linear ? "linear" : "binary") << '\n';
    out << "alpha\t" << fmt(cfg.alpha) << '\n';
    out << "lambda\t" << fmt(cfg.lambda) << '\n';
    out << "a0\t" << fmt(cfg.a0) << '\n';
    out << "b0\t" << fmt(cfg.b0) << '\n';
    if (cfg.trait == TraitType::Binary) {
        out << "mcmc_samples\t" << cfg.mcmc_J << '\n';
        out << "burn_in\t" << cfg.burn_in << '\n';
    }
    out << "seed\t" << cfg.seed << '\n';
    out << "min_maf\t" << fmt(cfg.min_maf) << '\n';
    out << "snps_total\t" << res.counts.total << '\n';
    out << "snps_analyzed\t" << res.counts.analyzed << '\n';
    out << "snps_monomorphic\t" << res.counts.monomorphic << '\n';
    out << "snps_filtered_maf\t" << res.counts.filtered_maf << '\n';
    out << "snps_failed\t" << res.counts.failed << '\n';
    for (const auto& r : res.rows)
        if (r.status == SnpStatus::Failed) out << "failed\t" << r.snp_id << '\t' << detail::sanitize(r.message) << '\n';
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << content;
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

inline void emit_outputs(const ScanResult& res, const ScanConfig& cfg) {
    std::ostringstream scan_tsv, qq_tsv, log;
    write_scan_tsv(scan_tsv, res);
    write_qq_tsv(qq_tsv, res);
    write_scan_log(log, res, cfg);
    write_file(cfg.out_prefix + ".scan.tsv", scan_tsv.str());
    write_file(cfg.out_prefix + ".qq.tsv", qq_tsv.str());
    write_file(cfg.out_prefix + ".log", log.str());
}

} // namespace xbma
