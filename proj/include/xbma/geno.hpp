#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "xbma/error.hpp"
#include "xbma/numerics.hpp"

namespace xbma {

enum class Sex { Female, Male };

// Which allele is counted by the additive code.
enum class AlleleOrientation { RefD, RefLittleD };

inline AlleleOrientation flip(AlleleOrientation o) {
    return o == AlleleOrientation::RefD ? AlleleOrientation::RefLittleD : AlleleOrientation::RefD;
}

// One individual's genotype at one SNP: number of D alleles carried.
struct GenotypeRecord {
    Sex sex = Sex::Female;
    int d_allele_count = 0;
    bool missing = false;

    static GenotypeRecord called(Sex sex, int count) { return {sex, count, false}; }
    static GenotypeRecord absent(Sex sex) { return {sex, 0, true}; }
};

inline int max_allele_count(Sex sex) { return sex == Sex::Female ? 2 : 1; }

// Both additive codings of one SNP over the called individuals.
//   g1: XCI coding, females 0 / 0.5 / 1, males 0 / 1
//   g2: no-XCI coding, females 0 / 1 / 2, males 0 / 1
struct CodedDesign {
    std::vector<double> g1;
    std::vector<double> g2;
    std::vector<Sex> sexes;
    std::vector<std::size_t> kept_rows;  // positions in the input record list
    AlleleOrientation orientation = AlleleOrientation::RefD;
    std::size_t n_used = 0;
};

struct SnpMeta {
    std::string snp_id;
    double maf = 0.0;
    bool monomorphic = false;
    std::size_t n_called = 0;
};

inline void validate_record(const GenotypeRecord& r, std::size_t index) {
    if (r.missing) return;
    if (r.d_allele_count < 0 || r.d_allele_count > max_allele_count(r.sex)) {
        throw ValidationError("genotype record " + std::to_string(index) + ": allele count " +
                              std::to_string(r.d_allele_count) + " is illegal for a " +
                              (r.sex == Sex::Female ? "female" : "male"));
    }
}

inline CodedDesign code_genotypes(const std::vector<GenotypeRecord>& records,
                                  AlleleOrientation orientation = AlleleOrientation::RefD) {
    if (records.empty()) throw ValidationError("code_genotypes: no genotype records");
    CodedDesign d;
    d.orientation = orientation;
    d.g1.reserve(records.size());
    d.g2.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        validate_record(r, i);
        if (r.missing) continue;
        int c = r.d_allele_count;
        if (orientation == AlleleOrientation::RefLittleD) c = max_allele_count(r.sex) - c;
        const double g2 = static_cast<double>(c);
        const double g1 = r.sex == Sex::Female ? 0.5 * g2 : g2;
        d.g1.push_back(g1);
        d.g2.push_back(g2);
        d.sexes.push_back(r.sex);
        d.kept_rows.push_back(i);
    }
    d.n_used = d.g1.size();
    if (d.n_used == 0) throw ValidationError("code_genotypes: every genotype is missing (empty design)");
    return d;
}

// Raw frequency of allele D among called chromosome copies.
inline double d_allele_frequency(const std::vector<GenotypeRecord>& records) {
    double alleles = 0.0;
    double copies = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        validate_record(r, i);
        if (r.missing) continue;
        alleles += r.d_allele_count;
        copies += max_allele_count(r.sex);
    }
    if (copies == 0.0) throw ValidationError("pooled_maf: no called genotypes");
    return alleles / copies;
}

// Pooled minor allele frequency over both sexes, folded to <= 0.5.
inline double pooled_maf(const std::vector<GenotypeRecord>& records) {
    const double f = d_allele_frequency(records);
    return std::min(f, 1.0 - f);
}

inline SnpMeta snp_meta(std::string snp_id, const std::vector<GenotypeRecord>& records) {
    SnpMeta m;
    m.snp_id = std::move(snp_id);
    for (const auto& r : records)
        if (!r.missing) ++m.n_called;
    if (m.n_called == 0) {
        m.monomorphic = true;
        return m;
    }
    const double f = d_allele_frequency(records);
    m.maf = std::min(f, 1.0 - f);
    m.monomorphic = (f == 0.0 || f == 1.0);
    return m;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw NumericError("correlation undefined: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double sample_correlation_g1g2(const CodedDesign& design) {
    return pearson(design.g1, design.g2);
}

// The five (sex, genotype) states of an X-linked biallelic SNP with
// female genotypes in Hardy-Weinberg proportions.
struct GenotypeState {
    Sex sex;
    int d_count;
    double prob;
    double g1;
    double g2;
};

inline std::array<GenotypeState, 5> genotype_states(double pm, double pf, double male_fraction) {
    const double mf = male_fraction;
    const double ff = 1.0 - male_fraction;
    return {{
        {Sex::Male, 0, mf * (1.0 - pm), 0.0, 0.0},
        {Sex::Male, 1, mf * pm, 1.0, 1.0},
        {Sex::Female, 0, ff * (1.0 - pf) * (1.0 - pf), 0.0, 0.0},
        {Sex::Female, 1, ff * 2.0 * pf * (1.0 - pf), 0.5, 1.0},
        {Sex::Female, 2, ff * pf * pf, 1.0, 2.0},
    }};
}

struct CodingMoments {
    double var_g1;
    double var_g2;
    double cov;
};

inline CodingMoments coding_moments(double pm, double pf, double male_fraction) {
    const auto states = genotype_states(pm, pf, male_fraction);
    double m1 = 0.0, m2 = 0.0;
    for (const auto& s : states) {
        m1 += s.prob * s.g1;
        m2 += s.prob * s.g2;
    }
    CodingMoments c{0.0, 0.0, 0.0};
    for (const auto& s : states) {
        c.var_g1 += s.prob * (s.g1 - m1) * (s.g1 - m1);
        c.var_g2 += s.prob * (s.g2 - m2) * (s.g2 - m2);
        c.cov += s.prob * (s.g1 - m1) * (s.g2 - m2);
    }
    return c;
}

// Population correlation of the two codings by enumeration over the five states.
inline double corr_g1g2_theory(double pm, double pf, double male_fraction) {
    if (!(pm >= 0.0 && pm <= 1.0 && pf >= 0.0 && pf <= 1.0))
        throw ValidationError("corr_g1g2_theory: allele frequencies must lie in [0, 1]");
    if (!(male_fraction >= 0.0 && male_fraction <= 1.0))
        throw ValidationError("corr_g1g2_theory: male fraction must lie in [0, 1]");
    const auto m = coding_moments(pm, pf, male_fraction);
    if (m.var_g1 <= 0.0 || m.var_g2 <= 0.0) throw NumericError("corr_g1g2_theory: degenerate variance");
    return m.cov / std::sqrt(m.var_g1 * m.var_g2);
}

} // namespace xbma
