#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "flexcf/cfgen.hpp"
#include "flexcf/common.hpp"
#include "flexcf/flex.hpp"
#include "flexcf/schema.hpp"

namespace flexcf {

inline constexpr double kDefaultEpsilon = 1e-6;

/// Pooled change-frequency importance with absolute tolerance epsilon.
/// Phi_dice[j] = C[j] / n_total_cf where C[j] counts changes across all
/// counterfactuals of all instances.
struct DiceResult {
    std::vector<std::string> feature_names;
    std::vector<double> phi_dice;
    std::vector<std::int64_t> change_counts;
    double epsilon = kDefaultEpsilon;
    std::int64_t n_total_cf = 0;
};

/// Epsilon applies to raw feature units for continuous features, unlike the
/// range-relative tau used by flex scoring. Discrete features change on
/// exact inequality regardless of epsilon.
inline DiceResult dice_importance(const std::vector<CounterfactualSet>& cfsets, const Schema& schema,
                                  double epsilon = kDefaultEpsilon) {
    if (cfsets.empty()) throw ConfigError("dice_importance: no counterfactual sets");
    if (!(epsilon > 0.0)) throw ConfigError("dice_importance: epsilon must be > 0");

    DiceResult res;
    res.epsilon = epsilon;
    res.feature_names.reserve(schema.size());
    for (const auto& f : schema.features) res.feature_names.push_back(f.name);
    res.change_counts.assign(schema.size(), 0);

    for (const auto& cs : cfsets) {
        if (cs.factual.size() != schema.size()) throw ConfigError("dice_importance: schema mismatch");
        for (const auto& cf : cs.counterfactuals) {
            ++res.n_total_cf;
            for (std::size_t j = 0; j < schema.size(); ++j) {
                const bool changed = schema.at(j).is_discrete()
                                         ? cf[j] != cs.factual[j]
                                         : std::abs(cf[j] - cs.factual[j]) > epsilon;
                if (changed) ++res.change_counts[j];
            }
        }
    }
    if (res.n_total_cf == 0) throw ConfigError("dice_importance: zero total counterfactuals");

    res.phi_dice.resize(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j)
        res.phi_dice[j] = static_cast<double>(res.change_counts[j]) / static_cast<double>(res.n_total_cf);
    return res;
}

/// Per-feature outcome of the flex-vs-dice equivalence condition.
struct EquivalenceEntry {
    std::string feature;
    double phi_flex = 0.0;
    double phi_dice = 0.0;
    bool equal = false;
};

struct EquivalenceReport {
    bool equivalent = false;
    bool equal_n_cf = false;
    std::vector<EquivalenceEntry> entries;
    std::string note;
};

namespace detail {

inline __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        const __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

// Exact comparison of the two aggregation formulas on integer change counts:
// mean over instances of c_i/n_i versus pooled sum(C)/N_total. Counts are
// small, so 128-bit fractions with gcd reduction never overflow at test scale.
inline bool frequencies_equal_exact(const std::vector<int>& counts, const std::vector<int>& n_cf,
                                    std::int64_t pooled_count, std::int64_t n_total) {
    __int128 lhs_num = 0;
    __int128 lhs_den = 1;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        // lhs += c_i / n_i
        lhs_num = lhs_num * n_cf[i] + static_cast<__int128>(counts[i]) * lhs_den;
        lhs_den *= n_cf[i];
        const __int128 g = gcd128(lhs_num, lhs_den);
        if (g > 1) {
            lhs_num /= g;
            lhs_den /= g;
        }
    }
    const auto n_s = static_cast<__int128>(counts.size());
    // (1/n_s) * lhs_num/lhs_den == pooled / n_total
    return lhs_num * n_total == n_s * static_cast<__int128>(pooled_count) * lhs_den;
}

}  // namespace detail

/// Checks the condition under which flex scoring and the pooled baseline
/// coincide: identical per-instance counterfactual counts and tau_j set to
/// epsilon / range(X_j). Comparison is exact, on the integer change counts.
inline EquivalenceReport equivalence_check(const std::vector<CounterfactualSet>& cfsets, const Schema& schema,
                                           double epsilon = kDefaultEpsilon) {
    if (cfsets.empty()) throw ConfigError("equivalence_check: no counterfactual sets");

    std::vector<double> taus(schema.size(), 0.0);
    for (std::size_t j = 0; j < schema.size(); ++j) {
        const FeatureSchema& f = schema.at(j);
        if (!f.is_discrete()) {
            if (!(f.range() > 0.0)) throw ConfigError("equivalence_check: feature '" + f.name + "' has zero range");
            taus[j] = epsilon / f.range();
        }
    }
    const ThresholdVector tau = ThresholdVector::from_values(taus);

    std::vector<InstanceFrequencies> per_instance;
    per_instance.reserve(cfsets.size());
    for (const auto& cs : cfsets) per_instance.push_back(instance_frequencies(cs, schema, tau));
    const FlexResult flex = aggregate(per_instance, schema);
    const DiceResult dice = dice_importance(cfsets, schema, epsilon);

    EquivalenceReport report;
    report.equal_n_cf = true;
    for (const auto& inst : per_instance)
        if (inst.n_cf != per_instance.front().n_cf) report.equal_n_cf = false;

    report.equivalent = true;
    for (std::size_t j = 0; j < schema.size(); ++j) {
        std::vector<int> counts(per_instance.size());
        std::vector<int> ncfs(per_instance.size());
        for (std::size_t i = 0; i < per_instance.size(); ++i) {
            counts[i] = per_instance[i].change_counts[j];
            ncfs[i] = per_instance[i].n_cf;
        }
        EquivalenceEntry entry;
        entry.feature = schema.at(j).name;
        entry.phi_flex = flex.features[j].phi_mean;
        entry.phi_dice = dice.phi_dice[j];
        entry.equal = detail::frequencies_equal_exact(counts, ncfs, dice.change_counts[j], dice.n_total_cf);
        if (!entry.equal) report.equivalent = false;
        report.entries.push_back(std::move(entry));
    }
    report.note = report.equal_n_cf
                      ? "per-instance counterfactual counts are identical"
                      : "per-instance counterfactual counts differ; the normalizations diverge";
    return report;
}

}  // namespace flexcf
