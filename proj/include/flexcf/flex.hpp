#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flexcf/cfgen.hpp"
#include "flexcf/common.hpp"
#include "flexcf/dataset.hpp"
#include "flexcf/schema.hpp"

namespace flexcf {

inline constexpr double kDefaultTau = 0.05;

/// Per-feature change thresholds for continuous features, as fractions of
/// the feature range. Entries for discrete features are carried but unused.
struct ThresholdVector {
    std::vector<double> values;

    static ThresholdVector uniform(const Schema& schema, double tau = kDefaultTau) {
        check_tau(tau);
        ThresholdVector tv;
        tv.values.assign(schema.size(), tau);
        return tv;
    }

    static ThresholdVector from_values(std::vector<double> taus) {
        for (double t : taus) check_tau(t);
        return ThresholdVector{std::move(taus)};
    }

    double at(std::size_t j) const { return values.at(j); }
    bool operator==(const ThresholdVector&) const = default;

    static void check_tau(double tau) {
        if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1], got " + format_double(tau));
    }
};

/// Change indicator. Discrete features change on exact inequality; continuous
/// features change when |a - b| / range_j exceeds tau_j strictly.
inline int indicator(double a, double b, FeatureKind kind, double tau_j, double range_j) {
    if (kind != FeatureKind::continuous) return a != b ? 1 : 0;
    if (!(range_j > 0.0)) throw ConfigError("indicator: continuous feature requires range > 0");
    return std::abs(a - b) / range_j > tau_j ? 1 : 0;
}

/// Change frequencies of one factual's counterfactual set.
///
/// phi[j] = (changes counted) / n_cf and, for continuous features,
/// mu[j] = mean over counterfactuals of |delta| / range. The denominator is
/// the number of counterfactuals actually present. Integer change counts are
/// kept alongside so downstream checks can reason exactly.
struct InstanceFrequencies {
    int instance_index = -1;
    std::vector<double> phi;
    std::vector<double> mu;            // meaningful for continuous features only
    std::vector<int> change_counts;
    int n_cf = 0;
    ThresholdVector tau;
    std::string generator_name;
};

inline InstanceFrequencies instance_frequencies(const CounterfactualSet& cs, const Schema& schema,
                                                const ThresholdVector& tau) {
    if (cs.counterfactuals.empty()) throw ConfigError("instance_frequencies: empty counterfactual list");
    if (cs.factual.size() != schema.size()) throw ConfigError("instance_frequencies: schema mismatch");
    if (tau.values.size() != schema.size()) throw ConfigError("instance_frequencies: threshold vector mismatch");

    InstanceFrequencies out;
    out.instance_index = cs.factual_index;
    out.n_cf = static_cast<int>(cs.counterfactuals.size());
    out.tau = tau;
    out.generator_name = cs.generator_name;
    out.phi.assign(schema.size(), 0.0);
    out.mu.assign(schema.size(), 0.0);
    out.change_counts.assign(schema.size(), 0);

    const auto n = static_cast<double>(cs.counterfactuals.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        const FeatureSchema& f = schema.at(j);
        int changes = 0;
        double magnitude = 0.0;
        if (f.is_discrete()) {
            for (const auto& cf : cs.counterfactuals)
                if (cf[j] != cs.factual[j]) ++changes;
        } else {
            const double range = f.range();
            if (!(range > 0.0))
                throw ConfigError("feature '" + f.name + "' has zero range; cannot normalize changes");
            for (const auto& cf : cs.counterfactuals) {
                const double rel = std::abs(cf[j] - cs.factual[j]) / range;
                magnitude += rel;
                if (rel > tau.at(j)) ++changes;
            }
        }
        out.change_counts[j] = changes;
        out.phi[j] = static_cast<double>(changes) / n;
        if (!f.is_discrete()) out.mu[j] = magnitude / n;
    }
    return out;
}

/// Aggregated change-frequency scores over a set of factual instances.
struct FeatureScore {
    std::string name;
    FeatureKind kind = FeatureKind::categorical;
    double phi_mean = 0.0;
    double phi_std = 0.0;  // population standard deviation over instances
    double mu = 0.0;       // continuous features only
};

struct FlexResult {
    std::vector<FeatureScore> features;
    int n_instances = 0;
    ThresholdVector tau_used;
    std::string generator_name;

    std::vector<double> phi() const {
        std::vector<double> out;
        out.reserve(features.size());
        for (const auto& f : features) out.push_back(f.phi_mean);
        return out;
    }
};

/// Mean and population standard deviation of per-instance frequencies, plus
/// mean relative magnitude for continuous features. All inputs must share
/// one threshold vector.
inline FlexResult aggregate(const std::vector<InstanceFrequencies>& per_instance, const Schema& schema) {
    if (per_instance.empty()) throw ConfigError("aggregate: no instances");
    for (const auto& inst : per_instance) {
        if (inst.phi.size() != schema.size()) throw ConfigError("aggregate: schema mismatch");
        if (!(inst.tau == per_instance.front().tau))
            throw ConfigError("aggregate: mixed threshold vectors are not comparable");
    }

    FlexResult res;
    res.n_instances = static_cast<int>(per_instance.size());
    res.tau_used = per_instance.front().tau;
    res.generator_name = per_instance.front().generator_name;
    for (const auto& inst : per_instance)
        if (inst.generator_name != res.generator_name) res.generator_name = "mixed";

    const auto n = static_cast<double>(per_instance.size());
    res.features.resize(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        FeatureScore& fs = res.features[j];
        fs.name = schema.at(j).name;
        fs.kind = schema.at(j).kind;

        double sum = 0.0;
        for (const auto& inst : per_instance) sum += inst.phi[j];
        fs.phi_mean = sum / n;

        double sq = 0.0;
        for (const auto& inst : per_instance) {
            const double d = inst.phi[j] - fs.phi_mean;
            sq += d * d;
        }
        fs.phi_std = std::sqrt(sq / n);

        if (!schema.at(j).is_discrete()) {
            double mu_sum = 0.0;
            for (const auto& inst : per_instance) mu_sum += inst.mu[j];
            fs.mu = mu_sum / n;
        }
    }
    return res;
}

/// Full scoring pass: per-instance frequencies (parallel) then aggregation.
inline FlexResult flex_score(const std::vector<CounterfactualSet>& cfsets, const Schema& schema,
                             const ThresholdVector& tau, unsigned threads = 1) {
    if (cfsets.empty()) throw ConfigError("flex_score: no counterfactual sets");
    std::vector<InstanceFrequencies> per_instance(cfsets.size());
    parallel_for(cfsets.size(), threads,
                 [&](std::size_t i) { per_instance[i] = instance_frequencies(cfsets[i], schema, tau); });
    return aggregate(per_instance, schema);
}

/// Rescoring of fixed counterfactual sets across a threshold sweep. The same
/// sets are reused for every tau; nothing is regenerated.
inline std::vector<std::pair<double, FlexResult>> tau_sweep(const std::vector<CounterfactualSet>& cfsets,
                                                            const Schema& schema,
                                                            const std::vector<double>& taus,
                                                            unsigned threads = 1) {
    if (taus.empty()) throw ConfigError("tau_sweep: empty threshold list");
    for (std::size_t i = 0; i + 1 < taus.size(); ++i)
        if (taus[i] > taus[i + 1]) throw ConfigError("tau_sweep: thresholds must be sorted ascending");

    std::vector<std::pair<double, FlexResult>> out;
    out.reserve(taus.size());
    for (double t : taus)
        out.emplace_back(t, flex_score(cfsets, schema, ThresholdVector::uniform(schema, t), threads));
    return out;
}

}  // namespace flexcf
