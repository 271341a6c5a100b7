#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flexcf/common.hpp"
#include "flexcf/dataset.hpp"
#include "flexcf/distance.hpp"
#include "flexcf/model.hpp"

namespace flexcf {

/// Valid counterfactuals for one factual instance. Every counterfactual's
/// predicted class differs from the factual's, and immutable features are
/// identical to the factual.
struct CounterfactualSet {
    Instance factual;
    int factual_index = -1;  // row in the source dataset, -1 when detached
    std::vector<Instance> counterfactuals;
    std::string generator_name;
    std::uint64_t seed = 0;
    std::vector<int> changed_feature_counts;  // exact-inequality count vs factual
    bool shortfall = false;                   // fewer than n_cf distinct ones found

    std::size_t size() const { return counterfactuals.size(); }
};

enum class GeneratorStrategy { nearest_unlike_neighbor, sparse_search };

inline std::string to_string(GeneratorStrategy s) {
    return s == GeneratorStrategy::nearest_unlike_neighbor ? "nun" : "sparse";
}

inline GeneratorStrategy generator_strategy_from_string(const std::string& s) {
    if (s == "nun" || s == "nearest_unlike_neighbor") return GeneratorStrategy::nearest_unlike_neighbor;
    if (s == "sparse" || s == "sparse_search") return GeneratorStrategy::sparse_search;
    throw ConfigError("unknown generator strategy: '" + s + "' (expected nun|sparse)");
}

struct GeneratorConfig {
    GeneratorStrategy strategy = GeneratorStrategy::nearest_unlike_neighbor;
    int n_cf = 10;
    std::optional<int> max_changes;  // sparse_search edit width; default all mutable
    int search_budget = 1000;        // candidate evaluations for sparse_search
    double sparsity_weight = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_cf < 1) throw ConfigError("generator: n_cf must be >= 1");
        if (search_budget < n_cf) throw ConfigError("generator: search_budget must be >= n_cf");
        if (max_changes && *max_changes < 1) throw ConfigError("generator: max_changes must be >= 1");
        if (sparsity_weight < 0.0) throw ConfigError("generator: sparsity_weight must be >= 0");
    }
};

namespace detail {

inline int exact_change_count(const Instance& a, const Instance& b) {
    int c = 0;
    for (std::size_t j = 0; j < a.size(); ++j)
        if (a[j] != b[j]) ++c;
    return c;
}

inline void finalize_counts(CounterfactualSet& cs) {
    cs.changed_feature_counts.clear();
    for (const auto& cf : cs.counterfactuals)
        cs.changed_feature_counts.push_back(exact_change_count(cs.factual, cf));
}

inline double per_feature_distance(const FeatureSchema& f, double a, double b) {
    if (f.is_discrete()) return a != b ? 1.0 : 0.0;
    const double range = f.range();
    if (!(range > 0.0)) throw ConfigError("feature '" + f.name + "' has zero range");
    return std::abs(a - b) / range;
}

}  // namespace detail

/// Case-based generation: ranks opposite-class pool rows by mixed distance,
/// then copies values from each of the n_cf nearest neighbours into the
/// factual, most-distant feature first, until the prediction flips.
/// Immutable features are never copied.
inline CounterfactualSet generate_nun(const Instance& factual, const Dataset& pool, const Predictor& model,
                                      const GeneratorConfig& cfg) {
    cfg.validate();
    const Schema& schema = pool.schema();
    if (model.predict(factual) != 1)
        throw GenerationError("factual is already predicted desirable; nothing to flip");

    std::vector<std::pair<double, std::size_t>> unlike;
    for (std::size_t i = 0; i < pool.n_rows(); ++i)
        if (model.predict(pool.row(i)) == 0) unlike.emplace_back(mixed_distance(factual, pool.row(i), schema), i);
    std::sort(unlike.begin(), unlike.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });

    CounterfactualSet cs;
    cs.factual = factual;
    cs.generator_name = to_string(GeneratorStrategy::nearest_unlike_neighbor);
    cs.seed = cfg.seed;

    const std::size_t n_neighbors = std::min<std::size_t>(unlike.size(), static_cast<std::size_t>(cfg.n_cf));
    for (std::size_t ni = 0; ni < n_neighbors; ++ni) {
        const Instance& neighbor = pool.row(unlike[ni].second);

        std::vector<std::pair<double, std::size_t>> copy_order;
        for (std::size_t j = 0; j < schema.size(); ++j) {
            if (schema.at(j).immutable) continue;
            const double d = detail::per_feature_distance(schema.at(j), factual[j], neighbor[j]);
            if (d > 0.0) copy_order.emplace_back(d, j);
        }
        std::sort(copy_order.begin(), copy_order.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });

        Instance candidate = factual;
        bool flipped = false;
        for (const auto& [d, j] : copy_order) {
            (void)d;
            candidate[j] = neighbor[j];
            if (model.predict(candidate) == 0) {
                flipped = true;
                break;
            }
        }
        if (!flipped) continue;
        if (std::find(cs.counterfactuals.begin(), cs.counterfactuals.end(), candidate) !=
            cs.counterfactuals.end())
            continue;
        cs.counterfactuals.push_back(std::move(candidate));
    }

    if (cs.counterfactuals.empty()) throw GenerationError("zero valid counterfactuals found");
    cs.shortfall = cs.counterfactuals.size() < static_cast<std::size_t>(cfg.n_cf);
    detail::finalize_counts(cs);
    return cs;
}

/// Randomized search: samples candidate edits on 1..max_changes mutable
/// features, keeps class-flipping candidates, and retains the n_cf best by
/// (changed-feature count + sparsity_weight * total normalized magnitude).
inline CounterfactualSet generate_sparse_search(const Instance& factual, const Dataset& train,
                                                const Predictor& model, const GeneratorConfig& cfg) {
    cfg.validate();
    const Schema& schema = train.schema();
    if (model.predict(factual) != 1)
        throw GenerationError("factual is already predicted desirable; nothing to flip");

    std::vector<std::size_t> mutable_features;
    for (std::size_t j = 0; j < schema.size(); ++j)
        if (!schema.at(j).immutable) mutable_features.push_back(j);
    if (mutable_features.empty()) throw GenerationError("zero valid counterfactuals found: all features immutable");

    const std::size_t max_changes =
        cfg.max_changes ? std::min<std::size_t>(static_cast<std::size_t>(*cfg.max_changes), mutable_features.size())
                        : mutable_features.size();

    struct Scored {
        double score;
        std::size_t order;  // discovery order, breaks score ties
        Instance candidate;
    };
    std::vector<Scored> kept;
    Rng rng(cfg.seed);

    for (int eval = 0; eval < cfg.search_budget; ++eval) {
        const std::size_t n_edit = 1 + static_cast<std::size_t>(rng.uniform_index(max_changes));
        auto picks = rng.sample_without_replacement(mutable_features.size(), n_edit);

        Instance candidate = factual;
        for (std::size_t p : picks) {
            const std::size_t j = mutable_features[p];
            const FeatureSchema& f = schema.at(j);
            if (f.is_discrete()) {
                const auto current = static_cast<std::size_t>(candidate[j]);
                std::size_t alt = static_cast<std::size_t>(rng.uniform_index(f.n_categories() - 1));
                if (alt >= current) ++alt;
                candidate[j] = static_cast<double>(alt);
            } else {
                if (!(f.range() > 0.0)) throw ConfigError("feature '" + f.name + "' has zero range");
                candidate[j] = rng.uniform_real(f.range_min, f.range_max);
            }
        }

        if (model.predict(candidate) != 0) continue;

        double magnitude = 0.0;
        int changed = 0;
        for (std::size_t j = 0; j < schema.size(); ++j) {
            if (candidate[j] == factual[j]) continue;
            ++changed;
            if (!schema.at(j).is_discrete())
                magnitude += std::abs(candidate[j] - factual[j]) / schema.at(j).range();
        }
        const double score = static_cast<double>(changed) + cfg.sparsity_weight * magnitude;

        bool duplicate = false;
        for (const auto& k : kept)
            if (k.candidate == candidate) duplicate = true;
        if (duplicate) continue;
        kept.push_back({score, kept.size(), std::move(candidate)});
    }

    if (kept.empty()) throw GenerationError("search budget exhausted with zero valid counterfactuals");
    std::sort(kept.begin(), kept.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.order < b.order;
    });
    if (kept.size() > static_cast<std::size_t>(cfg.n_cf)) kept.resize(static_cast<std::size_t>(cfg.n_cf));

    CounterfactualSet cs;
    cs.factual = factual;
    cs.generator_name = to_string(GeneratorStrategy::sparse_search);
    cs.seed = cfg.seed;
    for (auto& k : kept) cs.counterfactuals.push_back(std::move(k.candidate));
    cs.shortfall = cs.counterfactuals.size() < static_cast<std::size_t>(cfg.n_cf);
    detail::finalize_counts(cs);
    return cs;
}

inline CounterfactualSet generate(const Instance& factual, const Dataset& data, const Predictor& model,
                                  const GeneratorConfig& cfg) {
    return cfg.strategy == GeneratorStrategy::nearest_unlike_neighbor
               ? generate_nun(factual, data, model, cfg)
               : generate_sparse_search(factual, data, model, cfg);
}

/// Per-instance failure diagnostics from a batch run.
struct SkipRecord {
    std::size_t factual_position = 0;  // position in the input list
    int factual_index = -1;
    std::string reason;
};

struct BatchResult {
    std::vector<CounterfactualSet> sets;
    std::vector<SkipRecord> skips;
};

/// Maps a generator over factuals. Generation failures become skip records,
/// never batch failures. Instance p uses seed cfg.seed + p, so results do
/// not depend on the worker count.
inline BatchResult generate_batch(const std::vector<Instance>& factuals, const std::vector<int>& factual_indices,
                                  const Dataset& data, const Predictor& model, const GeneratorConfig& cfg,
                                  unsigned threads = 1) {
    cfg.validate();
    if (!factual_indices.empty() && factual_indices.size() != factuals.size())
        throw ConfigError("generate_batch: factual_indices length mismatch");

    struct Slot {
        bool ok = false;
        CounterfactualSet set;
        std::string error;
    };
    std::vector<Slot> slots(factuals.size());

    parallel_for(factuals.size(), threads, [&](std::size_t p) {
        GeneratorConfig local = cfg;
        local.seed = cfg.seed + p;
        try {
            slots[p].set = generate(factuals[p], data, model, local);
            slots[p].set.factual_index = factual_indices.empty() ? -1 : factual_indices[p];
            slots[p].ok = true;
        } catch (const GenerationError& e) {
            slots[p].error = e.what();
        }
    });

    BatchResult out;
    for (std::size_t p = 0; p < slots.size(); ++p) {
        if (slots[p].ok) {
            out.sets.push_back(std::move(slots[p].set));
        } else {
            out.skips.push_back({p, factual_indices.empty() ? -1 : factual_indices[p], slots[p].error});
        }
    }
    return out;
}

}  // namespace flexcf
