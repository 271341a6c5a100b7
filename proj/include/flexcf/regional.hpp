#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flexcf/cfgen.hpp"
#include "flexcf/common.hpp"
#include "flexcf/dataset.hpp"
#include "flexcf/distance.hpp"
#include "flexcf/flex.hpp"
#include "flexcf/model.hpp"

namespace flexcf {

/// Conjunction of simple per-feature constraints used to select region
/// members: equality, set membership, or a closed interval.
struct FilterClause {
    enum class Kind { equals, in_set, between };
    std::size_t feature = 0;
    Kind kind = Kind::equals;
    std::vector<double> values;  // equals: 1 entry; in_set: member codes/values
    double lo = 0.0, hi = 0.0;   // between
};

struct Filter {
    std::vector<FilterClause> clauses;

    bool matches(const Instance& x) const {
        for (const auto& c : clauses) {
            const double v = x.at(c.feature);
            switch (c.kind) {
                case FilterClause::Kind::equals:
                    if (v != c.values[0]) return false;
                    break;
                case FilterClause::Kind::in_set: {
                    bool hit = false;
                    for (double m : c.values)
                        if (v == m) hit = true;
                    if (!hit) return false;
                    break;
                }
                case FilterClause::Kind::between:
                    if (v < c.lo || v > c.hi) return false;
                    break;
            }
        }
        return true;
    }

    bool empty() const { return clauses.empty(); }

    std::string describe(const Schema& schema) const {
        if (clauses.empty()) return "(none)";
        std::string out;
        for (std::size_t i = 0; i < clauses.size(); ++i) {
            const auto& c = clauses[i];
            const FeatureSchema& f = schema.at(c.feature);
            if (i) out += "; ";
            switch (c.kind) {
                case FilterClause::Kind::equals:
                    out += f.name + " = " + Dataset::decode_value(f, c.values[0]);
                    break;
                case FilterClause::Kind::in_set: {
                    out += f.name + " in {";
                    for (std::size_t m = 0; m < c.values.size(); ++m) {
                        if (m) out += ",";
                        out += Dataset::decode_value(f, c.values[m]);
                    }
                    out += "}";
                    break;
                }
                case FilterClause::Kind::between:
                    out += f.name + " between " + format_double(c.lo) + "," + format_double(c.hi);
                    break;
            }
        }
        return out;
    }
};

/// Parses "feature=value; feature in {a,b}; feature between lo,hi".
/// Clauses are AND-ed. Category values are given as text, continuous as
/// numbers.
inline Filter parse_filter(const std::string& text, const Schema& schema) {
    Filter filter;
    std::size_t pos = 0;
    auto trim = [](std::string s) {
        const std::size_t b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return std::string();
        const std::size_t e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    };
    auto encode = [&](const FeatureSchema& f, const std::string& raw) {
        if (f.is_discrete()) {
            const int code = f.code_of(raw);
            if (code < 0) throw ConfigError("filter: unknown category '" + raw + "' for feature '" + f.name + "'");
            return static_cast<double>(code);
        }
        return parse_double(raw);
    };
    while (pos < text.size()) {
        std::size_t end = text.find(';', pos);
        if (end == std::string::npos) end = text.size();
        const std::string clause_text = trim(text.substr(pos, end - pos));
        pos = end + 1;
        if (clause_text.empty()) continue;

        FilterClause clause;
        std::size_t sep;
        if ((sep = clause_text.find(" between ")) != std::string::npos) {
            const std::string name = trim(clause_text.substr(0, sep));
            clause.feature = schema.require_index(name);
            if (schema.at(clause.feature).is_discrete())
                throw ConfigError("filter: 'between' applies to continuous features only ('" + name + "')");
            const std::string rest = trim(clause_text.substr(sep + 9));
            const std::size_t comma = rest.find(',');
            if (comma == std::string::npos) throw ConfigError("filter: 'between' needs two comma-separated bounds");
            clause.kind = FilterClause::Kind::between;
            clause.lo = parse_double(trim(rest.substr(0, comma)));
            clause.hi = parse_double(trim(rest.substr(comma + 1)));
            if (clause.lo > clause.hi) throw ConfigError("filter: 'between' bounds out of order");
        } else if ((sep = clause_text.find(" in ")) != std::string::npos) {
            const std::string name = trim(clause_text.substr(0, sep));
            clause.feature = schema.require_index(name);
            std::string rest = trim(clause_text.substr(sep + 4));
            if (rest.size() < 2 || rest.front() != '{' || rest.back() != '}')
                throw ConfigError("filter: 'in' needs a {a,b,...} set");
            rest = rest.substr(1, rest.size() - 2);
            clause.kind = FilterClause::Kind::in_set;
            std::size_t p = 0;
            while (p <= rest.size()) {
                std::size_t comma = rest.find(',', p);
                if (comma == std::string::npos) comma = rest.size();
                const std::string item = trim(rest.substr(p, comma - p));
                if (!item.empty()) clause.values.push_back(encode(schema.at(clause.feature), item));
                p = comma + 1;
            }
            if (clause.values.empty()) throw ConfigError("filter: empty 'in' set");
        } else if ((sep = clause_text.find('=')) != std::string::npos) {
            const std::string name = trim(clause_text.substr(0, sep));
            clause.feature = schema.require_index(name);
            clause.kind = FilterClause::Kind::equals;
            clause.values.push_back(encode(schema.at(clause.feature), trim(clause_text.substr(sep + 1))));
        } else {
            throw ConfigError("filter: cannot parse clause '" + clause_text + "'");
        }
        filter.clauses.push_back(std::move(clause));
    }
    return filter;
}

enum class RegionDistance { hamming, mixed };

/// A query factual plus its nearest same-class, filter-satisfying
/// neighbours.
struct Region {
    std::size_t query_index = 0;
    std::vector<std::size_t> member_indices;  // query first, then by distance
    std::string selection_filter;
    RegionDistance distance_used = RegionDistance::hamming;
};

/// Selects a seeded random query among undesirable-predicted rows matching
/// the filter, then its n_members-1 nearest eligible neighbours. Distance is
/// hamming on all-discrete schemas and mixed otherwise, unless overridden.
/// Ties break toward the lower row index.
inline Region build_region(const Dataset& ds, const Predictor& model, const Filter& filter,
                           std::size_t n_members, std::uint64_t seed,
                           std::optional<RegionDistance> distance = std::nullopt) {
    if (n_members < 1) throw ConfigError("build_region: n_members must be >= 1");
    const Schema& schema = ds.schema();

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < ds.n_rows(); ++i)
        if (model.predict(ds.row(i)) == 1 && filter.matches(ds.row(i))) eligible.push_back(i);
    if (eligible.size() < n_members)
        throw DataError("build_region: only " + std::to_string(eligible.size()) +
                        " eligible instances for a region of " + std::to_string(n_members));

    Rng rng(seed);
    const std::size_t query = eligible[static_cast<std::size_t>(rng.uniform_index(eligible.size()))];

    Region region;
    region.query_index = query;
    region.selection_filter = filter.describe(schema);
    region.distance_used = distance.value_or(schema.has_continuous() ? RegionDistance::mixed
                                                                     : RegionDistance::hamming);

    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i : eligible) {
        if (i == query) continue;
        const double d = region.distance_used == RegionDistance::mixed
                             ? mixed_distance(ds.row(query), ds.row(i), schema)
                             : static_cast<double>(hamming(ds.row(query), ds.row(i), schema));
        ranked.emplace_back(d, i);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });

    region.member_indices.push_back(query);
    for (std::size_t i = 0; i < n_members - 1; ++i) region.member_indices.push_back(ranked[i].second);
    return region;
}

/// How the most common factual category of one feature fares in the pooled
/// counterfactuals: delta = (p_cf - p_orig) / p_orig.
struct ModeShiftRow {
    std::string feature;
    std::string factual_mode;
    double p_orig = 0.0;
    double p_cf = 0.0;
    double delta = 0.0;
};

struct ModeShiftResult {
    std::vector<ModeShiftRow> rows;
    std::vector<std::string> excluded_continuous;  // noted, not analyzed
};

/// Mode-shift table over a region's members and their counterfactual sets.
/// cfsets[i] must belong to the region's i-th member. p_cf pools all
/// counterfactual rows; mode ties break toward the lower category code.
inline ModeShiftResult mode_shift(const Region& region, const std::vector<CounterfactualSet>& cfsets,
                                  const Dataset& ds) {
    const Schema& schema = ds.schema();
    if (cfsets.size() != region.member_indices.size())
        throw ConfigError("mode_shift: counterfactual sets do not match region members");
    for (std::size_t i = 0; i < cfsets.size(); ++i)
        if (cfsets[i].factual != ds.row(region.member_indices[i]))
            throw ConfigError("mode_shift: counterfactual set " + std::to_string(i) +
                              " does not belong to region member " +
                              std::to_string(region.member_indices[i]));

    ModeShiftResult result;
    std::size_t total_cf = 0;
    for (const auto& cs : cfsets) total_cf += cs.counterfactuals.size();
    if (total_cf == 0) throw ConfigError("mode_shift: no counterfactuals");

    for (std::size_t j = 0; j < schema.size(); ++j) {
        const FeatureSchema& f = schema.at(j);
        if (!f.is_discrete()) {
            result.excluded_continuous.push_back(f.name);
            continue;
        }
        std::vector<std::size_t> counts(f.n_categories(), 0);
        for (std::size_t i : region.member_indices) ++counts[static_cast<std::size_t>(ds.row(i)[j])];
        std::size_t mode = 0;
        for (std::size_t c = 1; c < counts.size(); ++c)
            if (counts[c] > counts[mode]) mode = c;

        std::size_t cf_hits = 0;
        for (const auto& cs : cfsets)
            for (const auto& cf : cs.counterfactuals)
                if (static_cast<std::size_t>(cf[j]) == mode) ++cf_hits;

        ModeShiftRow row;
        row.feature = f.name;
        row.factual_mode = f.categories[mode];
        row.p_orig = static_cast<double>(counts[mode]) / static_cast<double>(region.member_indices.size());
        row.p_cf = static_cast<double>(cf_hits) / static_cast<double>(total_cf);
        row.delta = (row.p_cf - row.p_orig) / row.p_orig;
        result.rows.push_back(std::move(row));
    }
    return result;
}

/// Regional-vs-global placement of one feature. Quadrants split at the mean
/// frequencies: A = regionally high only, B = low on both, C = high on both,
/// D = globally high only. consistency is the distance to the y = x line.
struct QuadrantEntry {
    std::string feature;
    double f_region = 0.0;
    double f_global = 0.0;
    char quadrant = 'B';
    double consistency = 0.0;
};

struct CorrelationReport {
    std::optional<double> r;  // empty when undefined (constant input vector)
    double mean_regional = 0.0;
    double mean_global = 0.0;
    std::vector<QuadrantEntry> entries;

    std::string outcome() const { return r ? format_double(*r) : "undefined"; }
};

/// Pearson correlation between regional and global change frequencies, with
/// the quadrant classification of each feature. A constant vector makes r
/// undefined; it is reported as such, never coerced to 0.
inline CorrelationReport correlate(const FlexResult& regional, const FlexResult& global_result) {
    const std::size_t m = regional.features.size();
    if (m != global_result.features.size() || m < 2)
        throw ConfigError("correlate: results must share a feature set of >= 2 features");
    for (std::size_t j = 0; j < m; ++j)
        if (regional.features[j].name != global_result.features[j].name)
            throw ConfigError("correlate: feature mismatch at position " + std::to_string(j));

    CorrelationReport report;
    double sum_r = 0.0, sum_g = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        sum_r += regional.features[j].phi_mean;
        sum_g += global_result.features[j].phi_mean;
    }
    report.mean_regional = sum_r / static_cast<double>(m);
    report.mean_global = sum_g / static_cast<double>(m);

    double cov = 0.0, var_r = 0.0, var_g = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double dr = regional.features[j].phi_mean - report.mean_regional;
        const double dg = global_result.features[j].phi_mean - report.mean_global;
        cov += dr * dg;
        var_r += dr * dr;
        var_g += dg * dg;
    }
    if (var_r > 0.0 && var_g > 0.0) report.r = cov / (std::sqrt(var_r) * std::sqrt(var_g));

    for (std::size_t j = 0; j < m; ++j) {
        QuadrantEntry e;
        e.feature = regional.features[j].name;
        e.f_region = regional.features[j].phi_mean;
        e.f_global = global_result.features[j].phi_mean;
        const bool global_high = e.f_global > report.mean_global;
        const bool region_high = e.f_region > report.mean_regional;
        e.quadrant = global_high ? (region_high ? 'C' : 'D') : (region_high ? 'A' : 'B');
        e.consistency = std::abs(e.f_region - e.f_global) / std::sqrt(2.0);
        report.entries.push_back(std::move(e));
    }
    return report;
}

}  // namespace flexcf
