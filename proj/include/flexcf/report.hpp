#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flexcf/baseline.hpp"
#include "flexcf/common.hpp"
#include "flexcf/csv.hpp"
#include "flexcf/flex.hpp"
#include "flexcf/regional.hpp"

namespace flexcf {

inline constexpr const char* kReportFormat = "flexcf-report/1";

using OrderedJson = nlohmann::ordered_json;

/// Competition ranking of features by score: equal scores share a rank and
/// the following ranks are skipped. Ties are listed in schema order.
struct RankingRow {
    int rank = 0;
    std::string feature;
    double score = 0.0;
    double std_dev = 0.0;
    std::string method;
};

struct RankingTable {
    std::vector<RankingRow> rows;
    std::vector<std::pair<std::string, std::string>> metadata;  // insertion ordered
};

namespace detail {

inline RankingTable rank_scores(const std::vector<std::string>& names, const std::vector<double>& scores,
                                const std::vector<double>& stds, const std::string& method) {
    if (names.empty()) throw ConfigError("rank: empty result");
    std::vector<std::size_t> order(names.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    RankingTable table;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        RankingRow row;
        row.feature = names[order[pos]];
        row.score = scores[order[pos]];
        row.std_dev = stds.empty() ? 0.0 : stds[order[pos]];
        row.method = method;
        if (pos > 0 && scores[order[pos]] == scores[order[pos - 1]])
            row.rank = table.rows.back().rank;
        else
            row.rank = static_cast<int>(pos) + 1;
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace detail

inline RankingTable rank(const FlexResult& result) {
    std::vector<std::string> names;
    std::vector<double> scores, stds;
    for (const auto& f : result.features) {
        names.push_back(f.name);
        scores.push_back(f.phi_mean);
        stds.push_back(f.phi_std);
    }
    auto table = detail::rank_scores(names, scores, stds, "flex");
    table.metadata.emplace_back("method", "flex");
    table.metadata.emplace_back("generator", result.generator_name);
    table.metadata.emplace_back("n_instances", std::to_string(result.n_instances));
    return table;
}

inline RankingTable rank(const DiceResult& result) {
    if (result.feature_names.empty()) throw ConfigError("rank: empty result");
    auto table = detail::rank_scores(result.feature_names, result.phi_dice, {}, "dice");
    table.metadata.emplace_back("method", "dice");
    table.metadata.emplace_back("epsilon", format_double(result.epsilon));
    table.metadata.emplace_back("n_total_cf", std::to_string(result.n_total_cf));
    return table;
}

/// Feature-aligned comparison of ranking tables: per-feature rank deltas and
/// pairwise Spearman rank correlation (fractional ranks for ties).
struct ComparisonDoc {
    std::vector<std::string> methods;
    struct Row {
        std::string feature;
        std::vector<int> ranks;
        std::vector<double> scores;
    };
    std::vector<Row> rows;
    struct Pair {
        std::string method_a, method_b;
        double spearman = 0.0;
        std::vector<int> rank_deltas;  // rank_a - rank_b, aligned to rows
    };
    std::vector<Pair> pairs;
};

namespace detail {

inline std::vector<double> fractional_ranks(const std::vector<double>& scores) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t pos = 0;
    while (pos < n) {
        std::size_t end = pos;
        while (end + 1 < n && scores[order[end + 1]] == scores[order[pos]]) ++end;
        const double shared = (static_cast<double>(pos) + static_cast<double>(end)) / 2.0 + 1.0;
        for (std::size_t i = pos; i <= end; ++i) ranks[order[i]] = shared;
        pos = end + 1;
    }
    return ranks;
}

inline double pearson_of(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(va > 0.0) || !(vb > 0.0)) throw ConfigError("spearman: constant ranking");
    return cov / (std::sqrt(va) * std::sqrt(vb));
}

}  // namespace detail

inline ComparisonDoc compare(const std::vector<RankingTable>& tables) {
    if (tables.size() < 2) throw ConfigError("compare: need at least 2 ranking tables");

    ComparisonDoc doc;
    std::vector<std::string> features;
    for (const auto& row : tables.front().rows) features.push_back(row.feature);
    std::sort(features.begin(), features.end());

    std::vector<std::map<std::string, std::pair<int, double>>> by_feature(tables.size());
    for (std::size_t t = 0; t < tables.size(); ++t) {
        std::vector<std::string> names;
        for (const auto& row : tables[t].rows) {
            by_feature[t][row.feature] = {row.rank, row.score};
            names.push_back(row.feature);
        }
        std::sort(names.begin(), names.end());
        if (names != features) throw ConfigError("compare: ranking tables cover different feature sets");
        doc.methods.push_back(tables[t].rows.front().method);
    }

    // Rows keep the first table's (ranked) order.
    for (const auto& lead : tables.front().rows) {
        ComparisonDoc::Row row;
        row.feature = lead.feature;
        for (std::size_t t = 0; t < tables.size(); ++t) {
            const auto& [r, s] = by_feature[t].at(lead.feature);
            row.ranks.push_back(r);
            row.scores.push_back(s);
        }
        doc.rows.push_back(std::move(row));
    }

    for (std::size_t a = 0; a < tables.size(); ++a) {
        for (std::size_t b = a + 1; b < tables.size(); ++b) {
            ComparisonDoc::Pair pair;
            pair.method_a = doc.methods[a];
            pair.method_b = doc.methods[b];
            std::vector<double> scores_a, scores_b;
            for (const auto& row : doc.rows) {
                scores_a.push_back(row.scores[a]);
                scores_b.push_back(row.scores[b]);
                pair.rank_deltas.push_back(row.ranks[a] - row.ranks[b]);
            }
            pair.spearman = detail::pearson_of(detail::fractional_ranks(scores_a),
                                               detail::fractional_ranks(scores_b));
            doc.pairs.push_back(std::move(pair));
        }
    }
    return doc;
}

// ---------------------------------------------------------------------------
// JSON forms. Key order is fixed; doubles serialize as shortest round-trip
// decimals, so identical values give identical bytes.

inline OrderedJson to_json(const FlexResult& result) {
    OrderedJson doc;
    doc["format"] = kReportFormat;
    doc["type"] = "flex_result";
    doc["generator"] = result.generator_name;
    doc["n_instances"] = result.n_instances;
    doc["tau"] = result.tau_used.values;
    auto features = OrderedJson::array();
    std::vector<std::size_t> order(result.features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (result.features[a].phi_mean != result.features[b].phi_mean)
            return result.features[a].phi_mean > result.features[b].phi_mean;
        return a < b;
    });
    std::vector<int> ranks(result.features.size(), 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (pos > 0 && result.features[order[pos]].phi_mean == result.features[order[pos - 1]].phi_mean)
            ranks[order[pos]] = ranks[order[pos - 1]];
        else
            ranks[order[pos]] = static_cast<int>(pos) + 1;
    }
    for (std::size_t j = 0; j < result.features.size(); ++j) {
        const auto& f = result.features[j];
        OrderedJson fj;
        fj["name"] = f.name;
        fj["kind"] = to_string(f.kind);
        fj["phi_mean"] = f.phi_mean;
        fj["phi_std"] = f.phi_std;
        if (f.kind == FeatureKind::continuous) fj["mu"] = f.mu;
        fj["rank"] = ranks[j];
        features.push_back(std::move(fj));
    }
    doc["features"] = std::move(features);
    return doc;
}

inline OrderedJson to_json(const DiceResult& result) {
    OrderedJson doc;
    doc["format"] = kReportFormat;
    doc["type"] = "dice_result";
    doc["method"] = "dice";
    doc["epsilon"] = result.epsilon;
    doc["n_total_cf"] = result.n_total_cf;
    auto features = OrderedJson::array();
    for (std::size_t j = 0; j < result.feature_names.size(); ++j) {
        OrderedJson fj;
        fj["name"] = result.feature_names[j];
        fj["phi_dice"] = result.phi_dice[j];
        fj["change_count"] = result.change_counts[j];
        features.push_back(std::move(fj));
    }
    doc["features"] = std::move(features);
    return doc;
}

inline OrderedJson to_json(const RankingTable& table) {
    OrderedJson doc;
    doc["format"] = kReportFormat;
    doc["type"] = "ranking";
    OrderedJson meta;
    for (const auto& [k, v] : table.metadata) meta[k] = v;
    doc["metadata"] = std::move(meta);
    auto rows = OrderedJson::array();
    for (const auto& row : table.rows) {
        OrderedJson rj;
        rj["rank"] = row.rank;
        rj["feature"] = row.feature;
        rj["score"] = row.score;
        rj["std"] = row.std_dev;
        rj["method"] = row.method;
        rows.push_back(std::move(rj));
    }
    doc["rows"] = std::move(rows);
    return doc;
}

inline OrderedJson to_json(const ComparisonDoc& doc_in) {
    OrderedJson doc;
    doc["format"] = kReportFormat;
    doc["type"] = "comparison";
    doc["methods"] = doc_in.methods;
    auto rows = OrderedJson::array();
    for (const auto& row : doc_in.rows) {
        OrderedJson rj;
        rj["feature"] = row.feature;
        rj["ranks"] = row.ranks;
        rj["scores"] = row.scores;
        rows.push_back(std::move(rj));
    }
    doc["rows"] = std::move(rows);
    auto pairs = OrderedJson::array();
    for (const auto& pair : doc_in.pairs) {
        OrderedJson pj;
        pj["method_a"] = pair.method_a;
        pj["method_b"] = pair.method_b;
        pj["spearman"] = pair.spearman;
        pj["rank_deltas"] = pair.rank_deltas;
        pairs.push_back(std::move(pj));
    }
    doc["pairs"] = std::move(pairs);
    return doc;
}

inline OrderedJson to_json(const EquivalenceReport& report) {
    OrderedJson doc;
    doc["format"] = kReportFormat;
    doc["type"] = "equivalence";
    doc["equivalent"] = report.equivalent;
    doc["equal_n_cf"] = report.equal_n_cf;
    doc["note"] = report.note;
    auto entries = OrderedJson::array();
    for (const auto& e : report.entries) {
        OrderedJson ej;
        ej["feature"] = e.feature;
        ej["phi_flex"] = e.phi_flex;
        ej["phi_dice"] = e.phi_dice;
        ej["equal"] = e.equal;
        entries.push_back(std::move(ej));
    }
    doc["features"] = std::move(entries);
    return doc;
}

inline OrderedJson to_json(const CorrelationReport& report) {
    OrderedJson doc;
    if (report.r)
        doc["r"] = *report.r;
    else
        doc["r"] = "undefined";
    doc["mean_regional"] = report.mean_regional;
    doc["mean_global"] = report.mean_global;
    auto entries = OrderedJson::array();
    for (const auto& e : report.entries) {
        OrderedJson ej;
        ej["feature"] = e.feature;
        ej["f_region"] = e.f_region;
        ej["f_global"] = e.f_global;
        ej["quadrant"] = std::string(1, e.quadrant);
        ej["consistency"] = e.consistency;
        entries.push_back(std::move(ej));
    }
    doc["features"] = std::move(entries);
    return doc;
}

// ---------------------------------------------------------------------------
// CSV mirrors (full precision; the CLI's console tables round for display).

inline std::vector<std::vector<std::string>> to_csv_rows(const RankingTable& table) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"rank", "feature", "score", "std", "method"});
    for (const auto& row : table.rows)
        rows.push_back({std::to_string(row.rank), row.feature, format_double(row.score),
                        format_double(row.std_dev), row.method});
    return rows;
}

inline std::vector<std::vector<std::string>> to_csv_rows(const FlexResult& result) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"feature", "kind", "phi_mean", "phi_std", "mu"});
    for (const auto& f : result.features)
        rows.push_back({f.name, to_string(f.kind), format_double(f.phi_mean), format_double(f.phi_std),
                        f.kind == FeatureKind::continuous ? format_double(f.mu) : ""});
    return rows;
}

inline std::vector<std::vector<std::string>> scatter_csv_rows(const CorrelationReport& report) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"feature", "f_global", "f_region", "quadrant"});
    for (const auto& e : report.entries)
        rows.push_back({e.feature, format_double(e.f_global), format_double(e.f_region),
                        std::string(1, e.quadrant)});
    return rows;
}

/// Writes a document deterministically: stable key order, fixed float forms,
/// UTF-8, trailing newline. Re-running on identical inputs is byte-identical.
inline void emit_json(const OrderedJson& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << doc.dump(2) << '\n';
}

inline void emit_csv(const std::vector<std::vector<std::string>>& rows, const std::string& path) {
    write_csv_file(path, rows);
}

}  // namespace flexcf
