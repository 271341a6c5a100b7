#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "flexcf/common.hpp"
#include "flexcf/csv.hpp"
#include "flexcf/schema.hpp"

namespace flexcf {

/// One encoded row, aligned to schema order. Categorical and ordinal values
/// are vocabulary indices stored as exact small integers; continuous values
/// are in feature units.
using Instance = std::vector<double>;

/// Per-load diagnostics: rows dropped for missing cells or wrong arity.
struct LoadStats {
    std::size_t rows_loaded = 0;
    std::size_t rows_rejected = 0;
    std::vector<std::string> warnings;
};

/// Immutable encoded table. Splits share the parent's resolved schema.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::shared_ptr<const Schema> schema, std::vector<Instance> rows, std::vector<int> labels)
        : schema_(std::move(schema)), rows_(std::move(rows)), labels_(std::move(labels)) {
        if (rows_.size() != labels_.size()) throw DataError("dataset rows and labels differ in length");
    }

    const Schema& schema() const { return *schema_; }
    std::shared_ptr<const Schema> schema_ptr() const { return schema_; }
    std::size_t n_rows() const { return rows_.size(); }
    std::size_t n_features() const { return schema_->size(); }
    bool empty() const { return rows_.empty(); }
    const Instance& row(std::size_t i) const { return rows_.at(i); }
    int label(std::size_t i) const { return labels_.at(i); }
    const std::vector<Instance>& rows() const { return rows_; }
    const std::vector<int>& labels() const { return labels_; }

    /// Decodes row i back to its text/number form, one field per feature.
    std::vector<std::string> decode_row(std::size_t i) const {
        const Instance& x = rows_.at(i);
        std::vector<std::string> out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = decode_value(schema_->at(j), x[j]);
        return out;
    }

    static std::string decode_value(const FeatureSchema& f, double v) {
        if (f.is_discrete()) {
            const auto code = static_cast<std::size_t>(v);
            if (v < 0 || code >= f.categories.size() || static_cast<double>(code) != v)
                throw DataError("feature '" + f.name + "': code " + format_double(v) + " is outside its vocabulary");
            return f.categories[code];
        }
        return format_double(v);
    }

    /// Stable content hash over resolved schema, rows and labels.
    std::string fingerprint() const {
        std::uint64_t h = fnv1a64(schema_to_json(*schema_).dump());
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            for (double v : rows_[i]) h = fnv1a64(format_double(v) + ",", h);
            h = fnv1a64(std::to_string(labels_[i]) + ";", h);
        }
        return to_hex(h);
    }

private:
    std::shared_ptr<const Schema> schema_;
    std::vector<Instance> rows_;
    std::vector<int> labels_;
};

namespace detail {

inline int parse_label(const std::string& raw, const Schema& schema, std::size_t row_no) {
    if (!schema.label_classes.empty()) {
        if (raw == schema.label_classes[0]) return 0;
        if (raw == schema.label_classes[1]) return 1;
        throw DataError("non-binary label at row " + std::to_string(row_no) + ": '" + raw +
                        "' is not one of the declared classes");
    }
    if (raw == "0") return 0;
    if (raw == "1") return 1;
    throw DataError("non-binary label at row " + std::to_string(row_no) + ": '" + raw + "'");
}

inline std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return s.substr(b, e - b);
}

}  // namespace detail

/// Loads and encodes a CSV under a declared schema.
///
/// Vocabularies absent from the schema are inferred in first-appearance
/// order; categories unseen at declaration time are appended. Continuous
/// ranges are computed from data and widen any declared range; they never
/// reject a value. Rows with missing cells are dropped and counted.
inline Dataset load_csv(const std::string& path, const std::string& schema_path, LoadStats* stats = nullptr) {
    Schema schema = load_schema(schema_path);
    const auto raw = read_csv_file(path);
    if (raw.empty()) throw DataError("empty file: " + path);

    const auto& header = raw.front();
    std::unordered_map<std::string, std::size_t> column_pos;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = detail::trimmed(header[c]);
        if (column_pos.count(name)) throw DataError("duplicate column '" + name + "' in " + path);
        column_pos[name] = c;
    }
    for (const auto& [name, pos] : column_pos) {
        (void)pos;
        if (name != schema.label_name && schema.index_of(name) < 0)
            throw DataError("unknown column '" + name + "' in " + path);
    }
    std::vector<std::size_t> feature_col(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        auto it = column_pos.find(schema.features[j].name);
        if (it == column_pos.end())
            throw DataError("column '" + schema.features[j].name + "' declared in schema but missing from " + path);
        feature_col[j] = it->second;
    }
    auto label_it = column_pos.find(schema.label_name);
    if (label_it == column_pos.end()) throw DataError("label column '" + schema.label_name + "' missing from " + path);
    const std::size_t label_col = label_it->second;

    LoadStats local_stats;
    LoadStats& st = stats ? *stats : local_stats;

    std::vector<bool> range_declared(schema.size(), false);
    std::vector<bool> range_seen(schema.size(), false);
    for (std::size_t j = 0; j < schema.size(); ++j)
        range_declared[j] = !schema.features[j].is_discrete() && schema.features[j].range() > 0.0;

    std::vector<Instance> rows;
    std::vector<int> labels;
    rows.reserve(raw.size() - 1);
    for (std::size_t r = 1; r < raw.size(); ++r) {
        const auto& cells = raw[r];
        if (cells.size() != header.size()) {
            st.rows_rejected++;
            st.warnings.push_back("row " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                                  " cells, got " + std::to_string(cells.size()) + "; row dropped");
            continue;
        }
        bool missing = false;
        for (const auto& cell : cells)
            if (detail::trimmed(cell).empty()) missing = true;
        if (missing) {
            st.rows_rejected++;
            st.warnings.push_back("row " + std::to_string(r) + ": missing cell; row dropped");
            continue;
        }

        Instance x(schema.size());
        for (std::size_t j = 0; j < schema.size(); ++j) {
            FeatureSchema& f = schema.features[j];
            const std::string cell = detail::trimmed(cells[feature_col[j]]);
            if (f.is_discrete()) {
                int code = f.code_of(cell);
                if (code < 0) {
                    code = static_cast<int>(f.categories.size());
                    f.categories.push_back(cell);
                }
                x[j] = static_cast<double>(code);
            } else {
                double v;
                try {
                    v = parse_double(cell);
                } catch (const DataError&) {
                    throw DataError("unparsable continuous value in column '" + f.name + "' at row " +
                                    std::to_string(r) + ": '" + cell + "'");
                }
                x[j] = v;
                if (!range_declared[j] && !range_seen[j]) {
                    f.range_min = v;
                    f.range_max = v;
                    range_seen[j] = true;
                } else {
                    f.range_min = std::min(f.range_min, v);
                    f.range_max = std::max(f.range_max, v);
                }
            }
        }
        labels.push_back(detail::parse_label(detail::trimmed(cells[label_col]), schema, r));
        rows.push_back(std::move(x));
        st.rows_loaded++;
    }

    for (const auto& f : schema.features)
        if (f.is_discrete() && f.categories.size() < 2)
            throw DataError("feature '" + f.name + "' has fewer than 2 observed categories");

    return Dataset(std::make_shared<Schema>(std::move(schema)), std::move(rows), std::move(labels));
}

/// Deterministic seeded split into (train, test) of sizes (floor(n*f), rest).
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must be in (0, 1)");
    if (ds.empty()) throw ConfigError("cannot split an empty dataset");
    const std::size_t n = ds.n_rows();
    const auto n_train =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
    if (n_train == 0 || n_train == n) throw ConfigError("empty split: n=" + std::to_string(n) +
                                                        ", train_fraction=" + format_double(train_fraction));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<Instance> train_rows, test_rows;
    std::vector<int> train_labels, test_labels;
    train_rows.reserve(n_train);
    test_rows.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[i];
        if (i < n_train) {
            train_rows.push_back(ds.row(src));
            train_labels.push_back(ds.label(src));
        } else {
            test_rows.push_back(ds.row(src));
            test_labels.push_back(ds.label(src));
        }
    }
    return {Dataset(ds.schema_ptr(), std::move(train_rows), std::move(train_labels)),
            Dataset(ds.schema_ptr(), std::move(test_rows), std::move(test_labels))};
}

/// Writes a dataset back to decoded CSV (header + one row per instance).
inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header;
    for (const auto& f : ds.schema().features) header.push_back(f.name);
    header.push_back(ds.schema().label_name);
    rows.push_back(std::move(header));
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        auto fields = ds.decode_row(i);
        const int y = ds.label(i);
        if (!ds.schema().label_classes.empty())
            fields.push_back(ds.schema().label_classes[static_cast<std::size_t>(y)]);
        else
            fields.push_back(std::to_string(y));
        rows.push_back(std::move(fields));
    }
    write_csv_file(path, rows);
}

}  // namespace flexcf
