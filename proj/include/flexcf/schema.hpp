#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "flexcf/common.hpp"

namespace flexcf {

enum class FeatureKind { categorical, ordinal, continuous };

inline std::string to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::categorical: return "categorical";
        case FeatureKind::ordinal: return "ordinal";
        case FeatureKind::continuous: return "continuous";
    }
    return "?";
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "categorical") return FeatureKind::categorical;
    if (s == "ordinal") return FeatureKind::ordinal;
    if (s == "continuous") return FeatureKind::continuous;
    throw ConfigError("unknown feature kind: '" + s + "'");
}

/// Declaration of one feature column. Categorical and ordinal features carry
/// an ordered category vocabulary (codes are vocabulary indices); continuous
/// features carry a value range in feature units.
struct FeatureSchema {
    std::string name;
    FeatureKind kind = FeatureKind::categorical;
    std::vector<std::string> categories;
    double range_min = 0.0;
    double range_max = 0.0;
    bool immutable = false;

    bool is_discrete() const { return kind != FeatureKind::continuous; }
    double range() const { return range_max - range_min; }
    std::size_t n_categories() const { return categories.size(); }

    int code_of(const std::string& category) const {
        for (std::size_t i = 0; i < categories.size(); ++i)
            if (categories[i] == category) return static_cast<int>(i);
        return -1;
    }
};

/// Full table schema: feature columns in order plus the label column name.
/// Label classes map class 0 (desirable) and class 1 (undesirable) to their
/// text form; empty means labels are literal "0"/"1".
struct Schema {
    std::vector<FeatureSchema> features;
    std::string label_name = "label";
    std::vector<std::string> label_classes;

    std::size_t size() const { return features.size(); }
    const FeatureSchema& at(std::size_t j) const { return features.at(j); }

    int index_of(const std::string& name) const {
        for (std::size_t j = 0; j < features.size(); ++j)
            if (features[j].name == name) return static_cast<int>(j);
        return -1;
    }

    std::size_t require_index(const std::string& name) const {
        const int j = index_of(name);
        if (j < 0) throw ConfigError("unknown feature: '" + name + "'");
        return static_cast<std::size_t>(j);
    }

    bool has_continuous() const {
        for (const auto& f : features)
            if (f.kind == FeatureKind::continuous) return true;
        return false;
    }

    void validate() const {
        if (features.empty()) throw ConfigError("schema declares no features");
        for (const auto& f : features) {
            if (f.name.empty()) throw ConfigError("schema contains an unnamed feature");
            if (f.is_discrete()) {
                if (f.categories.size() < 2)
                    throw ConfigError("feature '" + f.name + "' needs at least 2 categories");
            } else if (!(f.range_max > f.range_min)) {
                throw ConfigError("feature '" + f.name + "' has empty range");
            }
        }
        if (!label_classes.empty() && label_classes.size() != 2)
            throw ConfigError("label must declare exactly 2 classes");
    }
};

namespace detail {

inline nlohmann::ordered_json feature_to_json(const FeatureSchema& f) {
    nlohmann::ordered_json col;
    col["name"] = f.name;
    col["role"] = "feature";
    col["kind"] = to_string(f.kind);
    if (f.is_discrete()) {
        col["categories"] = f.categories;
    } else {
        col["range"] = {f.range_min, f.range_max};
    }
    if (f.immutable) col["immutable"] = true;
    return col;
}

}  // namespace detail

/// Serializes a resolved schema back to the on-disk column-list form.
inline nlohmann::ordered_json schema_to_json(const Schema& schema) {
    nlohmann::ordered_json doc;
    doc["format"] = "flexcf-schema/1";
    auto cols = nlohmann::ordered_json::array();
    for (const auto& f : schema.features) cols.push_back(detail::feature_to_json(f));
    nlohmann::ordered_json label;
    label["name"] = schema.label_name;
    label["role"] = "label";
    if (!schema.label_classes.empty()) label["classes"] = schema.label_classes;
    cols.push_back(label);
    doc["columns"] = cols;
    return doc;
}

/// Parses the schema document. Declared vocabularies and ranges are optional;
/// missing ones are resolved from data at load time.
inline Schema parse_schema_json(const nlohmann::json& doc) {
    if (!doc.contains("columns") || !doc["columns"].is_array())
        throw ConfigError("schema file: missing 'columns' array");
    Schema schema;
    bool saw_label = false;
    for (const auto& col : doc["columns"]) {
        const std::string name = col.value("name", "");
        if (name.empty()) throw ConfigError("schema file: column without a name");
        const std::string role = col.value("role", "feature");
        if (role == "label") {
            if (saw_label) throw ConfigError("schema file: multiple label columns");
            saw_label = true;
            schema.label_name = name;
            if (col.contains("classes")) {
                schema.label_classes = col["classes"].get<std::vector<std::string>>();
                if (schema.label_classes.size() != 2)
                    throw ConfigError("schema file: label 'classes' must list exactly 2 values");
            }
            continue;
        }
        if (role != "feature") throw ConfigError("schema file: column '" + name + "' has unknown role '" + role + "'");
        FeatureSchema f;
        f.name = name;
        if (!col.contains("kind")) throw ConfigError("schema file: feature '" + name + "' is missing 'kind'");
        f.kind = feature_kind_from_string(col["kind"].get<std::string>());
        if (col.contains("categories")) {
            if (f.kind == FeatureKind::continuous)
                throw ConfigError("schema file: continuous feature '" + name + "' declares categories");
            f.categories = col["categories"].get<std::vector<std::string>>();
            if (f.categories.size() < 2)
                throw ConfigError("schema file: feature '" + name + "' needs at least 2 categories");
        }
        if (col.contains("range")) {
            if (f.kind != FeatureKind::continuous)
                throw ConfigError("schema file: discrete feature '" + name + "' declares a range");
            const auto& r = col["range"];
            if (!r.is_array() || r.size() != 2)
                throw ConfigError("schema file: feature '" + name + "' range must be [min, max]");
            f.range_min = r[0].get<double>();
            f.range_max = r[1].get<double>();
            if (!(f.range_max > f.range_min))
                throw ConfigError("schema file: feature '" + name + "' has empty range");
        }
        f.immutable = col.value("immutable", false);
        schema.features.push_back(std::move(f));
    }
    if (!saw_label) throw ConfigError("schema file: no label column declared");
    if (schema.features.empty()) throw ConfigError("schema file: no feature columns declared");
    return schema;
}

inline Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("schema file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_schema_json(doc);
}

}  // namespace flexcf
