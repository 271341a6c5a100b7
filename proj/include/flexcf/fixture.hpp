#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "flexcf/common.hpp"
#include "flexcf/dataset.hpp"
#include "flexcf/schema.hpp"

namespace flexcf {

/// Synthetic-dataset description with a planted label rule, so ground-truth
/// feature relevance is known by construction.
struct FixtureFeature {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    int n_categories = 0;        // discrete kinds
    double min = 0.0, max = 1.0; // continuous kind
    bool immutable = false;
};

struct FixtureCondition {
    enum class Op { greater, less, in_categories };
    std::string feature;
    Op op = Op::greater;
    double value = 0.0;             // greater/less
    std::vector<int> categories;    // in_categories, as codes
};

struct FixtureSpec {
    std::vector<FixtureFeature> features;
    std::vector<FixtureCondition> rule;  // label = 1 iff all conditions hold
    std::size_t n_rows = 200;
};

namespace detail {

inline bool condition_holds(const FixtureCondition& c, double v) {
    switch (c.op) {
        case FixtureCondition::Op::greater: return v > c.value;
        case FixtureCondition::Op::less: return v < c.value;
        case FixtureCondition::Op::in_categories: {
            for (int code : c.categories)
                if (static_cast<double>(code) == v) return true;
            return false;
        }
    }
    return false;
}

}  // namespace detail

/// Builds a deterministic dataset from the spec: features drawn uniformly,
/// label 1 exactly where every rule condition holds.
inline Dataset synthesize_fixture(const FixtureSpec& spec, std::uint64_t seed) {
    if (spec.features.empty()) throw ConfigError("fixture spec declares no features");
    if (spec.n_rows == 0) throw ConfigError("fixture spec: n_rows must be positive");

    Schema schema;
    for (const auto& f : spec.features) {
        FeatureSchema fs;
        fs.name = f.name;
        fs.kind = f.kind;
        fs.immutable = f.immutable;
        if (f.kind == FeatureKind::continuous) {
            if (!(f.max > f.min)) throw ConfigError("fixture feature '" + f.name + "' has empty range");
            fs.range_min = f.min;
            fs.range_max = f.max;
        } else {
            if (f.n_categories < 2)
                throw ConfigError("fixture feature '" + f.name + "' needs at least 2 categories");
            for (int c = 0; c < f.n_categories; ++c)
                fs.categories.push_back(f.name + "_v" + std::to_string(c));
        }
        schema.features.push_back(std::move(fs));
    }
    schema.validate();

    std::vector<std::size_t> rule_feature(spec.rule.size());
    for (std::size_t r = 0; r < spec.rule.size(); ++r) {
        const int j = schema.index_of(spec.rule[r].feature);
        if (j < 0) throw ConfigError("fixture rule references undeclared feature '" + spec.rule[r].feature + "'");
        const FeatureSchema& f = schema.features[static_cast<std::size_t>(j)];
        if (spec.rule[r].op == FixtureCondition::Op::in_categories) {
            if (!f.is_discrete())
                throw ConfigError("fixture rule: category condition on continuous feature '" + f.name + "'");
            for (int code : spec.rule[r].categories)
                if (code < 0 || code >= static_cast<int>(f.n_categories()))
                    throw ConfigError("fixture rule: category code out of range for feature '" + f.name + "'");
        } else if (f.is_discrete()) {
            throw ConfigError("fixture rule: threshold condition on discrete feature '" + f.name + "'");
        }
        rule_feature[r] = static_cast<std::size_t>(j);
    }

    Rng rng(seed);
    std::vector<Instance> rows;
    std::vector<int> labels;
    rows.reserve(spec.n_rows);
    for (std::size_t i = 0; i < spec.n_rows; ++i) {
        Instance x(schema.size());
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const FeatureSchema& f = schema.features[j];
            if (f.is_discrete())
                x[j] = static_cast<double>(rng.uniform_index(f.n_categories()));
            else
                x[j] = rng.uniform_real(f.range_min, f.range_max);
        }
        bool positive = !spec.rule.empty();
        for (std::size_t r = 0; r < spec.rule.size(); ++r)
            positive = positive && detail::condition_holds(spec.rule[r], x[rule_feature[r]]);
        labels.push_back(positive ? 1 : 0);
        rows.push_back(std::move(x));
    }
    return Dataset(std::make_shared<Schema>(std::move(schema)), std::move(rows), std::move(labels));
}

/// Two continuous features; only x0 determines the label (x0 > 0.5).
inline FixtureSpec planted_fixture_spec(std::size_t n_rows = 200) {
    FixtureSpec spec;
    spec.features = {
        {"x0", FeatureKind::continuous, 0, 0.0, 1.0, false},
        {"x1", FeatureKind::continuous, 0, 0.0, 1.0, false},
    };
    spec.rule = {{"", FixtureCondition::Op::greater, 0.5, {}}};
    spec.rule[0].feature = "x0";
    spec.n_rows = n_rows;
    return spec;
}

/// Eleven categorical features shaped like a traffic-accident table
/// (category counts 5,3,7,8,6,4,9,10,13,9,20; age band and sex immutable).
/// Label is planted on accident_cause so one mutable feature is relevant.
inline FixtureSpec accident_fixture_spec(std::size_t n_rows = 2000) {
    FixtureSpec spec;
    spec.features = {
        {"age_band", FeatureKind::ordinal, 5, 0, 0, true},
        {"sex", FeatureKind::categorical, 3, 0, 0, true},
        {"driving_experience", FeatureKind::ordinal, 7, 0, 0, false},
        {"junction_type", FeatureKind::categorical, 8, 0, 0, false},
        {"road_surface", FeatureKind::categorical, 6, 0, 0, false},
        {"light_conditions", FeatureKind::categorical, 4, 0, 0, false},
        {"weather", FeatureKind::categorical, 9, 0, 0, false},
        {"collision_type", FeatureKind::categorical, 10, 0, 0, false},
        {"vehicle_movement", FeatureKind::categorical, 13, 0, 0, false},
        {"pedestrian_movement", FeatureKind::categorical, 9, 0, 0, false},
        {"accident_cause", FeatureKind::categorical, 20, 0, 0, false},
    };
    FixtureCondition cond;
    cond.feature = "accident_cause";
    cond.op = FixtureCondition::Op::in_categories;
    for (int c = 0; c < 10; ++c) cond.categories.push_back(c);
    spec.rule = {cond};
    spec.n_rows = n_rows;
    return spec;
}

/// Mixed-kind fixture shaped like a loan table: continuous amounts and a
/// planted credit-score rule, plus small categorical and ordinal features.
inline FixtureSpec loan_fixture_spec(std::size_t n_rows = 1000) {
    FixtureSpec spec;
    spec.features = {
        {"credit_score", FeatureKind::continuous, 0, 300.0, 900.0, false},
        {"income", FeatureKind::continuous, 0, 0.0, 10000.0, false},
        {"loan_amount", FeatureKind::continuous, 0, 0.0, 30000.0, false},
        {"education", FeatureKind::categorical, 2, 0, 0, false},
        {"self_employed", FeatureKind::categorical, 2, 0, 0, false},
        {"dependents", FeatureKind::ordinal, 6, 0, 0, true},
    };
    spec.rule = {{"", FixtureCondition::Op::less, 550.0, {}}};
    spec.rule[0].feature = "credit_score";
    spec.n_rows = n_rows;
    return spec;
}

inline FixtureSpec fixture_preset(const std::string& name, std::size_t n_rows) {
    if (name == "planted") return planted_fixture_spec(n_rows ? n_rows : 200);
    if (name == "accident") return accident_fixture_spec(n_rows ? n_rows : 2000);
    if (name == "loan") return loan_fixture_spec(n_rows ? n_rows : 1000);
    throw ConfigError("unknown fixture preset: '" + name + "' (expected planted|accident|loan)");
}

/// Fixture spec from JSON, mirroring the preset structure.
inline FixtureSpec parse_fixture_spec(const nlohmann::json& doc) {
    FixtureSpec spec;
    spec.n_rows = doc.value("n_rows", std::size_t{200});
    if (!doc.contains("features") || !doc["features"].is_array())
        throw ConfigError("fixture spec: missing 'features' array");
    for (const auto& fj : doc["features"]) {
        FixtureFeature f;
        f.name = fj.value("name", "");
        if (f.name.empty()) throw ConfigError("fixture spec: feature without a name");
        f.kind = feature_kind_from_string(fj.value("kind", "continuous"));
        f.n_categories = fj.value("n_categories", 0);
        f.min = fj.value("min", 0.0);
        f.max = fj.value("max", 1.0);
        f.immutable = fj.value("immutable", false);
        spec.features.push_back(std::move(f));
    }
    if (doc.contains("rule")) {
        for (const auto& cj : doc["rule"]) {
            FixtureCondition c;
            c.feature = cj.value("feature", "");
            const std::string op = cj.value("op", "");
            if (op == "greater") c.op = FixtureCondition::Op::greater;
            else if (op == "less") c.op = FixtureCondition::Op::less;
            else if (op == "in") c.op = FixtureCondition::Op::in_categories;
            else throw ConfigError("fixture spec: unknown rule op '" + op + "'");
            c.value = cj.value("value", 0.0);
            if (cj.contains("categories")) c.categories = cj["categories"].get<std::vector<int>>();
            spec.rule.push_back(std::move(c));
        }
    }
    return spec;
}

}  // namespace flexcf
