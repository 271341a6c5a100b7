#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flexcf/common.hpp"
#include "flexcf/dataset.hpp"
#include "flexcf/distance.hpp"

namespace flexcf {

/// Binary classifier interface. Predictions must be a pure function of the
/// instance; implementations are immutable after construction.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual int predict(const Instance& x) const = 0;
    virtual std::vector<int> predict_batch(const std::vector<Instance>& xs) const {
        std::vector<int> out(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = predict(xs[i]);
        return out;
    }
    virtual std::string name() const = 0;
};

/// Axis-aligned decision tree node. Continuous splits send value <= threshold
/// left; categorical splits send codes in the left set left. feature == -1
/// marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::vector<std::uint8_t> left_set;  // indexed by category code
    int left = -1;
    int right = -1;
    int leaf_class = 0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    int predict(const Instance& x) const {
        int n = 0;
        for (;;) {
            const TreeNode& node = nodes[static_cast<std::size_t>(n)];
            if (node.feature < 0) return node.leaf_class;
            const double v = x[static_cast<std::size_t>(node.feature)];
            bool go_left;
            if (node.left_set.empty()) {
                go_left = v <= node.threshold;
            } else {
                const auto code = static_cast<std::size_t>(v);
                go_left = code < node.left_set.size() && node.left_set[code] != 0;
            }
            n = go_left ? node.left : node.right;
        }
    }
};

/// Bagged decision-tree ensemble: bootstrap per tree, sqrt(F) feature
/// subsampling per split, Gini criterion. Majority vote with ties to class 0.
class TreeEnsembleModel : public Predictor {
public:
    TreeEnsembleModel(std::vector<DecisionTree> trees, int max_depth, std::uint64_t seed)
        : trees_(std::move(trees)), max_depth_(max_depth), seed_(seed) {}

    int predict(const Instance& x) const override {
        std::size_t votes_one = 0;
        for (const auto& t : trees_)
            if (t.predict(x) == 1) ++votes_one;
        return votes_one * 2 > trees_.size() ? 1 : 0;
    }

    std::string name() const override { return "forest"; }
    std::size_t n_trees() const { return trees_.size(); }
    int max_depth() const { return max_depth_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }

    /// Canonical serialized form, byte-stable for identical models.
    std::string serialize() const {
        nlohmann::ordered_json doc;
        doc["model"] = "forest";
        doc["max_depth"] = max_depth_;
        doc["seed"] = seed_;
        auto trees = nlohmann::ordered_json::array();
        for (const auto& t : trees_) {
            auto nodes = nlohmann::ordered_json::array();
            for (const auto& n : t.nodes) {
                nlohmann::ordered_json nj;
                nj["feature"] = n.feature;
                if (n.feature >= 0) {
                    if (n.left_set.empty())
                        nj["threshold"] = n.threshold;
                    else
                        nj["left_set"] = n.left_set;
                    nj["left"] = n.left;
                    nj["right"] = n.right;
                } else {
                    nj["class"] = n.leaf_class;
                }
                nodes.push_back(std::move(nj));
            }
            trees.push_back(std::move(nodes));
        }
        doc["trees"] = std::move(trees);
        return doc.dump();
    }

private:
    std::vector<DecisionTree> trees_;
    int max_depth_;
    std::uint64_t seed_;
};

namespace detail {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    std::vector<std::uint8_t> left_set;
    double gain = 0.0;
};

inline double gini(std::size_t n_one, std::size_t n_total) {
    if (n_total == 0) return 0.0;
    const double p = static_cast<double>(n_one) / static_cast<double>(n_total);
    return 2.0 * p * (1.0 - p);
}

inline double weighted_child_impurity(std::size_t left_one, std::size_t left_n, std::size_t right_one,
                                      std::size_t right_n) {
    const auto total = static_cast<double>(left_n + right_n);
    return (static_cast<double>(left_n) * gini(left_one, left_n) +
            static_cast<double>(right_n) * gini(right_one, right_n)) /
           total;
}

class ForestBuilder {
public:
    ForestBuilder(const Dataset& train, int max_depth, Rng& rng)
        : train_(train), max_depth_(max_depth), rng_(rng) {
        n_features_per_split_ = static_cast<std::size_t>(
            std::ceil(std::sqrt(static_cast<double>(train.n_features()))));
    }

    DecisionTree build(const std::vector<std::size_t>& sample) {
        DecisionTree tree;
        grow(tree, sample, 0);
        return tree;
    }

private:
    int grow(DecisionTree& tree, const std::vector<std::size_t>& rows, int depth) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        std::size_t n_one = 0;
        for (std::size_t r : rows)
            if (train_.label(r) == 1) ++n_one;
        const int majority = n_one * 2 > rows.size() ? 1 : 0;

        if (depth >= max_depth_ || rows.size() < 2 || n_one == 0 || n_one == rows.size()) {
            tree.nodes[static_cast<std::size_t>(node_id)].leaf_class = majority;
            return node_id;
        }

        SplitChoice best = choose_split(rows, n_one);
        if (!best.found) {
            tree.nodes[static_cast<std::size_t>(node_id)].leaf_class = majority;
            return node_id;
        }

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            const double v = train_.row(r)[static_cast<std::size_t>(best.feature)];
            bool go_left;
            if (best.left_set.empty()) {
                go_left = v <= best.threshold;
            } else {
                const auto code = static_cast<std::size_t>(v);
                go_left = code < best.left_set.size() && best.left_set[code] != 0;
            }
            (go_left ? left_rows : right_rows).push_back(r);
        }

        const int left_id = grow(tree, left_rows, depth + 1);
        const int right_id = grow(tree, right_rows, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left_set = std::move(best.left_set);
        node.left = left_id;
        node.right = right_id;
        return node_id;
    }

    SplitChoice choose_split(const std::vector<std::size_t>& rows, std::size_t n_one) {
        const double parent_impurity = gini(n_one, rows.size());
        SplitChoice best;
        auto candidates = rng_.sample_without_replacement(train_.n_features(), n_features_per_split_);
        std::sort(candidates.begin(), candidates.end());
        for (std::size_t j : candidates) {
            const FeatureSchema& f = train_.schema().at(j);
            SplitChoice cand = f.is_discrete() ? best_categorical_split(rows, j, n_one)
                                               : best_continuous_split(rows, j, n_one);
            if (!cand.found) continue;
            cand.gain = parent_impurity - cand.gain;
            if (cand.gain > 1e-12 && (!best.found || cand.gain > best.gain)) best = std::move(cand);
        }
        return best;
    }

    SplitChoice best_continuous_split(const std::vector<std::size_t>& rows, std::size_t j, std::size_t n_one) {
        std::vector<std::pair<double, int>> values;
        values.reserve(rows.size());
        for (std::size_t r : rows) values.emplace_back(train_.row(r)[j], train_.label(r));
        std::sort(values.begin(), values.end());

        SplitChoice best;
        std::size_t left_n = 0, left_one = 0;
        double best_impurity = 0.0;
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            ++left_n;
            if (values[i].second == 1) ++left_one;
            if (values[i].first == values[i + 1].first) continue;
            const double impurity =
                weighted_child_impurity(left_one, left_n, n_one - left_one, values.size() - left_n);
            if (!best.found || impurity < best_impurity) {
                best.found = true;
                best.feature = static_cast<int>(j);
                best.threshold = values[i].first + (values[i + 1].first - values[i].first) / 2.0;
                best_impurity = impurity;
            }
        }
        best.gain = best_impurity;
        return best;
    }

    // Orders categories by class-1 share and scans prefix splits, which is
    // optimal for binary Gini.
    SplitChoice best_categorical_split(const std::vector<std::size_t>& rows, std::size_t j, std::size_t n_one) {
        const std::size_t n_cat = train_.schema().at(j).n_categories();
        std::vector<std::size_t> count(n_cat, 0), count_one(n_cat, 0);
        for (std::size_t r : rows) {
            const auto code = static_cast<std::size_t>(train_.row(r)[j]);
            ++count[code];
            if (train_.label(r) == 1) ++count_one[code];
        }
        std::vector<std::size_t> present;
        for (std::size_t c = 0; c < n_cat; ++c)
            if (count[c] > 0) present.push_back(c);
        if (present.size() < 2) return {};

        std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
            const double pa = static_cast<double>(count_one[a]) / static_cast<double>(count[a]);
            const double pb = static_cast<double>(count_one[b]) / static_cast<double>(count[b]);
            if (pa != pb) return pa < pb;
            return a < b;
        });

        SplitChoice best;
        double best_impurity = 0.0;
        std::size_t left_n = 0, left_one = 0;
        for (std::size_t i = 0; i + 1 < present.size(); ++i) {
            left_n += count[present[i]];
            left_one += count_one[present[i]];
            const double impurity =
                weighted_child_impurity(left_one, left_n, n_one - left_one, rows.size() - left_n);
            if (!best.found || impurity < best_impurity) {
                best.found = true;
                best.feature = static_cast<int>(j);
                best.left_set.assign(n_cat, 0);
                for (std::size_t p = 0; p <= i; ++p) best.left_set[present[p]] = 1;
                best_impurity = impurity;
            }
        }
        best.gain = best_impurity;
        return best;
    }

    const Dataset& train_;
    int max_depth_;
    Rng& rng_;
    std::size_t n_features_per_split_ = 1;
};

}  // namespace detail

/// Trains the bagged tree ensemble. Fully determined by (train data,
/// hyperparameters, seed); tree t draws from Rng(seed + t).
inline std::shared_ptr<TreeEnsembleModel> train_forest(const Dataset& train, int n_trees, int max_depth,
                                                       std::uint64_t seed) {
    if (train.empty()) throw ConfigError("train_forest: empty training data");
    if (n_trees < 1) throw ConfigError("train_forest: n_trees must be positive");
    if (max_depth < 1) throw ConfigError("train_forest: max_depth must be positive");
    bool has_zero = false, has_one = false;
    for (std::size_t i = 0; i < train.n_rows(); ++i)
        (train.label(i) == 1 ? has_one : has_zero) = true;
    if (!has_zero || !has_one) throw DataError("train_forest: training data contains a single class");

    std::vector<DecisionTree> trees;
    trees.reserve(static_cast<std::size_t>(n_trees));
    const std::size_t n = train.n_rows();
    for (int t = 0; t < n_trees; ++t) {
        Rng rng(seed + static_cast<std::uint64_t>(t));
        std::vector<std::size_t> sample(n);
        for (std::size_t i = 0; i < n; ++i) sample[i] = static_cast<std::size_t>(rng.uniform_index(n));
        detail::ForestBuilder builder(train, max_depth, rng);
        trees.push_back(builder.build(sample));
    }
    return std::make_shared<TreeEnsembleModel>(std::move(trees), max_depth, seed);
}

/// k-nearest-neighbour classifier under mixed_distance. Distance ties break
/// toward lower row index, vote ties toward class 0.
class KnnClassifier : public Predictor {
public:
    KnnClassifier(Dataset train, std::size_t k) : train_(std::move(train)), k_(k) {
        if (k_ < 1 || k_ > train_.n_rows()) throw ConfigError("knn: k out of range [1, n_train]");
    }

    int predict(const Instance& x) const override {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(train_.n_rows());
        for (std::size_t i = 0; i < train_.n_rows(); ++i)
            dist.emplace_back(mixed_distance(x, train_.row(i), train_.schema()), i);
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
        std::size_t votes_one = 0;
        for (std::size_t i = 0; i < k_; ++i)
            if (train_.label(dist[i].second) == 1) ++votes_one;
        return votes_one * 2 > k_ ? 1 : 0;
    }

    std::string name() const override { return "knn"; }

private:
    Dataset train_;
    std::size_t k_;
};

inline std::shared_ptr<Predictor> train_knn(const Dataset& train, std::size_t k) {
    return std::make_shared<KnnClassifier>(train, k);
}

/// Training accuracy helper, used to sanity-check fitted models.
inline double accuracy(const Predictor& model, const Dataset& ds) {
    if (ds.empty()) throw ConfigError("accuracy: empty dataset");
    const auto preds = model.predict_batch(ds.rows());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == ds.label(i)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace flexcf
