#pragma once

#include <cmath>
#include <cstddef>

#include "flexcf/common.hpp"
#include "flexcf/dataset.hpp"
#include "flexcf/schema.hpp"

namespace flexcf {

namespace detail {

inline void check_same_schema(const Instance& x, const Instance& y, const Schema& schema) {
    if (x.size() != schema.size() || y.size() != schema.size())
        throw ConfigError("schema mismatch: instances have " + std::to_string(x.size()) + " and " +
                          std::to_string(y.size()) + " values, schema has " + std::to_string(schema.size()));
}

}  // namespace detail

/// Number of features whose values differ exactly. Continuous features are
/// compared exactly too, which is only meaningful when values are shared
/// codes; prefer mixed_distance on schemas with continuous features.
inline std::size_t hamming(const Instance& x, const Instance& y, const Schema& schema) {
    detail::check_same_schema(x, y, schema);
    std::size_t d = 0;
    for (std::size_t j = 0; j < schema.size(); ++j)
        if (x[j] != y[j]) ++d;
    return d;
}

/// Gower-style sum: discrete features contribute 1 when unequal, continuous
/// features contribute |delta| / range. Reduces to hamming on all-discrete
/// schemas.
inline double mixed_distance(const Instance& x, const Instance& y, const Schema& schema) {
    detail::check_same_schema(x, y, schema);
    double d = 0.0;
    for (std::size_t j = 0; j < schema.size(); ++j) {
        const FeatureSchema& f = schema.at(j);
        if (f.is_discrete()) {
            if (x[j] != y[j]) d += 1.0;
        } else {
            const double range = f.range();
            if (!(range > 0.0))
                throw ConfigError("feature '" + f.name + "' has zero range; mixed_distance undefined");
            d += std::abs(x[j] - y[j]) / range;
        }
    }
    return d;
}

}  // namespace flexcf
