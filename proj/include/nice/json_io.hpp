#pragma once

// JSON conversions for values, instances and fitted statistics.

#include <string>
#include <vector>

#include <json.hpp>

#include "nice/error.hpp"
#include "nice/tabular.hpp"

namespace nicecf {

inline nlohmann::json value_to_json(const Value& v) {
    if (is_number(v)) return as_number(v);
    return as_label(v);
}

inline nlohmann::json instance_to_json(const Instance& x) {
    auto arr = nlohmann::json::array();
    for (const auto& v : x.values) arr.push_back(value_to_json(v));
    return arr;
}

/// Reads an instance from a JSON array, coercing each entry to its feature's kind.
inline Instance instance_from_json(const Schema& schema, const nlohmann::json& j) {
    if (!j.is_array() || j.size() != schema.size()) {
        throw EncodeError("instance must be a JSON array of " + std::to_string(schema.size()) + " values");
    }
    Instance x;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].is_categorical()) {
            if (!j[i].is_string()) throw EncodeError("feature '" + schema[i].name + "' expects a string");
            x.values.emplace_back(j[i].get<std::string>());
        } else {
            if (!j[i].is_number()) throw EncodeError("feature '" + schema[i].name + "' expects a number");
            x.values.emplace_back(j[i].get<double>());
        }
    }
    return x;
}

inline nlohmann::json stats_to_json(const Schema& stats) {
    auto arr = nlohmann::json::array();
    for (const auto& f : stats) {
        nlohmann::json o{{"name", f.name}, {"kind", std::string(to_string(f.kind))}};
        if (f.is_categorical()) {
            o["categories"] = f.categories;
            o["mode"] = f.mode;
        } else {
            o["min"] = f.min;
            o["max"] = f.max;
            o["range"] = f.range;
            o["mean"] = f.mean;
            o["std"] = f.std;
        }
        arr.push_back(std::move(o));
    }
    return arr;
}

inline Schema stats_from_json(const nlohmann::json& j) {
    Schema out;
    for (const auto& o : j) {
        FeatureStats f;
        f.name = o.at("name").get<std::string>();
        f.kind = o.at("kind").get<std::string>() == "categorical" ? FeatureKind::Categorical : FeatureKind::Numerical;
        if (f.is_categorical()) {
            f.categories = o.at("categories").get<std::vector<std::string>>();
            f.mode = o.at("mode").get<std::string>();
        } else {
            f.min = o.at("min").get<double>();
            f.max = o.at("max").get<double>();
            f.range = o.at("range").get<double>();
            f.mean = o.at("mean").get<double>();
            f.std = o.at("std").get<double>();
        }
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace nicecf
