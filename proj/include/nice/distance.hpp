#pragma once

// Heterogeneous Euclidean Overlap Method (HEOM) and the exact-scan neighbour
// searches built on it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nice/classifier.hpp"
#include "nice/error.hpp"
#include "nice/tabular.hpp"

namespace nicecf {

/// Per-feature cost multipliers, finite and non-negative.
class FeatureWeights {
public:
    FeatureWeights() = default;

    explicit FeatureWeights(std::vector<double> w) : w_(std::move(w)) {
        for (double v : w_) {
            if (!std::isfinite(v) || v < 0.0) throw ConfigError("feature weights must be finite and non-negative");
        }
    }

    static FeatureWeights uniform(std::size_t n) { return FeatureWeights(std::vector<double>(n, 1.0)); }

    /// `{feature_name: weight}`; unnamed features keep weight 1.
    static FeatureWeights from_json(const Schema& schema, const nlohmann::json& j) {
        if (!j.is_object()) throw ConfigError("weights must be a JSON object of {feature: weight}");
        std::vector<double> w(schema.size(), 1.0);
        for (const auto& [name, value] : j.items()) {
            auto it = std::find_if(schema.begin(), schema.end(), [&](const FeatureStats& f) { return f.name == name; });
            if (it == schema.end()) throw ConfigError("weights name unknown feature '" + name + "'");
            if (!value.is_number()) throw ConfigError("weight for '" + name + "' is not a number");
            w[static_cast<std::size_t>(it - schema.begin())] = value.get<double>();
        }
        return FeatureWeights(std::move(w));
    }

    std::size_t size() const noexcept { return w_.size(); }
    bool empty() const noexcept { return w_.empty(); }
    double operator[](std::size_t i) const { return w_[i]; }
    std::span<const double> values() const noexcept { return w_; }

private:
    std::vector<double> w_;
};

namespace detail {

// Unchecked per-feature term. Numerical differences are divided by `scale`
// (the range for HEOM, the standard deviation for the WIT variant); a zero
// scale degrades to the overlap metric.
inline double feature_term(const FeatureStats& f, const Value& a, const Value& b, double scale) {
    if (f.is_categorical()) return as_label(a) == as_label(b) ? 0.0 : 1.0;
    const double x = as_number(a);
    const double y = as_number(b);
    if (scale > 0.0) return std::abs(x - y) / scale;
    return x == y ? 0.0 : 1.0;
}

inline void check_kind(const FeatureStats& f, const Value& v) {
    if (f.is_categorical() == is_number(v)) {
        throw DistanceError("value kind does not match feature '" + f.name + "' (" + std::string(to_string(f.kind)) + ")");
    }
}

}  // namespace detail

inline double heom_feature(const FeatureStats& stat, const Value& a, const Value& b) {
    detail::check_kind(stat, a);
    detail::check_kind(stat, b);
    return detail::feature_term(stat, a, b, stat.range);
}

/// Weighted L1 aggregation of per-feature HEOM terms. Empty weights mean all ones.
inline double heom(const Schema& stats, const Instance& x, const Instance& y, const FeatureWeights& w = {}) {
    if (x.size() != stats.size() || y.size() != stats.size()) {
        throw DistanceError("instance length does not match schema");
    }
    if (!w.empty() && w.size() != stats.size()) throw DistanceError("weights length does not match schema");
    double d = 0.0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const double term = heom_feature(stats[i], x[i], y[i]);
        d += w.empty() ? term : w[i] * term;
    }
    return d;
}

/// HEOM with numerical differences standardized by the training standard deviation.
inline double std_heom(const Schema& stats, const Instance& x, const Instance& y, const FeatureWeights& w = {}) {
    if (x.size() != stats.size() || y.size() != stats.size()) {
        throw DistanceError("instance length does not match schema");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        detail::check_kind(stats[i], x[i]);
        detail::check_kind(stats[i], y[i]);
        const double term = detail::feature_term(stats[i], x[i], y[i], stats[i].std);
        d += w.empty() ? term : w[i] * term;
    }
    return d;
}

struct Neighbor {
    std::size_t row = 0;
    double distance = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

inline bool neighbor_less(const Neighbor& a, const Neighbor& b) noexcept {
    return a.distance < b.distance || (a.distance == b.distance && a.row < b.row);
}

/// The k HEOM-nearest training rows, ascending by distance, ties by row index.
inline std::vector<Neighbor> k_nearest(const Dataset& train, const Schema& stats, const Instance& x, std::size_t k,
                                       const FeatureWeights& w = {}) {
    if (k < 1 || k > train.size()) {
        throw ConfigError("k must lie in [1, " + std::to_string(train.size()) + "], got " + std::to_string(k));
    }
    std::vector<Neighbor> all(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) all[i] = {i, heom(stats, x, train.rows[i], w)};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), neighbor_less);
    all.resize(k);
    return all;
}

/// Nearest training row that the model predicts opposite to `predicted_x0` and
/// that is correctly classified. `train_predictions` are the model's classes
/// for the training rows, in row order.
inline Neighbor nearest_unlike_neighbor(const Dataset& train, const Schema& stats, std::span<const int> train_predictions,
                                        const Instance& x0, int predicted_x0, const FeatureWeights& w = {}) {
    if (!train.has_labels()) throw ConfigError("nearest unlike neighbour search needs labelled training data");
    Neighbor best{0, std::numeric_limits<double>::infinity()};
    bool found = false;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const int pred = train_predictions[i];
        if (pred == predicted_x0 || train.label(i) != pred) continue;
        const double d = heom(stats, x0, train.rows[i], w);
        if (!found || d < best.distance) {
            best = {i, d};
            found = true;
        }
    }
    if (!found) {
        throw NoUnlikeNeighborError("no correctly classified training row is predicted as class " +
                                    std::to_string(1 - predicted_x0));
    }
    return best;
}

inline std::pair<Instance, std::size_t> nearest_unlike_neighbor(const Dataset& train, const Schema& stats,
                                                                const ClassifierHandle& model, const Instance& x0,
                                                                const FeatureWeights& w = {}) {
    const auto preds = model.predict_batch(train.rows);
    const auto nn = nearest_unlike_neighbor(train, stats, preds, x0, model.predict(x0), w);
    return {train.rows[nn.row], nn.row};
}

}  // namespace nicecf
