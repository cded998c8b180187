#pragma once

// Explanation quality metrics and the rank statistics used to compare explainers
// across many instances: tied ranks with worst-rank imputation, the Friedman
// chi-square test and the Nemenyi critical difference.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "nice/classifier.hpp"
#include "nice/distance.hpp"
#include "nice/error.hpp"
#include "nice/explainers.hpp"
#include "nice/plausibility.hpp"

namespace nicecf {

struct MetricRecord {
    std::size_t instance_id = 0;
    std::string explainer_id;
    bool valid = false;
    double time_ms = 0.0;
    // present only when valid
    std::optional<int> sparsity;
    std::optional<double> proximity;
    std::optional<double> ae_error;  // absent when no plausibility scorer is available
    std::optional<double> knn5;
    std::optional<bool> robust;
};

/// Metrics of one explanation. Proximity and the 5-NN distance use unweighted HEOM;
/// the 5-NN distance looks at all training rows regardless of class.
inline MetricRecord compute_metrics(const Explanation& expl, const SearchContext& ctx, std::size_t instance_id = 0,
                                    const PlausibilityScorer* scorer = nullptr) {
    MetricRecord r;
    r.instance_id = instance_id;
    r.explainer_id = expl.explainer_id;
    r.valid = expl.valid;
    r.time_ms = expl.elapsed_ms;
    if (!expl.valid) return r;
    if (!scorer) scorer = ctx.scorer();
    r.sparsity = static_cast<int>(expl.changed_features.size());
    r.proximity = heom(ctx.stats(), expl.source, expl.counterfactual);
    if (scorer) r.ae_error = scorer->score(expl.counterfactual);
    const std::size_t k = std::min<std::size_t>(5, ctx.train().size());
    double sum = 0.0;
    for (const auto& nb : k_nearest(ctx.train(), ctx.stats(), expl.counterfactual, k)) sum += nb.distance;
    r.knn5 = sum / static_cast<double>(k);
    return r;
}

/// Share of valid explanations whose counterfactual also flips `other`'s prediction
/// of the source. 0 when no explanation is valid.
inline double cross_model_robustness(const std::vector<Explanation>& expls, const ClassifierHandle& other) {
    if (expls.empty()) throw EvalError("robustness of an empty explanation set is undefined");
    std::vector<Instance> sources, cfs;
    for (const auto& e : expls) {
        if (!e.valid) continue;
        sources.push_back(e.source);
        cfs.push_back(e.counterfactual);
    }
    if (sources.empty()) return 0.0;
    const auto ps = other.predict_batch(sources);
    const auto pc = other.predict_batch(cfs);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) kept += ps[i] != pc[i] ? 1 : 0;
    return static_cast<double>(kept) / static_cast<double>(ps.size());
}

// ---------------------------------------------------------------------------
// Ranking

enum class Metric { Time, Sparsity, Proximity, AeError, Knn5 };

inline constexpr std::array<Metric, 5> kAllMetrics = {Metric::Time, Metric::Proximity, Metric::Sparsity,
                                                       Metric::AeError, Metric::Knn5};

inline std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Time: return "time";
        case Metric::Sparsity: return "sparsity";
        case Metric::Proximity: return "proximity";
        case Metric::AeError: return "ae_error";
        case Metric::Knn5: return "knn5";
    }
    return "";
}

/// Metric value of a valid record; nullopt when invalid or not computed.
inline std::optional<double> metric_value(const MetricRecord& r, Metric m) {
    if (!r.valid) return std::nullopt;
    switch (m) {
        case Metric::Time: return r.time_ms;
        case Metric::Sparsity: return r.sparsity ? std::optional<double>(*r.sparsity) : std::nullopt;
        case Metric::Proximity: return r.proximity;
        case Metric::AeError: return r.ae_error;
        case Metric::Knn5: return r.knn5;
    }
    return std::nullopt;
}

/// Tied ranks of `values` (lower is better, rank 1 best). Missing entries share the
/// worst ranks: with v present and u missing, each missing entry gets the average
/// of v+1..v+u.
inline std::vector<double> tied_ranks(const std::vector<std::optional<double>>& values) {
    const std::size_t k = values.size();
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < k; ++i) {
        if (values[i]) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return *values[a] < *values[b]; });
    std::vector<double> ranks(k, 0.0);
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && *values[order[j + 1]] == *values[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    const std::size_t v = order.size();
    const double worst = (static_cast<double>(v + 1) + static_cast<double>(k)) / 2.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!values[i]) ranks[i] = worst;
    }
    return ranks;
}

struct RankTable {
    Metric metric = Metric::Sparsity;
    std::vector<std::string> explainers;    // columns
    std::vector<std::vector<double>> ranks;  // rows = instances

    std::size_t instances() const noexcept { return ranks.size(); }
    std::size_t columns() const noexcept { return explainers.size(); }

    std::vector<double> mean_ranks() const {
        std::vector<double> m(columns(), 0.0);
        for (const auto& row : ranks) {
            for (std::size_t j = 0; j < row.size(); ++j) m[j] += row[j];
        }
        for (auto& v : m) v /= static_cast<double>(std::max<std::size_t>(1, instances()));
        return m;
    }
};

/// `by_instance[i]` holds one record per explainer for instance i, in the same
/// explainer order for every instance.
inline RankTable rank_table(const std::vector<std::vector<MetricRecord>>& by_instance, Metric metric) {
    RankTable t;
    t.metric = metric;
    if (by_instance.empty()) return t;
    for (const auto& r : by_instance.front()) t.explainers.push_back(r.explainer_id);
    for (const auto& group : by_instance) {
        if (group.size() != t.explainers.size()) throw EvalError("instances were explained by different explainer sets");
        std::vector<std::optional<double>> values;
        for (std::size_t j = 0; j < group.size(); ++j) {
            if (group[j].explainer_id != t.explainers[j]) {
                throw EvalError("explainer '" + group[j].explainer_id + "' out of order for instance " +
                                std::to_string(group[j].instance_id));
            }
            values.push_back(metric_value(group[j], metric));
        }
        t.ranks.push_back(tied_ranks(values));
    }
    return t;
}

struct FriedmanResult {
    double statistic = 0.0;
    double critical_value = 0.0;
    double p_value = 1.0;
    bool reject = false;
};

/// Friedman chi-square over the table's mean ranks, compared with the chi-square
/// critical value at k - 1 degrees of freedom.
inline FriedmanResult friedman_test(const RankTable& table, double alpha = 0.05) {
    const std::size_t n = table.instances();
    const std::size_t k = table.columns();
    if (n < 2 || k < 2) throw EvalError("Friedman test needs at least 2 instances and 2 explainers");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    const double N = static_cast<double>(n);
    const double K = static_cast<double>(k);
    double sum_sq = 0.0;
    for (double r : table.mean_ranks()) sum_sq += r * r;
    FriedmanResult res;
    res.statistic = std::max(0.0, 12.0 * N / (K * (K + 1.0)) * (sum_sq - K * (K + 1.0) * (K + 1.0) / 4.0));
    const boost::math::chi_squared dist(K - 1.0);
    res.critical_value = boost::math::quantile(boost::math::complement(dist, alpha));
    res.p_value = boost::math::cdf(boost::math::complement(dist, res.statistic));
    res.reject = res.statistic > res.critical_value;
    return res;
}

/// Studentized range statistic divided by sqrt(2), for k = 2..10 (Demsar 2006).
inline double nemenyi_q(std::size_t k, double alpha) {
    static constexpr double q05[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
    static constexpr double q10[] = {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920};
    if (k < 2 || k > 10) throw ConfigError("Nemenyi q is tabulated for 2..10 explainers, got " + std::to_string(k));
    if (std::abs(alpha - 0.05) < 1e-12) return q05[k - 2];
    if (std::abs(alpha - 0.10) < 1e-12) return q10[k - 2];
    throw ConfigError("Nemenyi q is tabulated for alpha 0.05 and 0.10 only");
}

/// Critical difference between mean ranks of k explainers over n instances.
inline double nemenyi_cd(std::size_t k, std::size_t n, double alpha = 0.05) {
    if (n == 0) throw ConfigError("Nemenyi critical difference needs at least one instance");
    const double K = static_cast<double>(k);
    return nemenyi_q(k, alpha) * std::sqrt(K * (K + 1.0) / (6.0 * static_cast<double>(n)));
}

/// Per explainer, the share of instances (in %) on which it attains the best
/// value of `metric` among valid explanations; ties all count as best.
inline std::vector<double> percent_best(const std::vector<std::vector<MetricRecord>>& by_instance, Metric metric) {
    if (by_instance.empty()) return {};
    const std::size_t k = by_instance.front().size();
    std::vector<double> wins(k, 0.0);
    for (const auto& group : by_instance) {
        std::optional<double> best;
        for (const auto& r : group) {
            if (auto v = metric_value(r, metric); v && (!best || *v < *best)) best = v;
        }
        if (!best) continue;
        for (std::size_t j = 0; j < group.size() && j < k; ++j) {
            if (auto v = metric_value(group[j], metric); v && *v == *best) wins[j] += 1.0;
        }
    }
    for (auto& w : wins) w = 100.0 * w / static_cast<double>(by_instance.size());
    return wins;
}

}  // namespace nicecf
