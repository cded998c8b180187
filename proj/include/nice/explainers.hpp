#pragma once

// Counterfactual explainers: the nearest-unlike-neighbour guided greedy search
// (NICE, four reward variants) and the WIT, SEDC and CBR baselines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nice/classifier.hpp"
#include "nice/distance.hpp"
#include "nice/error.hpp"
#include "nice/json_io.hpp"
#include "nice/plausibility.hpp"
#include "nice/tabular.hpp"

namespace nicecf {

enum class RewardKind { None, Sparsity, Proximity, Plausibility };

inline std::string_view to_string(RewardKind kind) {
    switch (kind) {
        case RewardKind::None: return "none";
        case RewardKind::Sparsity: return "spars";
        case RewardKind::Proximity: return "prox";
        case RewardKind::Plausibility: return "plaus";
    }
    return "none";
}

inline RewardKind parse_reward_kind(std::string_view s) {
    if (s == "none") return RewardKind::None;
    if (s == "spars" || s == "sparsity") return RewardKind::Sparsity;
    if (s == "prox" || s == "proximity") return RewardKind::Proximity;
    if (s == "plaus" || s == "plausibility") return RewardKind::Plausibility;
    throw ConfigError("unknown NICE variant '" + std::string(s) + "' (none|spars|prox|plaus)");
}

struct TraceStep {
    std::size_t feature = 0;   // feature copied from the target in this iteration
    double reward = 0.0;       // reward of the chosen candidate
    double score = 0.0;        // signed score 2p - 1 of the chosen candidate
};

struct Explanation {
    Instance source;
    Instance counterfactual;
    std::optional<Instance> anchor;           // nearest (unlike) neighbour, NICE and WIT only
    std::optional<std::size_t> anchor_row;
    std::vector<std::size_t> changed_features;
    std::vector<TraceStep> trace;
    double elapsed_ms = 0.0;
    bool valid = false;
    std::string explainer_id;
};

/// Everything a search needs, shared read-only across explanations. The model's
/// predictions for every training row are computed once here.
class SearchContext {
public:
    SearchContext(std::shared_ptr<const Dataset> train, Schema stats, ClassifierHandle model, FeatureWeights weights = {},
                  std::shared_ptr<const PlausibilityScorer> scorer = nullptr, double epsilon = 1e-9)
        : train_(std::move(train)),
          stats_(std::move(stats)),
          model_(std::move(model)),
          weights_(weights.empty() ? FeatureWeights::uniform(stats_.size()) : std::move(weights)),
          scorer_(std::move(scorer)),
          epsilon_(epsilon) {
        if (!train_ || train_->rows.empty()) throw ConfigError("search context needs training data");
        if (weights_.size() != stats_.size()) throw ConfigError("weights length does not match schema");
        if (!model_) throw ConfigError("search context needs a model");
        train_predictions_ = model_.predict_batch(train_->rows);
    }

    SearchContext(const Dataset& train, Schema stats, ClassifierHandle model, FeatureWeights weights = {},
                  std::shared_ptr<const PlausibilityScorer> scorer = nullptr, double epsilon = 1e-9)
        : SearchContext(std::make_shared<const Dataset>(train), std::move(stats), std::move(model), std::move(weights),
                        std::move(scorer), epsilon) {}

    const Dataset& train() const noexcept { return *train_; }
    const Schema& stats() const noexcept { return stats_; }
    const ClassifierHandle& model() const noexcept { return model_; }
    const FeatureWeights& weights() const noexcept { return weights_; }
    const PlausibilityScorer* scorer() const noexcept { return scorer_.get(); }
    double epsilon() const noexcept { return epsilon_; }
    const std::vector<int>& train_predictions() const noexcept { return train_predictions_; }

private:
    std::shared_ptr<const Dataset> train_;
    Schema stats_;
    ClassifierHandle model_;
    FeatureWeights weights_;
    std::shared_ptr<const PlausibilityScorer> scorer_;
    double epsilon_;
    std::vector<int> train_predictions_;
};

// ---------------------------------------------------------------------------
// Rewards

/// Reward from precomputed quantities. `score_*` are signed scores, `dist_*` the
/// distances from the explained instance, `ae_*` plausibility scores.
///
/// Plausibility divides the score drop by the inverted plausibility drop, i.e. it
/// multiplies the two drops. When both drops are negative the product is positive,
/// so a candidate that worsens score and plausibility can still win.
inline double reward_value(RewardKind kind, int y_hat, double score_prev, double score_cand, double dist_prev,
                           double dist_cand, double ae_prev, double ae_cand, double epsilon) {
    const double gain = y_hat * (score_prev - score_cand);
    switch (kind) {
        case RewardKind::Sparsity: return gain;
        case RewardKind::Proximity: return gain / std::max(dist_cand - dist_prev, epsilon);
        case RewardKind::Plausibility: return gain * (ae_prev - ae_cand);
        case RewardKind::None: break;
    }
    throw ConfigError("reward is undefined for the 'none' variant");
}

/// Reward of moving from `prev` to `cand` while explaining `x0`; y_hat is +1 or -1
/// for x0's predicted class.
inline double reward(RewardKind kind, const Instance& x0, const Instance& prev, const Instance& cand,
                     const SearchContext& ctx, int y_hat) {
    if (kind == RewardKind::None) throw ConfigError("reward is undefined for the 'none' variant");
    if (kind == RewardKind::Plausibility && !ctx.scorer()) throw ConfigError("plausibility reward needs a scorer");
    const Instance pair[2] = {prev, cand};
    const auto p = ctx.model().score_batch(pair);
    double d_prev = 0.0, d_cand = 0.0, ae_prev = 0.0, ae_cand = 0.0;
    if (kind == RewardKind::Proximity) {
        d_prev = heom(ctx.stats(), x0, prev, ctx.weights());
        d_cand = heom(ctx.stats(), x0, cand, ctx.weights());
    }
    if (kind == RewardKind::Plausibility) {
        ae_prev = ctx.scorer()->score(prev);
        ae_cand = ctx.scorer()->score(cand);
    }
    return reward_value(kind, y_hat, signed_score(p[0]), signed_score(p[1]), d_prev, d_cand, ae_prev, ae_cand,
                        ctx.epsilon());
}

namespace detail {

struct GreedyResult {
    Instance instance;
    std::vector<TraceStep> trace;
    bool flipped = false;
};

// Best-first walk from x0 towards `target`: each iteration copies one more target
// value, choosing the candidate with the highest reward (ties: lowest feature
// index), and stops as soon as the chosen candidate's prediction differs from
// `x0_class`.
inline GreedyResult greedy_search(const Instance& x0, double x0_score, int x0_class, const Instance& target,
                                  RewardKind kind, const SearchContext& ctx, std::size_t max_iters) {
    const int y_hat = class_sign(x0_class);
    GreedyResult res{x0, {}, false};
    double s_cur = signed_score(x0_score);
    double d_cur = 0.0;
    double ae_cur = kind == RewardKind::Plausibility ? ctx.scorer()->score(x0) : 0.0;

    std::vector<Instance> candidates;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        const auto open = differing_features(res.instance, target);
        if (open.empty()) break;
        candidates.assign(open.size(), res.instance);
        for (std::size_t c = 0; c < open.size(); ++c) candidates[c][open[c]] = target[open[c]];
        const auto scores = ctx.model().score_batch(candidates);

        std::size_t best = 0;
        double best_reward = -std::numeric_limits<double>::infinity();
        double best_dist = 0.0, best_ae = 0.0;
        for (std::size_t c = 0; c < open.size(); ++c) {
            double d = 0.0, ae = 0.0;
            if (kind == RewardKind::Proximity) d = heom(ctx.stats(), x0, candidates[c], ctx.weights());
            if (kind == RewardKind::Plausibility) ae = ctx.scorer()->score(candidates[c]);
            const double r =
                reward_value(kind, y_hat, s_cur, signed_score(scores[c]), d_cur, d, ae_cur, ae, ctx.epsilon());
            if (c == 0 || r > best_reward) {
                best = c;
                best_reward = r;
                best_dist = d;
                best_ae = ae;
            }
        }
        res.instance = std::move(candidates[best]);
        s_cur = signed_score(scores[best]);
        d_cur = best_dist;
        ae_cur = best_ae;
        res.trace.push_back({open[best], best_reward, s_cur});
        if (predicted_class(scores[best]) != x0_class) {
            res.flipped = true;
            break;
        }
    }
    return res;
}

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// NICE

inline std::string nice_id(RewardKind kind) { return "nice-" + std::string(to_string(kind)); }

/// Counterfactual for x0 built from x0 and its nearest unlike neighbour.
/// Throws NoUnlikeNeighborError when no training row qualifies as the neighbour.
inline Explanation explain_nice(const Instance& x0, RewardKind kind, const SearchContext& ctx) {
    const auto t0 = detail::Clock::now();
    if (kind == RewardKind::Plausibility && !ctx.scorer()) throw ConfigError("NICE (plaus) needs a plausibility scorer");
    validate_instance(ctx.stats(), x0);

    const double p0 = ctx.model().score(x0);
    const int c0 = predicted_class(p0);
    const auto nn = nearest_unlike_neighbor(ctx.train(), ctx.stats(), ctx.train_predictions(), x0, c0, ctx.weights());
    const Instance& x_nn = ctx.train().rows[nn.row];

    Explanation e;
    e.explainer_id = nice_id(kind);
    e.source = x0;
    e.anchor = x_nn;
    e.anchor_row = nn.row;
    if (kind == RewardKind::None) {
        e.counterfactual = x_nn;
        e.valid = ctx.train_predictions()[nn.row] != c0;
    } else {
        auto walk = detail::greedy_search(x0, p0, c0, x_nn, kind, ctx, x0.size());
        e.counterfactual = std::move(walk.instance);
        e.trace = std::move(walk.trace);
        e.valid = walk.flipped;
    }
    e.changed_features = differing_features(x0, e.counterfactual);
    e.elapsed_ms = detail::ms_since(t0);
    return e;
}

// ---------------------------------------------------------------------------
// Baselines

/// Nearest training row predicted as the other class, with numerical differences
/// scaled by the training standard deviation and no correctness filter.
inline Explanation explain_wit(const Instance& x0, const SearchContext& ctx) {
    const auto t0 = detail::Clock::now();
    validate_instance(ctx.stats(), x0);
    const int c0 = ctx.model().predict(x0);
    const auto& preds = ctx.train_predictions();
    std::optional<Neighbor> best;
    for (std::size_t i = 0; i < ctx.train().size(); ++i) {
        if (preds[i] == c0) continue;
        const double d = std_heom(ctx.stats(), x0, ctx.train().rows[i], ctx.weights());
        if (!best || d < best->distance) best = Neighbor{i, d};
    }
    if (!best) throw NoUnlikeNeighborError("no training row is predicted as class " + std::to_string(1 - c0));

    Explanation e;
    e.explainer_id = "wit";
    e.source = x0;
    e.counterfactual = ctx.train().rows[best->row];
    e.anchor = e.counterfactual;
    e.anchor_row = best->row;
    e.valid = true;
    e.changed_features = differing_features(x0, e.counterfactual);
    e.elapsed_ms = detail::ms_since(t0);
    return e;
}

/// Greedy sparsity search that replaces values with the training mean (numerical)
/// or mode (categorical). Returns valid = false when no flip occurs.
inline Explanation explain_sedc(const Instance& x0, const SearchContext& ctx,
                                std::optional<std::size_t> max_iters = std::nullopt) {
    const auto t0 = detail::Clock::now();
    validate_instance(ctx.stats(), x0);
    const double p0 = ctx.model().score(x0);
    auto walk = detail::greedy_search(x0, p0, predicted_class(p0), mean_mode_instance(ctx.stats()),
                                      RewardKind::Sparsity, ctx, max_iters.value_or(x0.size()));
    Explanation e;
    e.explainer_id = "sedc";
    e.source = x0;
    e.counterfactual = std::move(walk.instance);
    e.trace = std::move(walk.trace);
    e.valid = walk.flipped;
    e.changed_features = differing_features(x0, e.counterfactual);
    e.elapsed_ms = detail::ms_since(t0);
    return e;
}

/// Native counterfactual pairs: training rows with different predicted classes
/// that differ in at most two features, ordered by (first row, second row).
struct CaseBase {
    struct Pair {
        std::size_t a = 0;
        std::size_t b = 0;
        std::vector<std::size_t> differing;
    };
    std::vector<Pair> pairs;
};

inline CaseBase build_case_base(const SearchContext& ctx, std::size_t max_differences = 2) {
    CaseBase cb;
    const auto& rows = ctx.train().rows;
    const auto& preds = ctx.train_predictions();
    std::vector<std::size_t> diff;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            if (preds[i] == preds[j]) continue;
            diff.clear();
            for (std::size_t f = 0; f < rows[i].size() && diff.size() <= max_differences; ++f) {
                if (rows[i][f] != rows[j][f]) diff.push_back(f);
            }
            if (!diff.empty() && diff.size() <= max_differences) cb.pairs.push_back({i, j, diff});
        }
    }
    return cb;
}

/// Reuses the pair whose same-class member is HEOM-nearest to x0: the pair's
/// differing values are copied from its other member into x0.
inline Explanation explain_cbr(const Instance& x0, const SearchContext& ctx, const CaseBase& cases) {
    const auto t0 = detail::Clock::now();
    validate_instance(ctx.stats(), x0);
    const int c0 = ctx.model().predict(x0);
    const auto& rows = ctx.train().rows;
    const auto& preds = ctx.train_predictions();

    Explanation e;
    e.explainer_id = "cbr";
    e.source = x0;
    e.counterfactual = x0;

    const CaseBase::Pair* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& p : cases.pairs) {
        const std::size_t same = preds[p.a] == c0 ? p.a : p.b;
        const double d = heom(ctx.stats(), x0, rows[same], ctx.weights());
        if (!best || d < best_d) {
            best = &p;
            best_d = d;
        }
    }
    if (best) {
        const std::size_t other = preds[best->a] == c0 ? best->b : best->a;
        for (std::size_t f : best->differing) e.counterfactual[f] = rows[other][f];
        e.valid = ctx.model().predict(e.counterfactual) != c0;
    }
    e.changed_features = differing_features(x0, e.counterfactual);
    e.elapsed_ms = detail::ms_since(t0);
    return e;
}

inline Explanation explain_cbr(const Instance& x0, const SearchContext& ctx) {
    return explain_cbr(x0, ctx, build_case_base(ctx));
}

// ---------------------------------------------------------------------------
// Dispatch by name

enum class ExplainerKind { NiceNone, NiceSpars, NiceProx, NicePlaus, Wit, Sedc, Cbr };

inline std::string explainer_id(ExplainerKind k) {
    switch (k) {
        case ExplainerKind::NiceNone: return "nice-none";
        case ExplainerKind::NiceSpars: return "nice-spars";
        case ExplainerKind::NiceProx: return "nice-prox";
        case ExplainerKind::NicePlaus: return "nice-plaus";
        case ExplainerKind::Wit: return "wit";
        case ExplainerKind::Sedc: return "sedc";
        case ExplainerKind::Cbr: return "cbr";
    }
    return "";
}

inline ExplainerKind parse_explainer(std::string_view s) {
    for (auto k : {ExplainerKind::NiceNone, ExplainerKind::NiceSpars, ExplainerKind::NiceProx, ExplainerKind::NicePlaus,
                   ExplainerKind::Wit, ExplainerKind::Sedc, ExplainerKind::Cbr}) {
        if (explainer_id(k) == s) return k;
    }
    throw ConfigError("unknown explainer '" + std::string(s) + "'");
}

inline bool needs_scorer(ExplainerKind k) noexcept { return k == ExplainerKind::NicePlaus; }

/// Runs one explainer. An instance without an unlike neighbour yields an invalid
/// explanation instead of an exception, so batch runs never abort.
inline Explanation explain(ExplainerKind kind, const Instance& x0, const SearchContext& ctx,
                           const CaseBase* cases = nullptr) {
    const auto t0 = detail::Clock::now();
    try {
        switch (kind) {
            case ExplainerKind::NiceNone: return explain_nice(x0, RewardKind::None, ctx);
            case ExplainerKind::NiceSpars: return explain_nice(x0, RewardKind::Sparsity, ctx);
            case ExplainerKind::NiceProx: return explain_nice(x0, RewardKind::Proximity, ctx);
            case ExplainerKind::NicePlaus: return explain_nice(x0, RewardKind::Plausibility, ctx);
            case ExplainerKind::Wit: return explain_wit(x0, ctx);
            case ExplainerKind::Sedc: return explain_sedc(x0, ctx);
            case ExplainerKind::Cbr:
                if (cases) return explain_cbr(x0, ctx, *cases);
                return explain_cbr(x0, ctx);
        }
    } catch (const NoUnlikeNeighborError&) {
        Explanation e;
        e.explainer_id = explainer_id(kind);
        e.source = x0;
        e.counterfactual = x0;
        e.valid = false;
        e.elapsed_ms = detail::ms_since(t0);
        return e;
    }
    throw ConfigError("unhandled explainer");
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json explanation_to_json(const Explanation& e, const Schema& schema) {
    nlohmann::json changes = nlohmann::json::array();
    for (std::size_t f : e.changed_features) {
        changes.push_back({{"feature", schema[f].name},
                           {"from", value_to_json(e.source[f])},
                           {"to", value_to_json(e.counterfactual[f])}});
    }
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& t : e.trace) {
        trace.push_back({{"feature", schema[t.feature].name}, {"reward", t.reward}, {"score", t.score}});
    }
    nlohmann::json j{{"explainer", e.explainer_id},
                     {"valid", e.valid},
                     {"source", instance_to_json(e.source)},
                     {"counterfactual", instance_to_json(e.counterfactual)},
                     {"changes", std::move(changes)},
                     {"trace", std::move(trace)},
                     {"elapsed_ms", e.elapsed_ms}};
    if (e.anchor_row) j["anchor_row"] = *e.anchor_row;
    return j;
}

}  // namespace nicecf
