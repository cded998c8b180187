#pragma once

// Built-in reference classifiers: logistic regression over the encoded
// features and a HEOM k-nearest-neighbour vote.

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nice/classifier.hpp"
#include "nice/distance.hpp"
#include "nice/error.hpp"
#include "nice/json_io.hpp"
#include "nice/tabular.hpp"

namespace nicecf {

inline double sigmoid(double t) noexcept {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

struct LogisticParams {
    std::vector<double> weights;  // one per encoded column
    double bias = 0.0;
};

/// Mean log-loss over encoded rows and its gradient (weights..., bias).
inline double logistic_loss_and_gradient(const LogisticParams& params, const std::vector<std::vector<double>>& rows,
                                         std::span<const int> labels, std::vector<double>* gradient = nullptr) {
    const std::size_t d = params.weights.size();
    if (gradient) gradient->assign(d + 1, 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double t = params.bias;
        for (std::size_t c = 0; c < d; ++c) t += params.weights[c] * rows[i][c];
        const double y = labels[i];
        // log(1 + e^t) - y t, evaluated without overflow
        loss += (t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t))) - y * t;
        if (gradient) {
            const double r = sigmoid(t) - y;
            for (std::size_t c = 0; c < d; ++c) (*gradient)[c] += r * rows[i][c];
            (*gradient)[d] += r;
        }
    }
    const double n = static_cast<double>(rows.size());
    if (gradient) {
        for (auto& g : *gradient) g /= n;
    }
    return loss / n;
}

class LogisticClassifier final : public Classifier {
public:
    LogisticClassifier(Schema stats, LogisticParams params) : stats_(std::move(stats)), params_(std::move(params)) {
        if (params_.weights.size() != encoded_width(stats_)) {
            throw ConfigError("logistic weights do not match the encoded width");
        }
    }

    std::vector<double> score_batch(std::span<const Instance> xs) const override {
        std::vector<double> out;
        out.reserve(xs.size());
        std::vector<double> z;
        for (const auto& x : xs) {
            z.clear();
            encode_into(stats_, x, z);
            double t = params_.bias;
            for (std::size_t c = 0; c < z.size(); ++c) t += params_.weights[c] * z[c];
            out.push_back(sigmoid(t));
        }
        return out;
    }

    std::string descriptor() const override { return "builtin:logistic"; }

    const Schema& stats() const noexcept { return stats_; }
    const LogisticParams& params() const noexcept { return params_; }

    nlohmann::json to_json() const {
        return {{"kind", "logistic"}, {"stats", stats_to_json(stats_)}, {"weights", params_.weights}, {"bias", params_.bias}};
    }

private:
    Schema stats_;
    LogisticParams params_;
};

inline void require_both_classes(const Dataset& train) {
    if (!train.has_labels()) throw TrainError("training data has no labels");
    bool zero = false, one = false;
    for (int y : *train.labels) (y == 1 ? one : zero) = true;
    if (!(zero && one)) throw TrainError("training labels contain a single class");
}

/// Full-batch gradient descent on mean log-loss from all-zero weights.
/// The procedure has no stochastic step; `seed` is accepted for interface symmetry.
inline ClassifierHandle train_logistic(const Dataset& train, const Schema& stats, int epochs = 500, double step = 0.5,
                                       std::uint64_t seed = 0) {
    (void)seed;
    require_both_classes(train);
    if (epochs < 0 || !(step > 0.0)) throw ConfigError("logistic training needs epochs >= 0 and step > 0");
    std::vector<std::vector<double>> rows;
    rows.reserve(train.size());
    for (const auto& r : train.rows) rows.push_back(encode(stats, r));

    LogisticParams params{std::vector<double>(encoded_width(stats), 0.0), 0.0};
    std::vector<double> grad;
    for (int e = 0; e < epochs; ++e) {
        logistic_loss_and_gradient(params, rows, *train.labels, &grad);
        for (std::size_t c = 0; c < params.weights.size(); ++c) params.weights[c] -= step * grad[c];
        params.bias -= step * grad.back();
    }
    return ClassifierHandle::make<LogisticClassifier>(stats, std::move(params));
}

inline ClassifierHandle logistic_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "logistic") throw ConfigError("model file is not a logistic model");
    LogisticParams params{j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
    return ClassifierHandle::make<LogisticClassifier>(stats_from_json(j.at("stats")), std::move(params));
}

/// p(x) = share of class-1 labels among the k HEOM-nearest training rows.
class KnnClassifier final : public Classifier {
public:
    KnnClassifier(std::shared_ptr<const Dataset> train, Schema stats, std::size_t k)
        : train_(std::move(train)), stats_(std::move(stats)), k_(k) {}

    std::vector<double> score_batch(std::span<const Instance> xs) const override {
        std::vector<double> out;
        out.reserve(xs.size());
        for (const auto& x : xs) {
            std::size_t ones = 0;
            for (const auto& nb : k_nearest(*train_, stats_, x, k_)) ones += train_->label(nb.row) == 1 ? 1 : 0;
            out.push_back(static_cast<double>(ones) / static_cast<double>(k_));
        }
        return out;
    }

    std::string descriptor() const override { return "builtin:knn:" + std::to_string(k_); }

    std::size_t k() const noexcept { return k_; }

private:
    std::shared_ptr<const Dataset> train_;
    Schema stats_;
    std::size_t k_;
};

inline ClassifierHandle train_knn_classifier(const Dataset& train, const Schema& stats, std::size_t k) {
    if (k % 2 == 0) throw ConfigError("knn classifier needs an odd k, got " + std::to_string(k));
    if (k > train.size()) throw ConfigError("knn classifier k exceeds the training size");
    if (!train.has_labels()) throw TrainError("training data has no labels");
    return ClassifierHandle::make<KnnClassifier>(std::make_shared<const Dataset>(train), stats, k);
}

}  // namespace nicecf
