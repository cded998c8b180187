#pragma once

// Single-hidden-layer autoencoder over the encoded feature space. Its mean squared
// reconstruction error is the default plausibility score (lower = closer to the
// training data manifold).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nice/error.hpp"
#include "nice/json_io.hpp"
#include "nice/model.hpp"
#include "nice/rng.hpp"
#include "nice/tabular.hpp"

namespace nicecf {

struct AEConfig {
    int epochs = 1000;
    double step = 0.5;
    std::uint64_t seed = 0;
};

enum class HiddenActivation { Sigmoid, Identity };

/// Layers [input, hidden, input]: hidden = act(W1 z + b1), output = W2 hidden + b2.
/// Matrices are row-major: W1 is hidden x input, W2 is input x hidden.
struct AEModel {
    std::size_t input = 0;
    std::size_t hidden = 0;
    std::vector<double> w1, b1, w2, b2;
    HiddenActivation activation = HiddenActivation::Sigmoid;
    AEConfig config;
    std::vector<double> loss_history;  // training loss before each epoch, then the final loss
    bool degenerate = false;           // every training row encoded identically

    static AEModel zeros(std::size_t input, std::size_t hidden) {
        AEModel ae;
        ae.input = input;
        ae.hidden = hidden;
        ae.w1.assign(hidden * input, 0.0);
        ae.b1.assign(hidden, 0.0);
        ae.w2.assign(input * hidden, 0.0);
        ae.b2.assign(input, 0.0);
        return ae;
    }

    std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + b2.size(); }

    /// Flat parameter vector in the order w1, b1, w2, b2.
    std::vector<double> parameters() const {
        std::vector<double> p;
        p.reserve(parameter_count());
        for (const auto* v : {&w1, &b1, &w2, &b2}) p.insert(p.end(), v->begin(), v->end());
        return p;
    }

    void set_parameters(std::span<const double> p) {
        if (p.size() != parameter_count()) throw ConfigError("autoencoder parameter count mismatch");
        std::size_t at = 0;
        for (auto* v : {&w1, &b1, &w2, &b2}) {
            for (auto& x : *v) x = p[at++];
        }
    }

    double activate(double t) const noexcept { return activation == HiddenActivation::Sigmoid ? sigmoid(t) : t; }

    void forward(std::span<const double> z, std::vector<double>& hid, std::vector<double>& out) const {
        hid.assign(hidden, 0.0);
        out.assign(input, 0.0);
        for (std::size_t k = 0; k < hidden; ++k) {
            double t = b1[k];
            const double* row = &w1[k * input];
            for (std::size_t c = 0; c < input; ++c) t += row[c] * z[c];
            hid[k] = activate(t);
        }
        for (std::size_t j = 0; j < input; ++j) {
            double t = b2[j];
            const double* row = &w2[j * hidden];
            for (std::size_t k = 0; k < hidden; ++k) t += row[k] * hid[k];
            out[j] = t;
        }
    }

    std::vector<double> reconstruct(std::span<const double> z) const {
        std::vector<double> hid, out;
        forward(z, hid, out);
        return out;
    }

    /// Mean squared difference between z and its reconstruction.
    double error(std::span<const double> z) const {
        if (z.size() != input) throw EncodeError("autoencoder input width mismatch");
        const auto r = reconstruct(z);
        double s = 0.0;
        for (std::size_t j = 0; j < input; ++j) s += (r[j] - z[j]) * (r[j] - z[j]);
        return s / static_cast<double>(input);
    }
};

/// Mean reconstruction error over `rows` and, optionally, its gradient with respect
/// to AEModel::parameters().
inline double ae_loss_and_gradient(const AEModel& ae, const std::vector<std::vector<double>>& rows,
                                   std::vector<double>* gradient = nullptr) {
    const std::size_t m = ae.input;
    const std::size_t h = ae.hidden;
    std::vector<double> gw1, gb1, gw2, gb2;
    if (gradient) {
        gw1.assign(ae.w1.size(), 0.0);
        gb1.assign(h, 0.0);
        gw2.assign(ae.w2.size(), 0.0);
        gb2.assign(m, 0.0);
    }
    const double n = static_cast<double>(rows.size());
    const double scale = 2.0 / (static_cast<double>(m) * n);
    std::vector<double> hid, out, g(m), dh(h);
    double loss = 0.0;
    for (const auto& z : rows) {
        ae.forward(z, hid, out);
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double diff = out[j] - z[j];
            s += diff * diff;
            g[j] = scale * diff;
        }
        loss += s / static_cast<double>(m);
        if (!gradient) continue;
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            gb2[j] += g[j];
            double* grow = &gw2[j * h];
            const double* wrow = &ae.w2[j * h];
            for (std::size_t k = 0; k < h; ++k) {
                grow[k] += g[j] * hid[k];
                dh[k] += wrow[k] * g[j];
            }
        }
        for (std::size_t k = 0; k < h; ++k) {
            const double pre = ae.activation == HiddenActivation::Sigmoid ? dh[k] * hid[k] * (1.0 - hid[k]) : dh[k];
            gb1[k] += pre;
            double* grow = &gw1[k * m];
            for (std::size_t c = 0; c < m; ++c) grow[c] += pre * z[c];
        }
    }
    if (gradient) {
        gradient->clear();
        for (const auto* v : {&gw1, &gb1, &gw2, &gb2}) gradient->insert(gradient->end(), v->begin(), v->end());
    }
    return loss / n;
}

/// Full-batch gradient descent on mean squared reconstruction error of the encoded
/// training rows. Weights start uniform in [-0.1, 0.1] under `config.seed`, biases at 0.
inline AEModel train_autoencoder(const Dataset& train, const Schema& stats, const AEConfig& config = {}) {
    if (train.size() < 2) throw TrainError("autoencoder training needs at least two rows");
    std::vector<std::vector<double>> rows;
    rows.reserve(train.size());
    for (const auto& r : train.rows) rows.push_back(encode(stats, r));

    const std::size_t m = encoded_width(stats);
    AEModel ae = AEModel::zeros(m, (m + 1) / 2);
    ae.config = config;
    SplitMix64 rng(config.seed);
    for (auto& w : ae.w1) w = rng.uniform(-0.1, 0.1);
    for (auto& w : ae.w2) w = rng.uniform(-0.1, 0.1);

    ae.degenerate = true;
    for (const auto& r : rows) {
        if (r != rows.front()) {
            ae.degenerate = false;
            break;
        }
    }

    std::vector<double> params = ae.parameters();
    std::vector<double> grad;
    ae.loss_history.reserve(static_cast<std::size_t>(config.epochs) + 1);
    for (int e = 0; e < config.epochs; ++e) {
        ae.loss_history.push_back(ae_loss_and_gradient(ae, rows, &grad));
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.step * grad[i];
        ae.set_parameters(params);
    }
    ae.loss_history.push_back(ae_loss_and_gradient(ae, rows));
    return ae;
}

inline double ae_error(const AEModel& ae, const Schema& stats, const Instance& x) { return ae.error(encode(stats, x)); }

/// Instance -> non-negative implausibility score; lower is more plausible.
class PlausibilityScorer {
public:
    virtual ~PlausibilityScorer() = default;
    virtual double score(const Instance& x) const = 0;
};

class AutoencoderScorer final : public PlausibilityScorer {
public:
    AutoencoderScorer(AEModel ae, Schema stats) : ae_(std::move(ae)), stats_(std::move(stats)) {}

    double score(const Instance& x) const override { return ae_error(ae_, stats_, x); }

    const AEModel& model() const noexcept { return ae_; }

private:
    AEModel ae_;
    Schema stats_;
};

inline nlohmann::json autoencoder_to_json(const AEModel& ae, const Schema& stats) {
    return {{"layer_sizes", {ae.input, ae.hidden, ae.input}},
            {"activation", ae.activation == HiddenActivation::Sigmoid ? "sigmoid" : "identity"},
            {"w1", ae.w1},
            {"b1", ae.b1},
            {"w2", ae.w2},
            {"b2", ae.b2},
            {"config", {{"epochs", ae.config.epochs}, {"step", ae.config.step}, {"seed", ae.config.seed}}},
            {"final_loss", ae.loss_history.empty() ? 0.0 : ae.loss_history.back()},
            {"stats", stats_to_json(stats)}};
}

inline std::pair<AEModel, Schema> autoencoder_from_json(const nlohmann::json& j) {
    const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    if (sizes.size() != 3 || sizes[0] != sizes[2]) throw ConfigError("autoencoder file: bad layer sizes");
    AEModel ae = AEModel::zeros(sizes[0], sizes[1]);
    ae.activation = j.value("activation", "sigmoid") == "identity" ? HiddenActivation::Identity : HiddenActivation::Sigmoid;
    ae.w1 = j.at("w1").get<std::vector<double>>();
    ae.b1 = j.at("b1").get<std::vector<double>>();
    ae.w2 = j.at("w2").get<std::vector<double>>();
    ae.b2 = j.at("b2").get<std::vector<double>>();
    if (ae.w1.size() != sizes[0] * sizes[1] || ae.b1.size() != sizes[1] || ae.w2.size() != sizes[0] * sizes[1] ||
        ae.b2.size() != sizes[0]) {
        throw ConfigError("autoencoder file: weight shapes do not match layer sizes");
    }
    const auto& c = j.at("config");
    ae.config = {c.at("epochs").get<int>(), c.at("step").get<double>(), c.at("seed").get<std::uint64_t>()};
    return {std::move(ae), stats_from_json(j.at("stats"))};
}

}  // namespace nicecf
