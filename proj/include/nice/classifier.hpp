#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nice/error.hpp"
#include "nice/tabular.hpp"

namespace nicecf {

/// Black-box binary classifier: instance -> probability of class 1.
/// Implementations must be deterministic and return scores in [0, 1].
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::vector<double> score_batch(std::span<const Instance> xs) const = 0;
    virtual std::string descriptor() const = 0;
};

inline int predicted_class(double p) noexcept { return p >= 0.5 ? 1 : 0; }

/// Signed score in [-1, 1]; positive means class 1.
inline double signed_score(double p) noexcept { return 2.0 * p - 1.0; }

/// Class 1 -> +1, class 0 -> -1.
inline int class_sign(int cls) noexcept { return cls == 1 ? 1 : -1; }

/// Shared, copyable handle over a Classifier.
class ClassifierHandle {
public:
    ClassifierHandle() = default;
    explicit ClassifierHandle(std::shared_ptr<const Classifier> impl) : impl_(std::move(impl)) {}

    template <typename T, typename... Args>
    static ClassifierHandle make(Args&&... args) {
        return ClassifierHandle(std::make_shared<const T>(std::forward<Args>(args)...));
    }

    explicit operator bool() const noexcept { return static_cast<bool>(impl_); }

    std::vector<double> score_batch(std::span<const Instance> xs) const {
        if (xs.empty()) return {};
        auto scores = impl_->score_batch(xs);
        if (scores.size() != xs.size()) {
            throw ModelIOError(impl_->descriptor() + ": returned " + std::to_string(scores.size()) +
                               " scores for " + std::to_string(xs.size()) + " instances");
        }
        for (double p : scores) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ModelIOError(impl_->descriptor() + ": score " + std::to_string(p) + " outside [0, 1]");
            }
        }
        return scores;
    }

    double score(const Instance& x) const { return score_batch(std::span<const Instance>(&x, 1)).front(); }

    int predict(const Instance& x) const { return predicted_class(score(x)); }

    std::vector<int> predict_batch(std::span<const Instance> xs) const {
        const auto scores = score_batch(xs);
        std::vector<int> out(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) out[i] = predicted_class(scores[i]);
        return out;
    }

    double signed_score(const Instance& x) const { return nicecf::signed_score(score(x)); }

    std::string descriptor() const { return impl_ ? impl_->descriptor() : "<empty>"; }

    const Classifier* get() const noexcept { return impl_.get(); }

private:
    std::shared_ptr<const Classifier> impl_;
};

/// Wraps a callable `double(const Instance&)` as a classifier. Mostly for tests and stubs.
template <typename Fn>
class FunctionClassifier final : public Classifier {
public:
    FunctionClassifier(Fn fn, std::string id) : fn_(std::move(fn)), id_(std::move(id)) {}

    std::vector<double> score_batch(std::span<const Instance> xs) const override {
        std::vector<double> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back(fn_(x));
        return out;
    }

    std::string descriptor() const override { return id_; }

private:
    Fn fn_;
    std::string id_;
};

template <typename Fn>
ClassifierHandle make_function_classifier(Fn fn, std::string id = "function") {
    return ClassifierHandle(std::make_shared<const FunctionClassifier<Fn>>(std::move(fn), std::move(id)));
}

inline ClassifierHandle make_constant_classifier(double p) {
    return make_function_classifier([p](const Instance&) { return p; }, "constant:" + format_value(p));
}

}  // namespace nicecf
