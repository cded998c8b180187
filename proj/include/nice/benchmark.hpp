#pragma once

// Evaluation harness: split, fit, train, explain every test instance with every
// configured explainer, score the explanations and aggregate them into reports.
//
// Report files written by write_report():
//   records.csv   one row per (model, instance, explainer)
//   summary.json  coverage, mean metrics, robustness, mean ranks, Friedman, CD
//   table.txt     plain-text panels: coverage/robustness, mean ranks, % best
//   timing.csv    wall-clock time per explanation and the time ranks
//
// The first three depend only on the inputs and the seed; timings vary between
// runs and are kept apart so reports can be compared byte for byte.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nice/classifier.hpp"
#include "nice/distance.hpp"
#include "nice/error.hpp"
#include "nice/eval.hpp"
#include "nice/explainers.hpp"
#include "nice/model.hpp"
#include "nice/plausibility.hpp"
#include "nice/tabular.hpp"

namespace nicecf {

struct ModelSpec {
    enum class Kind { Logistic, Knn, Subprocess, Http };
    Kind kind = Kind::Logistic;
    std::size_t k = 5;
    std::string target;

    /// `builtin:logistic`, `builtin:knn:K`, `proc:CMD` or `http:URL`.
    static ModelSpec parse(const std::string& s) {
        ModelSpec m;
        if (s == "builtin:logistic") return m;
        if (s.rfind("builtin:knn:", 0) == 0) {
            m.kind = Kind::Knn;
            const auto k = parse_number(s.substr(12));
            if (!k || *k < 1 || *k != static_cast<double>(static_cast<std::size_t>(*k))) {
                throw ConfigError("bad k in model spec '" + s + "'");
            }
            m.k = static_cast<std::size_t>(*k);
            return m;
        }
        if (s.rfind("proc:", 0) == 0 && s.size() > 5) {
            m.kind = Kind::Subprocess;
            m.target = s.substr(5);
            return m;
        }
        if (s.rfind("http:", 0) == 0 && s.size() > 5) {
            m.kind = Kind::Http;
            m.target = s.substr(5);
            return m;
        }
        throw ConfigError("unknown model spec '" + s + "' (builtin:logistic|builtin:knn:K|proc:CMD|http:URL)");
    }

    std::string id() const {
        switch (kind) {
            case Kind::Logistic: return "builtin:logistic";
            case Kind::Knn: return "builtin:knn:" + std::to_string(k);
            case Kind::Subprocess: return "proc:" + target;
            case Kind::Http: return "http:" + target;
        }
        return "";
    }
};

struct LogisticConfig {
    int epochs = 500;
    double step = 0.5;
};

/// Builds a model from its spec. External transports are created through
/// `external_factory` so this header does not depend on the transport code.
using ExternalFactory = std::function<ClassifierHandle(const ModelSpec&)>;

inline ClassifierHandle build_model(const ModelSpec& spec, const Dataset& train, const Schema& stats, std::uint64_t seed,
                                    const LogisticConfig& logistic = {}, const ExternalFactory& external_factory = {}) {
    switch (spec.kind) {
        case ModelSpec::Kind::Logistic: return train_logistic(train, stats, logistic.epochs, logistic.step, seed);
        case ModelSpec::Kind::Knn: return train_knn_classifier(train, stats, spec.k);
        case ModelSpec::Kind::Subprocess:
        case ModelSpec::Kind::Http:
            if (!external_factory) throw ConfigError("no transport available for '" + spec.id() + "'");
            return external_factory(spec);
    }
    throw ConfigError("unhandled model kind");
}

struct RunConfig {
    std::vector<ModelSpec> models{ModelSpec{}};
    std::vector<ExplainerKind> explainers{ExplainerKind::NiceNone, ExplainerKind::NiceSpars, ExplainerKind::NiceProx,
                                          ExplainerKind::NicePlaus, ExplainerKind::Wit,      ExplainerKind::Sedc,
                                          ExplainerKind::Cbr};
    nlohmann::json weights = nlohmann::json::object();
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    std::size_t max_instances = 1000;
    std::size_t workers = 1;
    LogisticConfig logistic;
    AEConfig autoencoder;
    double alpha = 0.05;
    ExternalFactory external_factory;
};

struct ModelRun {
    std::string model_id;
    std::vector<std::string> explainers;
    std::vector<std::vector<MetricRecord>> records;   // [instance][explainer]
    std::vector<std::vector<Explanation>> explanations;
    std::optional<std::string> robustness_against;
    std::size_t train_size = 0;
};

struct BenchmarkResult {
    std::vector<ModelRun> runs;
    std::uint64_t seed = 0;
    double alpha = 0.05;
};

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline BenchmarkResult run_benchmark(const Dataset& data, const RunConfig& cfg) {
    if (cfg.models.empty()) throw ConfigError("benchmark needs at least one model");
    if (cfg.explainers.empty()) throw ConfigError("benchmark needs at least one explainer");
    auto [train_part, test_part] = split(data, cfg.test_fraction, cfg.seed);
    auto train = std::make_shared<const Dataset>(std::move(train_part));
    const Schema stats = fit_stats(*train);
    const auto weights = FeatureWeights::from_json(stats, cfg.weights);
    auto scorer = std::make_shared<const AutoencoderScorer>(train_autoencoder(*train, stats, cfg.autoencoder), stats);

    std::vector<Instance> test;
    for (const auto& r : test_part.rows) {
        if (test.size() >= cfg.max_instances) break;
        test.push_back(r);
    }

    std::vector<ClassifierHandle> models;
    for (const auto& spec : cfg.models) {
        models.push_back(build_model(spec, *train, stats, cfg.seed, cfg.logistic, cfg.external_factory));
    }

    BenchmarkResult result;
    result.seed = cfg.seed;
    result.alpha = cfg.alpha;
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const SearchContext ctx(train, stats, models[mi], weights, scorer);
        std::optional<CaseBase> cases;
        if (std::find(cfg.explainers.begin(), cfg.explainers.end(), ExplainerKind::Cbr) != cfg.explainers.end()) {
            cases = build_case_base(ctx);
        }

        ModelRun run;
        run.model_id = cfg.models[mi].id();
        run.train_size = train->size();
        for (auto k : cfg.explainers) run.explainers.push_back(explainer_id(k));
        run.records.resize(test.size());
        run.explanations.resize(test.size());
        parallel_for(test.size(), cfg.workers, [&](std::size_t i) {
            for (auto k : cfg.explainers) {
                auto e = explain(k, test[i], ctx, cases ? &*cases : nullptr);
                run.records[i].push_back(compute_metrics(e, ctx, i, scorer.get()));
                run.explanations[i].push_back(std::move(e));
            }
        });

        if (models.size() > 1) {
            const std::size_t other = (mi + 1) % models.size();
            run.robustness_against = cfg.models[other].id();
            std::vector<Instance> sources, cfs;
            for (const auto& row : run.explanations) {
                for (const auto& e : row) {
                    sources.push_back(e.source);
                    cfs.push_back(e.counterfactual);
                }
            }
            const auto ps = models[other].predict_batch(sources);
            const auto pc = models[other].predict_batch(cfs);
            std::size_t at = 0;
            for (auto& row : run.records) {
                for (auto& r : row) {
                    if (r.valid) r.robust = ps[at] != pc[at];
                    ++at;
                }
            }
        }
        result.runs.push_back(std::move(run));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline std::string num(double v) { return format_value(v); }

inline std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline nlohmann::json nullable(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

struct Aggregate {
    std::vector<double> coverage;
    std::vector<std::optional<double>> robustness;
    std::vector<std::optional<double>> mean_sparsity, mean_proximity, mean_ae, mean_knn5;
};

inline Aggregate aggregate(const ModelRun& run) {
    const std::size_t k = run.explainers.size();
    Aggregate a;
    a.coverage.assign(k, 0.0);
    a.robustness.assign(k, std::nullopt);
    a.mean_sparsity.assign(k, std::nullopt);
    a.mean_proximity.assign(k, std::nullopt);
    a.mean_ae.assign(k, std::nullopt);
    a.mean_knn5.assign(k, std::nullopt);
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t valid = 0, robust_n = 0, robust = 0, ae_n = 0;
        double sp = 0, pr = 0, ae = 0, kn = 0;
        for (const auto& row : run.records) {
            const auto& r = row[j];
            if (!r.valid) continue;
            ++valid;
            sp += *r.sparsity;
            pr += *r.proximity;
            kn += *r.knn5;
            if (r.ae_error) {
                ae += *r.ae_error;
                ++ae_n;
            }
            if (r.robust) {
                ++robust_n;
                robust += *r.robust ? 1 : 0;
            }
        }
        const double n = static_cast<double>(run.records.size());
        a.coverage[j] = n > 0 ? 100.0 * static_cast<double>(valid) / n : 0.0;
        if (valid > 0) {
            const double v = static_cast<double>(valid);
            a.mean_sparsity[j] = sp / v;
            a.mean_proximity[j] = pr / v;
            a.mean_knn5[j] = kn / v;
        }
        if (ae_n > 0) a.mean_ae[j] = ae / static_cast<double>(ae_n);
        if (run.robustness_against && valid > 0) {
            a.robustness[j] = 100.0 * static_cast<double>(robust) / static_cast<double>(robust_n);
        }
    }
    return a;
}

inline nlohmann::json rank_summary(const std::vector<std::vector<MetricRecord>>& groups, Metric metric, double alpha) {
    const auto table = rank_table(groups, metric);
    nlohmann::json j{{"mean_ranks", table.mean_ranks()}, {"percent_best", percent_best(groups, metric)}};
    try {
        const auto f = friedman_test(table, alpha);
        j["friedman"] = {{"statistic", f.statistic}, {"critical_value", f.critical_value}, {"p_value", f.p_value},
                         {"reject", f.reject}};
    } catch (const Error&) {
        j["friedman"] = nullptr;
    }
    try {
        j["critical_difference"] = nemenyi_cd(table.columns(), table.instances(), alpha);
    } catch (const Error&) {
        j["critical_difference"] = nullptr;
    }
    return j;
}

inline constexpr std::array<Metric, 4> kQualityMetrics = {Metric::Proximity, Metric::Sparsity, Metric::AeError,
                                                          Metric::Knn5};

inline std::vector<std::vector<MetricRecord>> pooled(const BenchmarkResult& result) {
    std::vector<std::vector<MetricRecord>> all;
    for (const auto& run : result.runs) all.insert(all.end(), run.records.begin(), run.records.end());
    return all;
}

}  // namespace detail

inline nlohmann::json summary_json(const BenchmarkResult& result) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : result.runs) {
        const auto agg = detail::aggregate(run);
        nlohmann::json per = nlohmann::json::object();
        for (std::size_t j = 0; j < run.explainers.size(); ++j) {
            per[run.explainers[j]] = {{"coverage_pct", agg.coverage[j]},
                                      {"robustness_pct", detail::nullable(agg.robustness[j])},
                                      {"mean_sparsity", detail::nullable(agg.mean_sparsity[j])},
                                      {"mean_proximity", detail::nullable(agg.mean_proximity[j])},
                                      {"mean_ae_error", detail::nullable(agg.mean_ae[j])},
                                      {"mean_knn5", detail::nullable(agg.mean_knn5[j])}};
        }
        nlohmann::json ranks = nlohmann::json::object();
        if (!run.records.empty()) {
            for (auto m : detail::kQualityMetrics) {
                ranks[std::string(to_string(m))] = detail::rank_summary(run.records, m, result.alpha);
            }
        }
        runs.push_back({{"model", run.model_id},
                        {"instances", run.records.size()},
                        {"train_rows", run.train_size},
                        {"explainers", run.explainers},
                        {"robustness_against", run.robustness_against ? nlohmann::json(*run.robustness_against)
                                                                      : nlohmann::json()},
                        {"metrics", std::move(per)},
                        {"ranks", std::move(ranks)}});
    }
    nlohmann::json out{{"seed", result.seed}, {"alpha", result.alpha}, {"runs", std::move(runs)}};
    if (result.runs.size() > 1) {
        const auto all = detail::pooled(result);
        nlohmann::json ranks = nlohmann::json::object();
        if (!all.empty()) {
            for (auto m : detail::kQualityMetrics) {
                ranks[std::string(to_string(m))] = detail::rank_summary(all, m, result.alpha);
            }
        }
        out["pooled"] = {{"instances", all.size()}, {"ranks", std::move(ranks)}};
    }
    return out;
}

inline std::string records_csv(const BenchmarkResult& result) {
    std::ostringstream os;
    os << "model,instance,explainer,valid,sparsity,proximity,ae_error,knn5,robust\n";
    for (const auto& run : result.runs) {
        for (const auto& row : run.records) {
            for (const auto& r : row) {
                os << detail::csv_field(run.model_id) << ',' << r.instance_id << ',' << r.explainer_id << ','
                   << (r.valid ? 1 : 0) << ',';
                os << (r.sparsity ? std::to_string(*r.sparsity) : "") << ',';
                os << (r.proximity ? detail::num(*r.proximity) : "") << ',';
                os << (r.ae_error ? detail::num(*r.ae_error) : "") << ',';
                os << (r.knn5 ? detail::num(*r.knn5) : "") << ',';
                os << (r.robust ? (*r.robust ? "1" : "0") : "") << '\n';
            }
        }
    }
    return os.str();
}

namespace detail {

inline void table_row(std::ostringstream& os, const std::string& label, const std::vector<std::string>& cells) {
    os << std::left << std::setw(22) << label;
    for (const auto& c : cells) os << std::right << std::setw(12) << c;
    os << '\n';
}

inline std::vector<std::string> cells(const std::vector<double>& v, int digits) {
    std::vector<std::string> out;
    for (double x : v) out.push_back(fixed(x, digits));
    return out;
}

inline std::vector<std::string> cells(const std::vector<std::optional<double>>& v, int digits) {
    std::vector<std::string> out;
    for (const auto& x : v) out.push_back(x ? fixed(*x, digits) : "-");
    return out;
}

}  // namespace detail

inline std::string summary_table(const BenchmarkResult& result) {
    std::ostringstream os;
    for (const auto& run : result.runs) {
        const auto agg = detail::aggregate(run);
        const std::size_t rule = 22 + 12 * run.explainers.size();
        os << "Model: " << run.model_id << "  (" << run.records.size() << " explained instances)\n";
        os << std::string(rule, '=') << '\n';
        detail::table_row(os, "", run.explainers);
        os << std::string(rule, '-') << '\n';
        os << "Panel A: algorithm properties\n";
        detail::table_row(os, "Coverage (%)", detail::cells(agg.coverage, 1));
        if (run.robustness_against) detail::table_row(os, "CM robustness (%)", detail::cells(agg.robustness, 1));
        if (!run.records.empty()) {
            os << "Panel B: average ranks";
            try {
                os << " (Nemenyi CD " << detail::fixed(nemenyi_cd(run.explainers.size(), run.records.size(), result.alpha), 3)
                   << ")";
            } catch (const Error&) {
            }
            os << '\n';
            for (auto m : detail::kQualityMetrics) {
                const auto t = rank_table(run.records, m);
                std::string label(to_string(m));
                try {
                    if (friedman_test(t, result.alpha).reject) label += " *";
                } catch (const Error&) {
                }
                detail::table_row(os, label, detail::cells(t.mean_ranks(), 2));
            }
            os << "Panel C: % best\n";
            for (auto m : detail::kQualityMetrics) {
                detail::table_row(os, std::string(to_string(m)), detail::cells(percent_best(run.records, m), 1));
            }
        }
        os << std::string(rule, '=') << "\n\n";
    }
    os << "* Friedman test rejects equal mean ranks at alpha = " << detail::fixed(result.alpha, 2) << '\n';
    return os.str();
}

inline std::string timing_csv(const BenchmarkResult& result) {
    std::ostringstream os;
    os << "model,instance,explainer,valid,time_ms,time_rank\n";
    for (const auto& run : result.runs) {
        const auto table = rank_table(run.records, Metric::Time);
        for (std::size_t i = 0; i < run.records.size(); ++i) {
            for (std::size_t j = 0; j < run.records[i].size(); ++j) {
                const auto& r = run.records[i][j];
                os << detail::csv_field(run.model_id) << ',' << r.instance_id << ',' << r.explainer_id << ','
                   << (r.valid ? 1 : 0) << ',' << detail::fixed(r.time_ms, 4) << ',' << table.ranks[i][j] << '\n';
            }
        }
    }
    return os.str();
}

inline void write_report(const BenchmarkResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto put = [&](const char* name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + (dir / name).string());
        out << text;
    };
    put("records.csv", records_csv(result));
    put("summary.json", summary_json(result).dump(2) + "\n");
    put("table.txt", summary_table(result));
    put("timing.csv", timing_csv(result));
}

}  // namespace nicecf
