// Command-line front end: describe, train, train-ae, explain, benchmark, robustness.
//
// Exit codes: 0 success, 1 usage error (bad flag, missing file), 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "nice/external.hpp"
#include "nice/nice.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string schema;
    std::string data;
    std::vector<std::string> models{"builtin:logistic"};
    std::string other_model;
    std::string model_file;
    std::string ae_file;
    std::string variant = "spars";
    std::vector<std::string> explainers;
    std::string weights;
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    std::size_t max_instances = 1000;
    std::size_t workers = 1;
    std::string out;
    std::vector<std::size_t> indices;
    std::string instances;
    std::size_t batch_size = 1000;
    int logistic_epochs = 500;
    double logistic_step = 0.5;
    int ae_epochs = 1000;
    double ae_step = 0.5;
};

void configure_logging() {
    auto logger = spdlog::stderr_color_st("nice");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("NICE_LOG");
    spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

nicecf::ExternalFactory external_factory(std::size_t batch_size) {
    return [batch_size](const nicecf::ModelSpec& spec) {
        if (spec.kind == nicecf::ModelSpec::Kind::Subprocess) {
            return nicecf::external_model(nicecf::EndpointSpec::subprocess(spec.target, batch_size));
        }
        return nicecf::external_model(nicecf::EndpointSpec::http(spec.target, batch_size));
    };
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw nicecf::ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw nicecf::ConfigError("'" + path + "': " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw nicecf::ConfigError("cannot write '" + path.string() + "'");
    out << text;
    spdlog::info("wrote {}", path.string());
}

// Shared prelude of every data-driven command: load, split, fit on the training half.
struct Prepared {
    nicecf::Dataset data;
    std::shared_ptr<const nicecf::Dataset> train;
    nicecf::Dataset test;
    nicecf::Schema stats;
};

Prepared prepare(const Options& o) {
    Prepared p;
    p.data = nicecf::load_dataset(o.schema, o.data);
    auto [train, test] = nicecf::split(p.data, o.test_fraction, o.seed);
    p.train = std::make_shared<const nicecf::Dataset>(std::move(train));
    p.test = std::move(test);
    p.stats = nicecf::fit_stats(*p.train);
    spdlog::info("{} rows: {} train, {} test", p.data.size(), p.train->size(), p.test.size());
    return p;
}

nicecf::ClassifierHandle load_or_build_model(const Options& o, const Prepared& p, const std::string& spec) {
    if (!o.model_file.empty()) {
        const auto j = read_json_file(o.model_file);
        if (j.value("kind", "") == "logistic") return nicecf::logistic_from_json(j);
        if (j.value("kind", "") == "knn") return nicecf::train_knn_classifier(*p.train, p.stats, j.at("k").get<std::size_t>());
        throw nicecf::ConfigError("unrecognized model file '" + o.model_file + "'");
    }
    return nicecf::build_model(nicecf::ModelSpec::parse(spec), *p.train, p.stats, o.seed,
                             {o.logistic_epochs, o.logistic_step}, external_factory(o.batch_size));
}

std::shared_ptr<const nicecf::PlausibilityScorer> load_or_train_scorer(const Options& o, const Prepared& p) {
    if (!o.ae_file.empty()) {
        auto [ae, stats] = nicecf::autoencoder_from_json(read_json_file(o.ae_file));
        return std::make_shared<const nicecf::AutoencoderScorer>(std::move(ae), std::move(stats));
    }
    auto ae = nicecf::train_autoencoder(*p.train, p.stats, {o.ae_epochs, o.ae_step, o.seed});
    if (ae.degenerate) spdlog::warn("all training rows encode identically; the autoencoder is degenerate");
    return std::make_shared<const nicecf::AutoencoderScorer>(std::move(ae), p.stats);
}

std::vector<nicecf::ExplainerKind> parse_explainers(const std::vector<std::string>& names) {
    std::vector<nicecf::ExplainerKind> out;
    for (const auto& n : names) out.push_back(nicecf::parse_explainer(n));
    return out;
}

// Instances from a CSV in schema order; a trailing label column is accepted and ignored.
std::vector<nicecf::Instance> read_instances(const std::string& schema_path, const std::string& csv_path) {
    auto spec = nicecf::read_schema(schema_path);
    std::ifstream peek(csv_path, std::ios::binary);
    std::vector<std::string> header;
    if (!nicecf::read_csv_record(peek, header)) throw nicecf::IngestError("empty instance file");
    if (header.size() == spec.features.size()) spec.label.reset();
    std::ifstream in(csv_path, std::ios::binary);
    return nicecf::parse_dataset(spec, in).rows;
}

// ---------------------------------------------------------------------------

int cmd_describe(const Options& o) {
    const auto data = nicecf::load_dataset(o.schema, o.data);
    const auto stats = nicecf::fit_stats(data);
    std::cout << data.size() << " rows, " << stats.size() << " features";
    if (data.has_labels()) {
        std::size_t ones = 0;
        for (int y : *data.labels) ones += y == 1 ? 1 : 0;
        std::cout << ", label '" << data.label_name << "' (" << ones << " positive)";
    }
    std::cout << "\n\n";
    std::cout << std::left << std::setw(20) << "feature" << std::setw(13) << "kind" << "statistics\n";
    for (const auto& f : stats) {
        std::cout << std::left << std::setw(20) << f.name << std::setw(13) << nicecf::to_string(f.kind);
        if (f.is_categorical()) {
            std::cout << f.categories.size() << " categories, mode '" << f.mode << "'";
        } else {
            std::cout << "min " << nicecf::format_value(f.min) << ", max " << nicecf::format_value(f.max) << ", mean "
                      << nicecf::format_value(f.mean) << ", std " << nicecf::format_value(f.std);
        }
        std::cout << '\n';
    }
    return 0;
}

int cmd_train(const Options& o) {
    const auto p = prepare(o);
    const auto spec = nicecf::ModelSpec::parse(o.models.front());
    const auto model = nicecf::build_model(spec, *p.train, p.stats, o.seed, {o.logistic_epochs, o.logistic_step});
    json j;
    if (const auto* lr = dynamic_cast<const nicecf::LogisticClassifier*>(model.get())) {
        j = lr->to_json();
    } else if (spec.kind == nicecf::ModelSpec::Kind::Knn) {
        j = {{"kind", "knn"}, {"k", spec.k}};
    } else {
        throw nicecf::ConfigError("only built-in models can be trained");
    }
    auto accuracy = [&](const nicecf::Dataset& d) {
        if (d.rows.empty()) return 0.0;
        const auto pred = model.predict_batch(d.rows);
        std::size_t hit = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == d.label(i) ? 1 : 0;
        return static_cast<double>(hit) / static_cast<double>(pred.size());
    };
    j["train_accuracy"] = accuracy(*p.train);
    j["test_accuracy"] = accuracy(p.test);
    j["seed"] = o.seed;
    j["test_fraction"] = o.test_fraction;
    const fs::path out = fs::path(o.out.empty() ? "." : o.out) / "model.json";
    write_text(out, j.dump(2) + "\n");
    std::cout << "train accuracy " << j["train_accuracy"].get<double>() << ", test accuracy "
              << j["test_accuracy"].get<double>() << "\nmodel written to " << out.string() << '\n';
    return 0;
}

int cmd_train_ae(const Options& o) {
    const auto p = prepare(o);
    const auto ae = nicecf::train_autoencoder(*p.train, p.stats, {o.ae_epochs, o.ae_step, o.seed});
    if (ae.degenerate) spdlog::warn("all training rows encode identically; the autoencoder is degenerate");
    const fs::path out = fs::path(o.out.empty() ? "." : o.out) / "ae.json";
    write_text(out, nicecf::autoencoder_to_json(ae, p.stats).dump() + "\n");
    std::cout << "layers [" << ae.input << ", " << ae.hidden << ", " << ae.input << "], loss "
              << ae.loss_history.front() << " -> " << ae.loss_history.back() << "\nautoencoder written to "
              << out.string() << '\n';
    return 0;
}

int cmd_explain(const Options& o) {
    const auto p = prepare(o);
    const auto model = load_or_build_model(o, p, o.models.front());
    auto kinds = o.explainers.empty()
                     ? std::vector<nicecf::ExplainerKind>{nicecf::parse_explainer("nice-" +
                                                                              std::string(nicecf::to_string(nicecf::parse_reward_kind(o.variant))))}
                     : parse_explainers(o.explainers);
    const auto weights = o.weights.empty() ? nicecf::FeatureWeights{}
                                           : nicecf::FeatureWeights::from_json(p.stats, read_json_file(o.weights));
    const auto scorer = load_or_train_scorer(o, p);
    const nicecf::SearchContext ctx(p.train, p.stats, model, weights, scorer);

    std::vector<nicecf::Instance> targets;
    std::vector<std::size_t> ids;
    if (!o.instances.empty()) {
        targets = read_instances(o.schema, o.instances);
        for (std::size_t i = 0; i < targets.size(); ++i) ids.push_back(i);
    } else if (!o.indices.empty()) {
        for (auto i : o.indices) {
            if (i >= p.test.size()) {
                throw nicecf::ConfigError("index " + std::to_string(i) + " out of range; the test split has " +
                                        std::to_string(p.test.size()) + " rows");
            }
            targets.push_back(p.test.rows[i]);
            ids.push_back(i);
        }
    } else {
        for (std::size_t i = 0; i < p.test.size() && i < o.max_instances; ++i) {
            targets.push_back(p.test.rows[i]);
            ids.push_back(i);
        }
    }

    std::optional<nicecf::CaseBase> cases;
    for (auto k : kinds) {
        if (k == nicecf::ExplainerKind::Cbr && !cases) cases = nicecf::build_case_base(ctx);
    }
    std::vector<json> results(targets.size());
    nicecf::parallel_for(targets.size(), o.workers, [&](std::size_t i) {
        json per = json::array();
        for (auto k : kinds) {
            nicecf::validate_instance(p.stats, targets[i]);
            const auto e = nicecf::explain(k, targets[i], ctx, cases ? &*cases : nullptr);
            auto j = nicecf::explanation_to_json(e, p.stats);
            const auto m = nicecf::compute_metrics(e, ctx, ids[i]);
            j["instance"] = ids[i];
            if (m.valid) {
                j["metrics"] = {{"sparsity", *m.sparsity}, {"proximity", *m.proximity}, {"knn5", *m.knn5}};
                if (m.ae_error) j["metrics"]["ae_error"] = *m.ae_error;
            }
            per.push_back(std::move(j));
        }
        results[i] = per.size() == 1 ? per.front() : per;
    });
    const json doc = results.size() == 1 ? results.front() : json(results);
    if (o.out.empty()) {
        std::cout << doc.dump(2) << '\n';
    } else {
        write_text(fs::path(o.out) / "explanations.json", doc.dump(2) + "\n");
    }
    return 0;
}

int cmd_benchmark(const Options& o) {
    const auto data = nicecf::load_dataset(o.schema, o.data);
    nicecf::RunConfig cfg;
    cfg.models.clear();
    for (const auto& m : o.models) cfg.models.push_back(nicecf::ModelSpec::parse(m));
    if (!o.explainers.empty()) cfg.explainers = parse_explainers(o.explainers);
    if (!o.weights.empty()) cfg.weights = read_json_file(o.weights);
    cfg.seed = o.seed;
    cfg.test_fraction = o.test_fraction;
    cfg.max_instances = o.max_instances;
    cfg.workers = o.workers;
    cfg.logistic = {o.logistic_epochs, o.logistic_step};
    cfg.autoencoder = {o.ae_epochs, o.ae_step, o.seed};
    cfg.external_factory = external_factory(o.batch_size);
    const auto result = nicecf::run_benchmark(data, cfg);
    const fs::path out = o.out.empty() ? fs::path("benchmark-out") : fs::path(o.out);
    nicecf::write_report(result, out);
    std::cout << nicecf::summary_table(result) << "report written to " << out.string() << '\n';
    return 0;
}

int cmd_robustness(const Options& o) {
    const auto p = prepare(o);
    const auto model = load_or_build_model(o, p, o.models.front());
    const auto other = nicecf::build_model(nicecf::ModelSpec::parse(o.other_model), *p.train, p.stats, o.seed,
                                         {o.logistic_epochs, o.logistic_step}, external_factory(o.batch_size));
    auto kinds = o.explainers.empty() ? parse_explainers({"nice-none", "nice-spars", "nice-prox", "nice-plaus", "wit"})
                                      : parse_explainers(o.explainers);
    const auto weights = o.weights.empty() ? nicecf::FeatureWeights{}
                                           : nicecf::FeatureWeights::from_json(p.stats, read_json_file(o.weights));
    std::shared_ptr<const nicecf::PlausibilityScorer> scorer;
    for (auto k : kinds) {
        if (nicecf::needs_scorer(k) && !scorer) scorer = load_or_train_scorer(o, p);
    }
    const nicecf::SearchContext ctx(p.train, p.stats, model, weights, scorer);
    std::optional<nicecf::CaseBase> cases;
    for (auto k : kinds) {
        if (k == nicecf::ExplainerKind::Cbr && !cases) cases = nicecf::build_case_base(ctx);
    }
    const std::size_t n = std::min(o.max_instances, p.test.size());
    json out = {{"model", model.descriptor()}, {"other", other.descriptor()}, {"instances", n}};
    for (auto k : kinds) {
        std::vector<nicecf::Explanation> expls(n);
        nicecf::parallel_for(n, o.workers, [&](std::size_t i) { expls[i] = nicecf::explain(k, p.test.rows[i], ctx, cases ? &*cases : nullptr); });
        out["robustness"][nicecf::explainer_id(k)] = n == 0 ? 0.0 : nicecf::cross_model_robustness(expls, other);
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();
    Options o;
    CLI::App app{"Counterfactual explanations for binary classifiers on tabular data"};
    app.require_subcommand(1);

    auto data_flags = [&](CLI::App* sub) {
        sub->add_option("--schema", o.schema, "Schema JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--data", o.data, "CSV data file with header")->required()->check(CLI::ExistingFile);
    };
    auto split_flags = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Seed for every stochastic step");
        sub->add_option("--test-fraction", o.test_fraction, "Share of rows held out for explanation")
            ->check(CLI::Range(0.0, 1.0));
    };
    auto model_flags = [&](CLI::App* sub) {
        sub->add_option("--model", o.models, "builtin:logistic | builtin:knn:K | proc:CMD | http:URL")->delimiter(',');
        sub->add_option("--logistic-epochs", o.logistic_epochs, "Gradient descent epochs for builtin:logistic");
        sub->add_option("--logistic-step", o.logistic_step, "Step size for builtin:logistic");
        sub->add_option("--batch-size", o.batch_size, "Instances per request to an external model");
    };
    auto ae_flags = [&](CLI::App* sub) {
        sub->add_option("--ae-epochs", o.ae_epochs, "Autoencoder training epochs");
        sub->add_option("--ae-step", o.ae_step, "Autoencoder step size");
    };
    auto explain_flags = [&](CLI::App* sub) {
        sub->add_option("--explainers", o.explainers, "nice-none,nice-spars,nice-prox,nice-plaus,wit,sedc,cbr")
            ->delimiter(',');
        sub->add_option("--weights", o.weights, "JSON {feature: weight}")->check(CLI::ExistingFile);
        sub->add_option("--max-instances", o.max_instances, "Cap on explained test instances");
        sub->add_option("--workers", o.workers, "Threads explaining instances in parallel");
    };

    auto* describe = app.add_subcommand("describe", "Print the schema and per-feature statistics");
    data_flags(describe);

    auto* train = app.add_subcommand("train", "Fit a built-in model on the training split and persist it");
    data_flags(train);
    split_flags(train);
    model_flags(train);
    train->add_option("--out", o.out, "Output directory");

    auto* train_ae = app.add_subcommand("train-ae", "Fit the plausibility autoencoder and persist it");
    data_flags(train_ae);
    split_flags(train_ae);
    ae_flags(train_ae);
    train_ae->add_option("--out", o.out, "Output directory");

    auto* explain = app.add_subcommand("explain", "Explain test-split rows or instances from a CSV");
    data_flags(explain);
    split_flags(explain);
    model_flags(explain);
    ae_flags(explain);
    explain_flags(explain);
    explain->add_option("--variant", o.variant, "NICE reward: none | spars | prox | plaus")
        ->check(CLI::IsMember({"none", "spars", "prox", "plaus"}));
    explain->add_option("--index", o.indices, "Row index within the test split (repeatable)");
    explain->add_option("--instances", o.instances, "CSV of instances to explain")->check(CLI::ExistingFile);
    explain->add_option("--model-file", o.model_file, "Model written by 'train'")->check(CLI::ExistingFile);
    explain->add_option("--ae-file", o.ae_file, "Autoencoder written by 'train-ae'")->check(CLI::ExistingFile);
    explain->add_option("--out", o.out, "Output directory (default: stdout)");

    auto* bench = app.add_subcommand("benchmark", "Explain the test split with every explainer and write reports");
    data_flags(bench);
    split_flags(bench);
    model_flags(bench);
    ae_flags(bench);
    explain_flags(bench);
    bench->add_option("--out", o.out, "Report directory");

    auto* robust = app.add_subcommand("robustness", "Share of explanations that stay valid under a second model");
    data_flags(robust);
    split_flags(robust);
    model_flags(robust);
    ae_flags(robust);
    explain_flags(robust);
    robust->add_option("--other-model", o.other_model, "Second model spec")->required();
    robust->add_option("--model-file", o.model_file, "Model written by 'train'")->check(CLI::ExistingFile);
    robust->add_option("--ae-file", o.ae_file, "Autoencoder written by 'train-ae'")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*describe) return cmd_describe(o);
        if (*train) return cmd_train(o);
        if (*train_ae) return cmd_train_ae(o);
        if (*explain) return cmd_explain(o);
        if (*bench) return cmd_benchmark(o);
        if (*robust) return cmd_robustness(o);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 1;
}
