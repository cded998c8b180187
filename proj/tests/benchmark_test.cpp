#include <gtest/gtest.h>

#include "nice/benchmark.hpp"
#include "test_support.hpp"

namespace nicecf {
namespace {

RunConfig small_config() {
    RunConfig cfg;
    cfg.models = {ModelSpec::parse("builtin:logistic"), ModelSpec::parse("builtin:knn:3")};
    cfg.seed = 4;
    cfg.max_instances = 30;
    cfg.autoencoder.epochs = 100;
    return cfg;
}

TEST(ModelSpec, Parse) {
    EXPECT_EQ(ModelSpec::parse("builtin:knn:7").k, 7u);
    EXPECT_EQ(ModelSpec::parse("proc:python3 m.py").target, "python3 m.py");
    EXPECT_EQ(ModelSpec::parse("http:http://h:1/s").kind, ModelSpec::Kind::Http);
    EXPECT_THROW(ModelSpec::parse("builtin:forest"), ConfigError);
    EXPECT_THROW(ModelSpec::parse("builtin:knn:x"), ConfigError);
}

TEST(Benchmark, RecordsEveryExplainerForEveryInstance) {
    const auto data = testing::make_synthetic(200, 3, 2, 19);
    const auto result = run_benchmark(data, small_config());
    ASSERT_EQ(result.runs.size(), 2u);
    for (const auto& run : result.runs) {
        EXPECT_EQ(run.records.size(), 30u);
        for (const auto& group : run.records) {
            ASSERT_EQ(group.size(), 7u);
            for (std::size_t j = 0; j < group.size(); ++j) EXPECT_EQ(group[j].explainer_id, run.explainers[j]);
        }
    }
    EXPECT_EQ(result.runs[0].robustness_against, "builtin:knn:3");
    const auto summary = summary_json(result);
    EXPECT_TRUE(summary.contains("pooled"));
    EXPECT_EQ(summary["runs"].size(), 2u);
}

TEST(Benchmark, ReportsAreDeterministicAndParallelSafe) {
    const auto data = testing::make_synthetic(150, 2, 2, 23);
    auto cfg = small_config();
    const auto a = run_benchmark(data, cfg);
    cfg.workers = 3;
    const auto b = run_benchmark(data, cfg);
    EXPECT_EQ(records_csv(a), records_csv(b));
    EXPECT_EQ(summary_json(a).dump(), summary_json(b).dump());
    EXPECT_EQ(summary_table(a), summary_table(b));
}

TEST(Benchmark, ExternalModelThroughFactory) {
    const auto data = testing::make_synthetic(120, 2, 1, 2);
    RunConfig cfg;
    cfg.models = {ModelSpec::parse("proc:ignored")};
    cfg.explainers = {ExplainerKind::NiceSpars};
    cfg.max_instances = 10;
    int built = 0;
    cfg.external_factory = [&](const ModelSpec& s) {
        ++built;
        EXPECT_EQ(s.target, "ignored");
        return make_function_classifier([](const Instance& x) { return as_number(x[0]) > 5 ? 0.8 : 0.2; }, s.id());
    };
    const auto result = run_benchmark(data, cfg);
    EXPECT_EQ(built, 1);
    EXPECT_EQ(result.runs[0].model_id, "proc:ignored");
}

TEST(Benchmark, WriteReportFiles) {
    const auto data = testing::make_synthetic(120, 2, 2, 29);
    auto cfg = small_config();
    cfg.models.pop_back();
    const auto result = run_benchmark(data, cfg);
    const auto dir = testing::temp_dir("report");
    write_report(result, dir);
    for (const char* f : {"records.csv", "summary.json", "table.txt", "timing.csv"}) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    const auto summary = nlohmann::json::parse(testing::read_file(dir / "summary.json"));
    EXPECT_EQ(summary["runs"][0]["model"], "builtin:logistic");
    std::filesystem::remove_all(dir);
}

TEST(ParallelFor, VisitsEachIndexOnce) {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
}

}  // namespace
}  // namespace nicecf
