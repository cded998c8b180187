#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "nice/tabular.hpp"
#include "test_support.hpp"

namespace nicecf {
namespace {

SchemaSpec age_job_schema() {
    return parse_schema(nlohmann::json::parse(
        R"({"features":[{"name":"age","kind":"numerical"},{"name":"job","kind":"categorical"}],"label":"label"})"));
}

Dataset numeric_column(const std::vector<double>& values) {
    Dataset ds;
    ds.schema.push_back({.name = "x", .kind = FeatureKind::Numerical});
    for (double v : values) ds.rows.push_back(Instance{v});
    return ds;
}

Dataset categorical_column(const std::vector<std::string>& values) {
    Dataset ds;
    ds.schema.push_back({.name = "c", .kind = FeatureKind::Categorical});
    for (const auto& v : values) ds.rows.push_back(Instance{Value(v)});
    return ds;
}

TEST(Ingest, ParsesRowsAndLabels) {
    std::istringstream csv("age,job,label\n30,admin,0\n45,\"tech, senior\",1\n");
    const auto ds = parse_dataset(age_job_schema(), csv);
    ASSERT_EQ(ds.size(), 2u);
    ASSERT_TRUE(ds.has_labels());
    EXPECT_EQ(*ds.labels, (std::vector<int>{0, 1}));
    EXPECT_EQ(as_number(ds.rows[0][0]), 30.0);
    EXPECT_EQ(as_label(ds.rows[1][1]), "tech, senior");
}

TEST(Ingest, EmptyCellReportsRowAndColumn) {
    std::istringstream csv("age,job,label\n30,admin,0\n,tech,1\n");
    try {
        parse_dataset(age_job_schema(), csv);
        FAIL() << "expected IngestError";
    } catch (const IngestError& e) {
        EXPECT_EQ(e.row(), 2u);
        EXPECT_EQ(e.column(), "age");
    }
}

TEST(Ingest, KindMismatchAndBadLabel) {
    std::istringstream bad_number("age,job,label\nold,admin,0\n");
    EXPECT_THROW(parse_dataset(age_job_schema(), bad_number), IngestError);
    std::istringstream bad_label("age,job,label\n30,admin,2\n");
    EXPECT_THROW(parse_dataset(age_job_schema(), bad_label), IngestError);
    std::istringstream bad_header("job,age,label\nadmin,30,0\n");
    EXPECT_THROW(parse_dataset(age_job_schema(), bad_header), IngestError);
}

TEST(Ingest, DeclaredCategoriesAreClosed) {
    const auto spec = parse_schema(nlohmann::json::parse(
        R"({"features":[{"name":"job","kind":"categorical","categories":["admin","tech"]}],"label":null})"));
    std::istringstream ok("job\nadmin\ntech\n");
    EXPECT_EQ(parse_dataset(spec, ok).size(), 2u);
    std::istringstream unknown("job\nadmin\nchef\n");
    EXPECT_THROW(parse_dataset(spec, unknown), IngestError);
}

TEST(Ingest, QuotedFieldsWithEscapesAndNewlines) {
    std::istringstream in("a,\"b \"\"q\"\"\",\"multi\nline\"\r\nnext\n");
    std::vector<std::string> f;
    ASSERT_TRUE(read_csv_record(in, f));
    EXPECT_EQ(f, (std::vector<std::string>{"a", "b \"q\"", "multi\nline"}));
    ASSERT_TRUE(read_csv_record(in, f));
    EXPECT_EQ(f, (std::vector<std::string>{"next"}));
    EXPECT_FALSE(read_csv_record(in, f));
}

TEST(Ingest, CreditShapedFileKeepsCounts) {
    // Same shape as the UCI credit approval data: 690 rows, 10 categorical + 5 numerical.
    Dataset ds;
    SplitMix64 rng(11);
    for (int j = 0; j < 15; ++j) {
        ds.schema.push_back({.name = "A" + std::to_string(j + 1),
                             .kind = j < 10 ? FeatureKind::Categorical : FeatureKind::Numerical});
    }
    ds.label_name = "class";
    ds.labels.emplace();
    for (int i = 0; i < 690; ++i) {
        Instance x;
        for (int j = 0; j < 15; ++j) {
            if (j < 10) {
                x.values.emplace_back("v" + std::to_string(rng.below(4)));
            } else {
                x.values.emplace_back(static_cast<double>(rng.below(1000)) / 10.0);
            }
        }
        ds.rows.push_back(std::move(x));
        ds.labels->push_back(static_cast<int>(rng.below(2)));
    }
    const auto dir = testing::temp_dir("credit");
    testing::write_dataset(ds, dir);
    const auto loaded = load_dataset((dir / "schema.json").string(), (dir / "data.csv").string());
    EXPECT_EQ(loaded.size(), 690u);
    std::size_t cat = 0, num = 0;
    for (const auto& f : loaded.schema) (f.is_categorical() ? cat : num)++;
    EXPECT_EQ(cat, 10u);
    EXPECT_EQ(num, 5u);
    EXPECT_EQ(loaded.rows, ds.rows);
    const auto stats = fit_stats(loaded);
    for (const auto& r : loaded.rows) EXPECT_NO_THROW(validate_instance(stats, r));
    std::filesystem::remove_all(dir);
}

TEST(Stats, NumericalColumn) {
    const auto st = fit_stats(numeric_column({10, 20, 40}));
    EXPECT_EQ(st[0].min, 10.0);
    EXPECT_EQ(st[0].max, 40.0);
    EXPECT_EQ(st[0].range, 30.0);
    EXPECT_NEAR(st[0].mean, 23.333333333, 1e-8);
    EXPECT_NEAR(st[0].std, std::sqrt((13.333333333 * 13.333333333 + 3.333333333 * 3.333333333 + 16.666666667 * 16.666666667) / 3), 1e-6);
}

TEST(Stats, CategoricalModeAndTieBreak) {
    auto st = fit_stats(categorical_column({"a", "b", "a"}));
    EXPECT_EQ(st[0].categories, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(st[0].mode, "a");
    st = fit_stats(categorical_column({"b", "a"}));
    EXPECT_EQ(st[0].mode, "a");
}

TEST(Stats, EmptyDatasetRejected) { EXPECT_THROW(fit_stats(numeric_column({})), StatsError); }

TEST(Split, SizesFollowCeilingRule) {
    auto ten = numeric_column({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    auto [tr, te] = split(ten, 0.2, 7);
    EXPECT_EQ(tr.size(), 8u);
    EXPECT_EQ(te.size(), 2u);
    auto five = numeric_column({0, 1, 2, 3, 4});
    auto [tr5, te5] = split(five, 0.2, 7);
    EXPECT_EQ(tr5.size(), 4u);
    EXPECT_EQ(te5.size(), 1u);
    auto [tr3, te3] = split(ten, 0.3, 1);
    EXPECT_EQ(tr3.size(), 7u);
    EXPECT_EQ(te3.size(), 3u);
}

TEST(Split, DeterministicAndAPartition) {
    const auto ds = testing::make_synthetic(57, 2, 1, 3);
    const auto [a1, b1] = split(ds, 0.25, 42);
    const auto [a2, b2] = split(ds, 0.25, 42);
    EXPECT_EQ(a1.rows, a2.rows);
    EXPECT_EQ(b1.rows, b2.rows);
    EXPECT_EQ(*a1.labels, *a2.labels);
    const auto [a3, b3] = split(ds, 0.25, 43);
    EXPECT_NE(a1.rows, a3.rows);
    EXPECT_EQ(a1.size() + b1.size(), ds.size());
}

TEST(Split, FractionOutOfRange) {
    const auto ds = numeric_column({1, 2, 3});
    EXPECT_THROW(split(ds, 0.0, 1), ConfigError);
    EXPECT_THROW(split(ds, 1.0, 1), ConfigError);
    EXPECT_THROW(split(ds, -0.5, 1), ConfigError);
}

TEST(Encode, MinMaxAndOneHot) {
    Schema stats(2);
    stats[0] = {.name = "n", .kind = FeatureKind::Numerical, .min = 10, .max = 50, .range = 40};
    stats[1] = {.name = "c", .kind = FeatureKind::Categorical, .categories = {"a", "b", "c"}, .mode = "a"};
    EXPECT_EQ(encode(stats, Instance{30.0, Value("b")}), (std::vector<double>{0.5, 0, 1, 0}));
    EXPECT_EQ(encoded_width(stats), 4u);
    // test-time values outside the training range are not clipped
    EXPECT_EQ(encode(stats, Instance{70.0, Value("a")})[0], 1.5);
    EXPECT_THROW(encode(stats, Instance{30.0, Value("z")}), EncodeError);
}

TEST(Encode, ZeroRangeEmitsZero) {
    Schema stats(1);
    stats[0] = {.name = "n", .kind = FeatureKind::Numerical, .min = 10, .max = 10, .range = 0};
    EXPECT_EQ(encode(stats, Instance{10.0}), (std::vector<double>{0.0}));
}

TEST(Encode, TrainingRowsLandInUnitIntervalAndStayDistinct) {
    const auto ds = testing::make_synthetic(300, 3, 2, 5);
    const auto stats = fit_stats(ds);
    std::set<std::vector<double>> seen_enc;
    std::set<std::vector<std::string>> seen_rows;
    for (const auto& r : ds.rows) {
        const auto z = encode(stats, r);
        for (double v : z) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        std::vector<std::string> key;
        for (const auto& v : r.values) key.push_back(format_value(v));
        // distinct rows must encode distinctly
        EXPECT_EQ(seen_rows.insert(key).second, seen_enc.insert(z).second);
    }
}

}  // namespace
}  // namespace nicecf
