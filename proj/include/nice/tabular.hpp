#pragma once

// Tabular data model: schema, typed rows, CSV ingestion, training statistics,
// seeded train/test splitting and the numeric encoding shared by the built-in
// classifiers and the autoencoder.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nice/error.hpp"
#include "nice/rng.hpp"

namespace nicecf {

enum class FeatureKind { Categorical, Numerical };

inline std::string_view to_string(FeatureKind kind) {
    return kind == FeatureKind::Categorical ? "categorical" : "numerical";
}

/// A single cell: a real for numerical features, a category label for categorical ones.
using Value = std::variant<double, std::string>;

inline bool is_number(const Value& v) noexcept { return std::holds_alternative<double>(v); }
inline double as_number(const Value& v) { return std::get<double>(v); }
inline const std::string& as_label(const Value& v) { return std::get<std::string>(v); }

/// Shortest round-trip decimal form for numbers; the label itself for categories.
inline std::string format_value(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), std::get<double>(v));
    return std::string(buf, res.ptr);
}

struct FeatureStats {
    std::string name;
    FeatureKind kind = FeatureKind::Numerical;

    // numerical
    double min = 0.0;
    double max = 0.0;
    double range = 0.0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation

    // categorical; stored order drives the one-hot layout
    std::vector<std::string> categories;
    std::string mode;
    bool declared_categories = false;  // closed set given by the schema file

    bool is_categorical() const noexcept { return kind == FeatureKind::Categorical; }

    std::optional<std::size_t> category_index(std::string_view label) const {
        for (std::size_t i = 0; i < categories.size(); ++i) {
            if (categories[i] == label) return i;
        }
        return std::nullopt;
    }
};

using Schema = std::vector<FeatureStats>;

struct Instance {
    std::vector<Value> values;

    Instance() = default;
    explicit Instance(std::vector<Value> v) : values(std::move(v)) {}
    Instance(std::initializer_list<Value> v) : values(v) {}

    std::size_t size() const noexcept { return values.size(); }
    const Value& operator[](std::size_t i) const { return values[i]; }
    Value& operator[](std::size_t i) { return values[i]; }

    friend bool operator==(const Instance&, const Instance&) = default;
};

/// Feature indices where two instances of the same schema differ.
inline std::vector<std::size_t> differing_features(const Instance& a, const Instance& b) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) out.push_back(i);
    }
    return out;
}

struct Dataset {
    Schema schema;
    std::vector<Instance> rows;
    std::optional<std::vector<int>> labels;  // classes in {0, 1}
    std::string label_name;

    std::size_t size() const noexcept { return rows.size(); }
    bool has_labels() const noexcept { return labels.has_value(); }
    int label(std::size_t row) const { return labels->at(row); }
};

/// Throws EncodeError if `x` does not fit the schema (length, kinds, closed category set).
inline void validate_instance(const Schema& schema, const Instance& x) {
    if (x.size() != schema.size()) {
        throw EncodeError("instance has " + std::to_string(x.size()) + " values, schema has " +
                          std::to_string(schema.size()) + " features");
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto& f = schema[i];
        if (f.is_categorical()) {
            if (is_number(x[i])) throw EncodeError("feature '" + f.name + "' expects a category label");
            if (!f.categories.empty() && !f.category_index(as_label(x[i]))) {
                throw EncodeError("feature '" + f.name + "': unseen category '" + as_label(x[i]) + "'");
            }
        } else {
            if (!is_number(x[i])) throw EncodeError("feature '" + f.name + "' expects a number");
            if (!std::isfinite(as_number(x[i]))) throw EncodeError("feature '" + f.name + "' is not finite");
        }
    }
}

// ---------------------------------------------------------------------------
// Ingestion

struct SchemaSpec {
    Schema features;
    std::optional<std::string> label;
};

inline SchemaSpec parse_schema(const nlohmann::json& j) {
    SchemaSpec spec;
    if (!j.is_object() || !j.contains("features") || !j["features"].is_array()) {
        throw IngestError("schema must be an object with a 'features' array");
    }
    for (const auto& f : j["features"]) {
        FeatureStats st;
        st.name = f.at("name").get<std::string>();
        const auto kind = f.at("kind").get<std::string>();
        if (kind == "categorical") {
            st.kind = FeatureKind::Categorical;
        } else if (kind == "numerical") {
            st.kind = FeatureKind::Numerical;
        } else {
            throw IngestError("feature '" + st.name + "' has unknown kind '" + kind + "'");
        }
        if (f.contains("categories")) {
            if (!st.is_categorical()) throw IngestError("numerical feature '" + st.name + "' declares categories");
            st.categories = f["categories"].get<std::vector<std::string>>();
            if (st.categories.empty()) throw IngestError("feature '" + st.name + "' declares no categories");
            st.declared_categories = true;
        }
        spec.features.push_back(std::move(st));
    }
    if (spec.features.empty()) throw IngestError("schema declares no features");
    if (j.contains("label") && !j["label"].is_null()) spec.label = j["label"].get<std::string>();
    return spec;
}

inline SchemaSpec read_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open schema file '" + path + "'");
    try {
        return parse_schema(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw IngestError("schema file '" + path + "': " + e.what());
    }
}

/// RFC-4180 record reader: quoted fields, doubled quotes, embedded separators and
/// line breaks. Returns false at end of input.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get(c);
            break;
        } else if (c == '\n') {
            break;
        } else {
            field.push_back(c);
        }
    }
    if (quoted) throw IngestError("unterminated quoted field");
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

inline std::optional<double> parse_number(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Parses CSV rows against a schema. The header must list the features in schema
/// order, followed by the label column when the schema names one.
inline Dataset parse_dataset(const SchemaSpec& spec, std::istream& csv) {
    Dataset ds;
    ds.schema = spec.features;
    if (spec.label) ds.label_name = *spec.label;

    std::vector<std::string> header;
    if (!read_csv_record(csv, header)) throw IngestError("empty data file");
    const std::size_t m = spec.features.size();
    const std::size_t width = m + (spec.label ? 1 : 0);
    if (header.size() != width) {
        throw IngestError("header has " + std::to_string(header.size()) + " columns, expected " +
                          std::to_string(width));
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (header[i] != spec.features[i].name) {
            throw IngestError(0, header[i], "header does not match schema feature '" + spec.features[i].name + "'");
        }
    }
    if (spec.label && header[m] != *spec.label) {
        throw IngestError(0, header[m], "header does not match label column '" + *spec.label + "'");
    }

    std::vector<int> labels;
    std::vector<std::string> fields;
    std::size_t row = 0;
    while (read_csv_record(csv, fields)) {
        ++row;
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        if (fields.size() != width) {
            throw IngestError(row, "", "expected " + std::to_string(width) + " fields, found " +
                                           std::to_string(fields.size()));
        }
        Instance x;
        x.values.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& f = spec.features[i];
            const auto& cell = fields[i];
            if (cell.empty()) throw IngestError(row, f.name, "missing value");
            if (f.is_categorical()) {
                if (f.declared_categories && !f.category_index(cell)) {
                    throw IngestError(row, f.name, "unknown category '" + cell + "'");
                }
                x.values.emplace_back(cell);
            } else {
                auto v = parse_number(cell);
                if (!v) throw IngestError(row, f.name, "'" + cell + "' is not a number");
                x.values.emplace_back(*v);
            }
        }
        if (spec.label) {
            const auto& cell = fields[m];
            if (cell.empty()) throw IngestError(row, *spec.label, "missing value");
            auto v = parse_number(cell);
            if (!v || (*v != 0.0 && *v != 1.0)) throw IngestError(row, *spec.label, "label must be 0 or 1");
            labels.push_back(static_cast<int>(*v));
        }
        ds.rows.push_back(std::move(x));
    }
    if (spec.label) ds.labels = std::move(labels);
    return ds;
}

inline Dataset load_dataset(const std::string& schema_file, const std::string& csv_file) {
    const auto spec = read_schema(schema_file);
    std::ifstream in(csv_file, std::ios::binary);
    if (!in) throw IngestError("cannot open data file '" + csv_file + "'");
    return parse_dataset(spec, in);
}

// ---------------------------------------------------------------------------
// Statistics

/// Per-feature statistics from the training rows. Categories are the declared set
/// when the schema gives one, otherwise the observed labels in ascending order.
inline Schema fit_stats(const Dataset& train) {
    if (train.rows.empty()) throw StatsError("cannot fit statistics on an empty dataset");
    Schema out;
    out.reserve(train.schema.size());
    for (std::size_t j = 0; j < train.schema.size(); ++j) {
        FeatureStats st;
        st.name = train.schema[j].name;
        st.kind = train.schema[j].kind;
        st.declared_categories = train.schema[j].declared_categories;
        if (st.is_categorical()) {
            std::map<std::string, std::size_t> counts;
            for (const auto& r : train.rows) ++counts[as_label(r[j])];
            st.categories = st.declared_categories ? train.schema[j].categories : std::vector<std::string>{};
            std::size_t best = 0;
            for (const auto& [label, n] : counts) {  // ascending keys: first maximum wins ties
                if (!st.declared_categories) st.categories.push_back(label);
                if (n > best) {
                    best = n;
                    st.mode = label;
                }
            }
        } else {
            double lo = as_number(train.rows.front()[j]);
            double hi = lo;
            double sum = 0.0;
            for (const auto& r : train.rows) {
                const double v = as_number(r[j]);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
            }
            const double n = static_cast<double>(train.rows.size());
            const double mean = sum / n;
            double ss = 0.0;
            for (const auto& r : train.rows) {
                const double d = as_number(r[j]) - mean;
                ss += d * d;
            }
            st.min = lo;
            st.max = hi;
            st.range = hi - lo;
            st.mean = std::clamp(mean, lo, hi);
            st.std = std::sqrt(ss / n);
        }
        out.push_back(std::move(st));
    }
    return out;
}

/// Instance made of the training mean of every numerical feature and the mode of
/// every categorical feature.
inline Instance mean_mode_instance(const Schema& stats) {
    Instance x;
    x.values.reserve(stats.size());
    for (const auto& f : stats) {
        if (f.is_categorical()) {
            x.values.emplace_back(f.mode);
        } else {
            x.values.emplace_back(f.mean);
        }
    }
    return x;
}

// ---------------------------------------------------------------------------
// Splitting

/// Seeded shuffle into ceil(n * (1 - test_fraction)) training rows and the rest.
/// Both halves carry the input schema unchanged; refit statistics on the training half.
inline std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie in (0, 1)");
    }
    const std::size_t n = dataset.rows.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    SplitMix64 rng(seed);
    rng.shuffle(order);

    // The epsilon absorbs representation error such as 10 * (1 - 0.3) = 7.000000000000001.
    const double exact = static_cast<double>(n) * (1.0 - test_fraction);
    const auto n_train = std::min(n, static_cast<std::size_t>(std::ceil(exact - 1e-9)));

    auto take = [&](std::size_t from, std::size_t to) {
        Dataset part;
        part.schema = dataset.schema;
        part.label_name = dataset.label_name;
        if (dataset.labels) part.labels.emplace();
        for (std::size_t i = from; i < to; ++i) {
            part.rows.push_back(dataset.rows[order[i]]);
            if (dataset.labels) part.labels->push_back((*dataset.labels)[order[i]]);
        }
        return part;
    };
    return {take(0, n_train), take(n_train, n)};
}

// ---------------------------------------------------------------------------
// Encoding

inline std::size_t encoded_width(const Schema& stats) {
    std::size_t w = 0;
    for (const auto& f : stats) w += f.is_categorical() ? f.categories.size() : 1;
    return w;
}

/// Min-max scaled numericals (unclipped; 0 for a zero range) and one-hot
/// categoricals, in schema order. Appends to `out`.
inline void encode_into(const Schema& stats, const Instance& x, std::vector<double>& out) {
    if (x.size() != stats.size()) throw EncodeError("instance length does not match schema");
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& f = stats[i];
        if (f.is_categorical()) {
            if (is_number(x[i])) throw EncodeError("feature '" + f.name + "' expects a category label");
            const auto idx = f.category_index(as_label(x[i]));
            if (!idx) throw EncodeError("feature '" + f.name + "': unseen category '" + as_label(x[i]) + "'");
            for (std::size_t c = 0; c < f.categories.size(); ++c) out.push_back(c == *idx ? 1.0 : 0.0);
        } else {
            if (!is_number(x[i])) throw EncodeError("feature '" + f.name + "' expects a number");
            out.push_back(f.range > 0.0 ? (as_number(x[i]) - f.min) / f.range : 0.0);
        }
    }
}

inline std::vector<double> encode(const Schema& stats, const Instance& x) {
    std::vector<double> out;
    out.reserve(encoded_width(stats));
    encode_into(stats, x, out);
    return out;
}

}  // namespace nicecf
